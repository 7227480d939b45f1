#ifndef TEXTRGCN_CHECKPOINT_HPP
#define TEXTRGCN_CHECKPOINT_HPP

#include <cstddef>
#include <iosfwd>
#include <string>

#include "textrgcn/rgcn.hpp"

namespace textrgcn {

/// A trained model plus the node count of the graph it was trained on.
struct Checkpoint {
  RGCNModel model;
  std::size_t num_nodes = 0;
};

// RGC1 layout, little-endian:
//   "RGC1" | u32 format version (1) | u64 num_nodes | u32 num_layers
//   | u32 input_dim | u32 hidden_dim | u32 num_classes | u8 basis
//   | u32 num_bases | f64 dropout | u32 num_channels
//   | per channel: u16 name length, name bytes
//   | per layer: u32 in_dim, u32 out_dim
//   | every parameter tensor in RGCNModel::parameters() order, as
//     u32 rows, u32 cols, rows*cols f64 values row-major.
void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace textrgcn

#endif  // TEXTRGCN_CHECKPOINT_HPP
