#include "textrgcn/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include "binary_io.hpp"
#include "textrgcn/error.hpp"

namespace textrgcn {

using detail::get_le;
using detail::put_le;

namespace {

constexpr std::array<char, 4> kMagic{'R', 'G', 'C', '1'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
T read_le(std::istream& in, const char* what) {
  T v{};
  if (!get_le(in, v)) {
    throw Error(ErrorCode::TruncatedRecord, std::string("checkpoint truncated at ") + what);
  }
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  const auto& model = checkpoint.model;
  const auto& cfg = model.config();
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, checkpoint.num_nodes);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.num_layers));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.input_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.hidden_dim));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.num_classes));
  put_le<std::uint8_t>(out, cfg.basis ? 1 : 0);
  const std::size_t bases = cfg.basis ? model.layers().front().bases.size() : 0;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(bases));
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(cfg.dropout));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.num_channels));
  for (std::size_t c = 0; c < cfg.num_channels; ++c) {
    const auto name = to_string(kChannels[c]);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (const auto& layer : model.layers()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.in_dim));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.out_dim));
  }
  for (const Matrix* t : model.parameters()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t->rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t->cols()));
    for (Eigen::Index i = 0; i < t->size(); ++i) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(t->data()[i]));
    }
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::BadMagic, "checkpoint does not start with RGC1");
  }
  if (const auto v = read_le<std::uint32_t>(in, "version"); v != kFormatVersion) {
    throw Error(ErrorCode::MalformedRecord, "unsupported checkpoint version " + std::to_string(v));
  }
  Checkpoint cp;
  cp.num_nodes = read_le<std::uint64_t>(in, "node count");
  ModelConfig cfg;
  cfg.num_layers = read_le<std::uint32_t>(in, "layer count");
  cfg.input_dim = read_le<std::uint32_t>(in, "input dim");
  cfg.hidden_dim = read_le<std::uint32_t>(in, "hidden dim");
  cfg.num_classes = read_le<std::uint32_t>(in, "class count");
  cfg.basis = read_le<std::uint8_t>(in, "basis flag") != 0;
  cfg.num_bases = read_le<std::uint32_t>(in, "basis count");
  cfg.dropout = std::bit_cast<double>(read_le<std::uint64_t>(in, "dropout"));
  cfg.num_channels = read_le<std::uint32_t>(in, "channel count");
  if (cfg.num_channels == 0 || cfg.num_channels > kNumMessageChannels) {
    throw Error(ErrorCode::MalformedRecord, "checkpoint declares an invalid channel count");
  }
  for (std::size_t c = 0; c < cfg.num_channels; ++c) {
    const auto len = read_le<std::uint16_t>(in, "channel name");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw Error(ErrorCode::TruncatedRecord, "channel name");
    if (name != to_string(kChannels[c])) {
      throw Error(ErrorCode::MalformedRecord, "unexpected channel '" + name + "'");
    }
  }
  if (cfg.num_layers == 0 || cfg.num_layers > 64) {
    throw Error(ErrorCode::MalformedRecord, "implausible layer count");
  }

  std::vector<LayerParams> layers(cfg.num_layers);
  for (auto& layer : layers) {
    layer.in_dim = read_le<std::uint32_t>(in, "layer dims");
    layer.out_dim = read_le<std::uint32_t>(in, "layer dims");
    layer.basis = cfg.basis;
    auto zero = [&] { return Matrix::Zero(static_cast<Eigen::Index>(layer.in_dim),
                                          static_cast<Eigen::Index>(layer.out_dim)); };
    if (cfg.basis) {
      layer.bases.assign(cfg.num_bases, zero());
      layer.coefficients = Matrix::Zero(static_cast<Eigen::Index>(cfg.num_channels),
                                        static_cast<Eigen::Index>(cfg.num_bases));
    } else {
      layer.relation_weights.assign(cfg.num_channels, zero());
    }
    layer.self_weight = zero();
  }
  for (auto& layer : layers) {
    for (Matrix* t : layer.tensors()) {
      const auto rows = read_le<std::uint32_t>(in, "tensor shape");
      const auto cols = read_le<std::uint32_t>(in, "tensor shape");
      if (rows != t->rows() || cols != t->cols()) {
        throw Error(ErrorCode::ShapeMismatch, "checkpoint tensor shape disagrees with layer dims");
      }
      for (Eigen::Index i = 0; i < t->size(); ++i) {
        t->data()[i] = std::bit_cast<double>(read_le<std::uint64_t>(in, "tensor data"));
      }
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::MalformedRecord, "trailing bytes after checkpoint");
  }
  cp.model = RGCNModel(cfg, std::move(layers));
  return cp;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write checkpoint '" + path + "'");
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace textrgcn
