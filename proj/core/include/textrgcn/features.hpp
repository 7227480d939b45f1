#ifndef TEXTRGCN_FEATURES_HPP
#define TEXTRGCN_FEATURES_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "textrgcn/graph.hpp"
#include "textrgcn/sparse.hpp"

namespace textrgcn {

/// Keyed float32 vectors of one shared dimension, as stored in an NFF1
/// file. Keys are "doc:<id>" or "word:<token>"; record order is preserved.
class FeatureFile {
 public:
  explicit FeatureFile(std::uint32_t dimension = 0) : dimension_(dimension) {}

  std::uint32_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }

  /// Appends a record. Errors: DimensionMismatch, MalformedRecord (bad key
  /// prefix or repeated key), NonFiniteInput.
  void add(std::string key, std::vector<float> vector);

  bool contains(std::string_view key) const { return index_.contains(std::string(key)); }
  /// nullptr when absent.
  const std::vector<float>* find(std::string_view key) const;

  const std::string& key(std::size_t i) const { return keys_.at(i); }
  const std::vector<float>& vector(std::size_t i) const { return vectors_.at(i); }

 private:
  std::uint32_t dimension_;
  std::vector<std::string> keys_;
  std::vector<std::vector<float>> vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline std::string document_key(std::string_view id) { return "doc:" + std::string(id); }
inline std::string word_key(std::string_view token) { return "word:" + std::string(token); }

/// Binary little-endian layout: "NFF1", u32 record count, u32 dimension,
/// then per record u16 key length, key bytes and dimension float32 values.
/// Errors: BadMagic, DimensionMismatch, TruncatedRecord, MalformedRecord.
FeatureFile read_feature_file(std::istream& in);
FeatureFile load_feature_file(const std::string& path);
void write_feature_file(std::ostream& out, const FeatureFile& file);
void save_feature_file(const std::string& path, const FeatureFile& file);

/// Elementwise minimum. Errors: EmptyPool, DimensionMismatch.
std::vector<double> min_pool(std::span<const std::vector<double>> vectors);

struct OneHotFeatures {};

struct ExternalFeatures {
  const FeatureFile* documents = nullptr;
  const FeatureFile* words = nullptr;
};

/// A single source feeds every node; mixing sources is not expressible.
using FeatureSource = std::variant<OneHotFeatures, ExternalFeatures>;

/// Node-ordered feature rows: document i takes "doc:<key>", word node D + m
/// takes "word:<token>". One-hot mode yields the N x N identity.
/// Errors: MissingKey (naming the absent key), DimensionMismatch.
Matrix assemble_features(const HeteroTextGraph& graph, const FeatureSource& source);

}  // namespace textrgcn

#endif  // TEXTRGCN_FEATURES_HPP
