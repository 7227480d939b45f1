#include "textrgcn/features.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "binary_io.hpp"
#include "textrgcn/error.hpp"

namespace textrgcn {
using detail::get_le;
using detail::put_le;

namespace {

constexpr std::array<char, 4> kMagic{'N', 'F', 'F', '1'};

bool has_valid_prefix(std::string_view key) {
  return (key.starts_with("doc:") && key.size() > 4) ||
         (key.starts_with("word:") && key.size() > 5);
}

}  // namespace

void FeatureFile::add(std::string key, std::vector<float> vector) {
  if (vector.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch,
                "record '" + key + "' has " + std::to_string(vector.size()) +
                    " values, expected " + std::to_string(dimension_));
  }
  if (!has_valid_prefix(key)) {
    throw Error(ErrorCode::MalformedRecord,
                "key '" + key + "' lacks a doc: or word: prefix");
  }
  if (key.size() > 0xFFFF) {
    throw Error(ErrorCode::MalformedRecord, "key longer than 65535 bytes");
  }
  for (const float v : vector) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteInput, "record '" + key + "' has a non-finite value");
    }
  }
  if (!index_.emplace(key, keys_.size()).second) {
    throw Error(ErrorCode::MalformedRecord, "key '" + key + "' appears twice");
  }
  keys_.push_back(std::move(key));
  vectors_.push_back(std::move(vector));
}

const std::vector<float>* FeatureFile::find(std::string_view key) const {
  const auto it = index_.find(std::string(key));
  return it == index_.end() ? nullptr : &vectors_[it->second];
}

FeatureFile read_feature_file(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(ErrorCode::BadMagic, "feature file does not start with NFF1");
  }
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  if (!get_le(in, count) || !get_le(in, dim)) {
    throw Error(ErrorCode::TruncatedRecord, "feature file header is truncated");
  }
  FeatureFile file(dim);
  std::string key;
  for (std::uint32_t r = 0; r < count; ++r) {
    const std::string where = "record " + std::to_string(r);
    std::uint16_t key_len = 0;
    if (!get_le(in, key_len)) throw Error(ErrorCode::TruncatedRecord, where + ": missing key length");
    key.resize(key_len);
    if (!in.read(key.data(), key_len)) {
      throw Error(ErrorCode::TruncatedRecord, where + ": key bytes cut short");
    }
    std::vector<float> values(dim);
    for (std::uint32_t k = 0; k < dim; ++k) {
      std::uint32_t bits = 0;
      if (!get_le(in, bits)) {
        throw Error(ErrorCode::TruncatedRecord,
                    where + " ('" + key + "'): " + std::to_string(k) + " of " +
                        std::to_string(dim) + " floats present");
      }
      values[k] = std::bit_cast<float>(bits);
    }
    file.add(key, std::move(values));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::MalformedRecord, "trailing bytes after last record");
  }
  return file;
}

FeatureFile load_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open feature file '" + path + "'");
  return read_feature_file(in);
}

void write_feature_file(std::ostream& out, const FeatureFile& file) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.size()));
  put_le<std::uint32_t>(out, file.dimension());
  for (std::size_t r = 0; r < file.size(); ++r) {
    const auto& key = file.key(r);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    for (const float v : file.vector(r)) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
}

void save_feature_file(const std::string& path, const FeatureFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write feature file '" + path + "'");
  write_feature_file(out, file);
}

std::vector<double> min_pool(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyPool, "min_pool over zero vectors");
  std::vector<double> out = vectors.front();
  for (const auto& v : vectors.subspan(1)) {
    if (v.size() != out.size()) {
      throw Error(ErrorCode::DimensionMismatch, "min_pool over vectors of unequal length");
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::min(out[k], v[k]);
  }
  return out;
}

Matrix assemble_features(const HeteroTextGraph& graph, const FeatureSource& source) {
  const auto n = static_cast<Eigen::Index>(graph.num_nodes());
  if (std::holds_alternative<OneHotFeatures>(source)) return Matrix::Identity(n, n);

  const auto& ext = std::get<ExternalFeatures>(source);
  if (ext.documents == nullptr || ext.words == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "external features need both document and word files");
  }
  if (ext.documents->dimension() != ext.words->dimension()) {
    throw Error(ErrorCode::DimensionMismatch,
                "document features have dimension " +
                    std::to_string(ext.documents->dimension()) + ", word features " +
                    std::to_string(ext.words->dimension()));
  }
  const auto dim = static_cast<Eigen::Index>(ext.documents->dimension());
  Matrix x(n, dim);
  for (NodeIndex i = 0; i < graph.num_nodes(); ++i) {
    const bool is_doc = graph.node_type(i) == NodeType::Document;
    const std::string key = is_doc ? document_key(graph.key(i)) : word_key(graph.key(i));
    const auto* vec = (is_doc ? ext.documents : ext.words)->find(key);
    if (vec == nullptr) throw Error(ErrorCode::MissingKey, key);
    for (Eigen::Index k = 0; k < dim; ++k) x(i, k) = static_cast<double>((*vec)[k]);
  }
  return x;
}

}  // namespace textrgcn
