#ifndef TEXTRGCN_CLI_CONFIG_HPP
#define TEXTRGCN_CLI_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "textrgcn/corpus.hpp"
#include "textrgcn/graph.hpp"
#include "textrgcn/train.hpp"

namespace textrgcn::cli {

enum class FeatureMode { External, OneHot };

struct Paths {
  std::filesystem::path out = "out";
  std::filesystem::path corpus;
  std::filesystem::path stopwords;
  std::filesystem::path substitutions;
  // Stage artifacts; empty means the default file name inside `out`.
  std::filesystem::path tokenized;
  std::filesystem::path vocabulary;
  std::filesystem::path graph;
  std::filesystem::path checkpoint;
  std::filesystem::path doc_features;
  std::filesystem::path word_features;

  std::filesystem::path tokenized_or_default() const;
  std::filesystem::path vocabulary_or_default() const;
  std::filesystem::path graph_or_default() const;
  std::filesystem::path checkpoint_or_default() const;
};

struct PipelineConfig {
  std::uint64_t seed = 42;
  Paths paths;
  PreprocessConfig preprocess;
  SplitRatios split;
  std::optional<ClassIndex> balance_target;
  GraphBuildOptions graph;
  AdjacencyOptions adjacency;
  FeatureMode features = FeatureMode::External;
  TrainConfig train;
  std::string evaluate_split = "test";

  /// Applies one `section.key = value` assignment. Relative paths resolve
  /// against base_dir. Errors: InvalidArgument for unknown keys or values
  /// that do not parse.
  void set(std::string_view key, std::string_view value,
           const std::filesystem::path& base_dir = {});

  /// Every accepted key, in documentation order.
  static const std::vector<std::string>& keys();
};

/// Flat text format: one `key = value` per line, `#` starts a comment.
/// Path values are relative to the config file's directory.
PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace textrgcn::cli

#endif  // TEXTRGCN_CLI_CONFIG_HPP
