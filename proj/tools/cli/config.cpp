#include "config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <utility>

#include "textrgcn/error.hpp"

namespace textrgcn::cli {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  throw Error(ErrorCode::InvalidArgument, "config key '" + std::string(key) + "': expected " +
                                              std::string(want) + ", got '" + std::string(value) +
                                              "'");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

template <typename T>
T parse_number(std::string_view key, std::string_view v, std::string_view want) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) bad_value(key, v, want);
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  return parse_number<std::size_t>(key, v, "a non-negative integer");
}

double parse_real(std::string_view key, std::string_view v) {
  return parse_number<double>(key, v, "a real number");
}

fs::path parse_path(std::string_view v, const fs::path& base) {
  fs::path p{std::string(v)};
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

bool is_unset(std::string_view v) { return v.empty() || v == "none"; }

using Setter = std::function<void(PipelineConfig&, std::string_view key, std::string_view value,
                                  const fs::path& base)>;

Setter path_setter(fs::path Paths::*member) {
  return [member](PipelineConfig& c, std::string_view, std::string_view v, const fs::path& base) {
    c.paths.*member = parse_path(v, base);
  };
}

Setter flag_setter(bool PreprocessConfig::*member) {
  return [member](PipelineConfig& c, std::string_view k, std::string_view v, const fs::path&) {
    c.preprocess.*member = parse_bool(k, v);
  };
}

Setter ratio_setter(double SplitRatios::*member) {
  return [member](PipelineConfig& c, std::string_view k, std::string_view v, const fs::path&) {
    c.split.*member = parse_real(k, v);
  };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"seed",
       [](PipelineConfig& c, auto k, auto v, const auto&) {
         c.seed = parse_number<std::uint64_t>(k, v, "an unsigned integer");
       }},
      {"paths.out", path_setter(&Paths::out)},
      {"paths.corpus", path_setter(&Paths::corpus)},
      {"paths.stopwords", path_setter(&Paths::stopwords)},
      {"paths.substitutions", path_setter(&Paths::substitutions)},
      {"paths.tokenized", path_setter(&Paths::tokenized)},
      {"paths.vocabulary", path_setter(&Paths::vocabulary)},
      {"paths.graph", path_setter(&Paths::graph)},
      {"paths.checkpoint", path_setter(&Paths::checkpoint)},
      {"paths.doc_features", path_setter(&Paths::doc_features)},
      {"paths.word_features", path_setter(&Paths::word_features)},
      {"preprocess.lowercase", flag_setter(&PreprocessConfig::lowercase)},
      {"preprocess.strip_punctuation", flag_setter(&PreprocessConfig::strip_punctuation)},
      {"preprocess.strip_numbers", flag_setter(&PreprocessConfig::strip_numbers)},
      {"preprocess.strip_urls_html", flag_setter(&PreprocessConfig::strip_urls_html)},
      {"preprocess.strip_emoji", flag_setter(&PreprocessConfig::strip_emoji)},
      {"preprocess.min_token_frequency",
       [](PipelineConfig& c, auto k, auto v, const auto&) {
         c.preprocess.min_token_frequency = parse_size(k, v);
       }},
      {"preprocess.lemmatizer",
       [](PipelineConfig& c, auto, auto v, const auto&) {
         c.preprocess.lemmatizer = lemmatizer_from_string(v);
       }},
      {"split.train", ratio_setter(&SplitRatios::train)},
      {"split.validation", ratio_setter(&SplitRatios::validation)},
      {"split.test", ratio_setter(&SplitRatios::test)},
      {"split.balance_target",
       [](PipelineConfig& c, auto k, auto v, const auto&) {
         if (is_unset(v)) {
           c.balance_target.reset();
         } else {
           c.balance_target = parse_number<ClassIndex>(k, v, "a class index");
         }
       }},
      {"graph.window_size",
       [](PipelineConfig& c, auto k, auto v, const auto&) { c.graph.window_size = parse_size(k, v); }},
      {"graph.jaccard_threshold",
       [](PipelineConfig& c, auto k, auto v, const auto&) {
         c.graph.jaccard_threshold = parse_real(k, v);
       }},
      {"graph.max_degree",
       [](PipelineConfig& c, auto k, auto v, const auto&) {
         if (is_unset(v)) {
           c.graph.max_degree.reset();
         } else {
           c.graph.max_degree = parse_size(k, v);
         }
       }},
      {"graph.normalization",
       [](PipelineConfig& c, auto, auto v, const auto&) {
         c.adjacency.normalization = normalization_from_string(v);
       }},
      {"graph.use_edge_weights",
       [](PipelineConfig& c, auto k, auto v, const auto&) {
         c.adjacency.use_edge_weights = parse_bool(k, v);
       }},
      {"features.source",
       [](PipelineConfig& c, auto k, auto v, const auto&) {
         if (v == "one-hot") {
           c.features = FeatureMode::OneHot;
         } else if (v == "external") {
           c.features = FeatureMode::External;
         } else {
           bad_value(k, v, "'one-hot' or 'external'");
         }
       }},
      {"model.hidden_dim",
       [](PipelineConfig& c, auto k, auto v, const auto&) { c.train.hidden_dim = parse_size(k, v); }},
      {"model.num_layers",
       [](PipelineConfig& c, auto k, auto v, const auto&) { c.train.num_layers = parse_size(k, v); }},
      {"model.basis",
       [](PipelineConfig& c, auto k, auto v, const auto&) { c.train.basis = parse_bool(k, v); }},
      {"model.num_bases",
       [](PipelineConfig& c, auto k, auto v, const auto&) { c.train.num_bases = parse_size(k, v); }},
      {"train.epochs",
       [](PipelineConfig& c, auto k, auto v, const auto&) { c.train.epochs = parse_size(k, v); }},
      {"train.learning_rate",
       [](PipelineConfig& c, auto k, auto v, const auto&) {
         c.train.learning_rate = parse_real(k, v);
       }},
      {"train.dropout",
       [](PipelineConfig& c, auto k, auto v, const auto&) { c.train.dropout = parse_real(k, v); }},
      {"train.patience",
       [](PipelineConfig& c, auto k, auto v, const auto&) { c.train.patience = parse_size(k, v); }},
      {"evaluate.split",
       [](PipelineConfig& c, auto, auto v, const auto&) { c.evaluate_split = std::string(v); }},
  };
  return table;
}

fs::path in_out(const Paths& p, const fs::path& explicit_path, const char* name) {
  return explicit_path.empty() ? p.out / name : explicit_path;
}

}  // namespace

fs::path Paths::tokenized_or_default() const { return in_out(*this, tokenized, "tokenized.jsonl"); }
fs::path Paths::vocabulary_or_default() const { return in_out(*this, vocabulary, "vocab.tsv"); }
fs::path Paths::graph_or_default() const { return in_out(*this, graph, "graph.htg"); }
fs::path Paths::checkpoint_or_default() const { return in_out(*this, checkpoint, "model.rgc1"); }

void PipelineConfig::set(std::string_view key, std::string_view value, const fs::path& base_dir) {
  for (const auto& [name, setter] : setters()) {
    if (name == key) {
      setter(*this, key, value, base_dir);
      return;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

const std::vector<std::string>& PipelineConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& entry : setters()) out.push_back(entry.first);
    return out;
  }();
  return names;
}

PipelineConfig parse_config(std::istream& in, const fs::path& base_dir) {
  PipelineConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      config.set(trim(view.substr(0, eq)), trim(view.substr(eq + 1)), base_dir);
    } catch (const Error& e) {
      throw Error(e.code(), "config line " + std::to_string(line_no) + ": " + e.message());
    }
  }
  return config;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open config file " + path.string());
  return parse_config(in, path.parent_path());
}

}  // namespace textrgcn::cli
