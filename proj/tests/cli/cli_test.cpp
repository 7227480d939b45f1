#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "textrgcn/corpus.hpp"
#include "textrgcn/error.hpp"
#include "textrgcn/features.hpp"
#include "textrgcn/graph.hpp"

namespace fs = std::filesystem;
using namespace textrgcn;
using namespace textrgcn::cli;

namespace {

const fs::path kFixtures = TEXTRGCN_CLI_FIXTURE_DIR;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("textrgcn_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

PipelineConfig fixture_config(const fs::path& out) {
  PipelineConfig config = load_config(kFixtures / "pipeline.cfg");
  config.paths.out = out;
  return config;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected textrgcn::Error");
  return ErrorCode::InvalidArgument;
}

std::string corpus_line(const std::string& id, const std::string& text, int label) {
  return R"({"id":")" + id + R"(","text":")" + text + R"(","label":)" + std::to_string(label) +
         "}\n";
}

int run_binary(const std::string& args) {
  const std::string command =
      std::string(TEXTRGCN_CLI_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

// NFF1 bytes written by hand so that non-finite values can be stored.
void write_raw_nff1(const fs::path& path, const std::vector<std::string>& keys,
                    std::uint32_t dim, float value) {
  std::ofstream out(path, std::ios::binary);
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  };
  out.write("NFF1", 4);
  put32(static_cast<std::uint32_t>(keys.size()));
  put32(dim);
  for (const auto& key : keys) {
    const auto len = static_cast<std::uint16_t>(key.size());
    out.put(static_cast<char>(len & 0xFF));
    out.put(static_cast<char>(len >> 8));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    std::uint32_t bits;
    std::memcpy(&bits, &value, sizeof bits);
    for (std::uint32_t d = 0; d < dim; ++d) put32(bits);
  }
}

FeatureFile constant_features(const HeteroTextGraph& graph, bool documents, std::uint32_t dim) {
  FeatureFile file(dim);
  const std::size_t begin = documents ? 0 : graph.num_documents();
  const std::size_t end = documents ? graph.num_documents() : graph.num_nodes();
  for (std::size_t n = begin; n < end; ++n) {
    const auto& key = graph.key(static_cast<NodeIndex>(n));
    file.add(documents ? document_key(key) : word_key(key),
             std::vector<float>(dim, 0.25f * static_cast<float>(n % 4)));
  }
  return file;
}

}  // namespace

TEST_CASE("config file sets keys, skips comments and resolves paths against its directory") {
  std::istringstream in(
      "# comment\n"
      "seed = 7   # trailing comment\n"
      "\n"
      "paths.corpus = data/c.jsonl\n"
      "paths.out = /abs/out\n"
      "preprocess.lemmatizer = suffix-stripping\n"
      "preprocess.strip_numbers = off\n"
      "split.balance_target = 3\n"
      "graph.max_degree = 4\n"
      "graph.normalization = weighted-degree\n"
      "features.source = one-hot\n"
      "model.basis = yes\n"
      "model.num_bases = 2\n"
      "train.learning_rate = 0.005\n"
      "evaluate.split = validation\n");
  const auto config = parse_config(in, "/cfg/dir");
  CHECK(config.seed == 7);
  CHECK(config.paths.corpus == fs::path("/cfg/dir/data/c.jsonl"));
  CHECK(config.paths.out == fs::path("/abs/out"));
  CHECK(config.preprocess.lemmatizer == Lemmatizer::SuffixStripping);
  CHECK_FALSE(config.preprocess.strip_numbers);
  REQUIRE(config.balance_target.has_value());
  CHECK(*config.balance_target == 3);
  CHECK(config.graph.max_degree == std::optional<std::size_t>(4));
  CHECK(config.adjacency.normalization == Normalization::WeightedDegree);
  CHECK(config.features == FeatureMode::OneHot);
  CHECK(config.train.basis);
  CHECK(config.train.num_bases == 2);
  CHECK(config.train.learning_rate == 0.005);
  CHECK(config.evaluate_split == "validation");
}

TEST_CASE("config defaults and unsetting optional values") {
  PipelineConfig config;
  CHECK(config.seed == 42);
  CHECK(config.features == FeatureMode::External);
  CHECK(config.paths.graph_or_default() == fs::path("out/graph.htg"));
  config.set("graph.max_degree", "5");
  config.set("graph.max_degree", "none");
  CHECK_FALSE(config.graph.max_degree.has_value());
  config.set("split.balance_target", "");
  CHECK_FALSE(config.balance_target.has_value());
  CHECK(PipelineConfig::keys().size() > 30);
}

TEST_CASE("config errors name the key and the line") {
  auto message_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      parse_config(in);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidArgument);
      return std::string(e.message());
    }
    FAIL("expected an error");
    return std::string();
  };
  CHECK(message_of("seed = 1\nmodel.width = 3\n") ==
        "config line 2: unknown config key 'model.width'");
  CHECK(message_of("model.basis = maybe\n").find("expected a boolean") != std::string::npos);
  CHECK(message_of("train.epochs = -1\n").find("train.epochs") != std::string::npos);
  CHECK(message_of("train.epochs = 10x\n").find("config line 1") == 0);
  CHECK(message_of("just words\n") == "config line 1: expected 'key = value'");
  CHECK(message_of("features.source = glove\n").find("one-hot") != std::string::npos);
}

TEST_CASE("exit codes follow the error category") {
  CHECK(exit_code(Error(ErrorCode::InvalidArgument, "x")) == 1);
  CHECK(exit_code(Error(ErrorCode::ParseError, "x")) == 2);
  CHECK(exit_code(Error(ErrorCode::DimensionMismatch, "x")) == 2);
  CHECK(exit_code(Error(ErrorCode::NodeCountMismatch, "x")) == 2);
  CHECK(exit_code(Error(ErrorCode::Io, "x")) == 2);
  CHECK(exit_code(Error(ErrorCode::NonFiniteInput, "x")) == 3);
  CHECK(exit_code(Error(ErrorCode::NumericFailure, "x")) == 3);
}

TEST_CASE("preprocess reruns are byte-identical") {
  TempDir a, b;
  std::ostringstream log;
  cmd_preprocess(fixture_config(a.path()), log);
  cmd_preprocess(fixture_config(b.path()), log);
  CHECK(slurp(a / "tokenized.jsonl") == slurp(b / "tokenized.jsonl"));
  CHECK(slurp(a / "vocab.tsv") == slurp(b / "vocab.tsv"));

  std::istringstream in(slurp(a / "tokenized.jsonl"));
  const auto docs = read_tokenized_jsonl(in);
  CHECK(docs.size() == 60);
  for (const auto& d : docs) {
    for (const auto& t : d.tokens) {
      CHECK(t != "the");      // stopword
      CHECK(t != "thx");      // substituted
      CHECK(t.find('<') == std::string::npos);
      CHECK(t.find("http") == std::string::npos);
    }
  }
}

TEST_CASE("preprocess reports the malformed corpus line") {
  TempDir dir;
  spit(dir / "bad.jsonl", corpus_line("a", "fine text", 0) + "{\"id\": \"b\", \"text\": \n" +
                              corpus_line("c", "more text", 1));
  PipelineConfig config;
  config.paths.out = dir.path();
  config.paths.corpus = dir / "bad.jsonl";
  try {
    std::ostringstream log;
    cmd_preprocess(config, log);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.message()).find("line 2") != std::string::npos);
    CHECK(exit_code(e) == 2);
  }
}

TEST_CASE("build-graph on a single document has no document similarity edges") {
  TempDir dir;
  spit(dir / "one.jsonl", corpus_line("only", "battery good battery screen good", 0));
  PipelineConfig config;
  config.paths.out = dir.path();
  config.paths.corpus = dir / "one.jsonl";
  std::ostringstream log;
  cmd_preprocess(config, log);
  cmd_build_graph(config, log);
  const auto graph = load_graph((dir / "graph.htg").string());
  CHECK(graph.num_documents() == 1);
  CHECK(graph.num_edges(Relation::DocSimilarity) == 0);
  CHECK(graph.num_edges(Relation::DocWordFrequency) == 0);  // idf of every word is ln 1
}

TEST_CASE("build-graph links identical documents completely with weight one") {
  TempDir dir;
  std::string corpus;
  for (int i = 0; i < 4; ++i) corpus += corpus_line("d" + std::to_string(i), "cheap fast phone", i % 2);
  spit(dir / "same.jsonl", corpus);
  PipelineConfig config;
  config.paths.out = dir.path();
  config.paths.corpus = dir / "same.jsonl";
  std::ostringstream log;
  cmd_preprocess(config, log);
  cmd_build_graph(config, log);
  const auto graph = load_graph((dir / "graph.htg").string());
  const auto edges = graph.edges(Relation::DocSimilarity);
  CHECK(edges.size() == 6);
  for (const auto& e : edges) CHECK(e.weight == 1.0);
}

TEST_CASE("evaluate reproduces the metrics written by train") {
  TempDir dir;
  auto config = fixture_config(dir.path());
  std::ostringstream log;
  cmd_preprocess(config, log);
  cmd_build_graph(config, log);
  cmd_train(config, log);

  const auto metrics = slurp(dir / "metrics.txt");
  for (const std::string split : {"train", "validation", "test"}) {
    config.evaluate_split = split;
    const auto m = cmd_evaluate(config, log);
    const auto line = summary_line(split, m);
    CHECK(metrics.find(line + "\n") != std::string::npos);
    CHECK(slurp(dir / ("metrics-" + split + ".txt")).rfind(line + "\n", 0) == 0);
  }
}

TEST_CASE("pipeline output matches the golden metrics fixture") {
  TempDir dir;
  std::ostringstream log;
  cmd_pipeline(fixture_config(dir.path()), log);
  CHECK(slurp(dir / "metrics-test.txt") == slurp(kFixtures / "golden_metrics_test.txt"));
}

TEST_CASE("pipeline equals running the stages one by one") {
  TempDir whole, staged;
  std::ostringstream log;
  cmd_pipeline(fixture_config(whole.path()), log);
  const auto config = fixture_config(staged.path());
  cmd_preprocess(config, log);
  cmd_build_graph(config, log);
  cmd_train(config, log);
  cmd_evaluate(config, log);
  for (const char* name : {"tokenized.jsonl", "vocab.tsv", "graph.htg", "model.rgc1",
                           "history.csv", "metrics.txt", "report.txt", "metrics-test.txt"}) {
    CAPTURE(name);
    CHECK(slurp(whole / name) == slurp(staged / name));
  }
}

TEST_CASE("evaluate rejects a graph of a different size, empty and unlabeled splits") {
  TempDir dir, other;
  auto config = fixture_config(dir.path());
  std::ostringstream log;
  cmd_pipeline(config, log);

  spit(other / "small.jsonl", corpus_line("x", "good phone", 1) + corpus_line("y", "bad phone", 0));
  PipelineConfig small;
  small.paths.out = other.path();
  small.paths.corpus = other / "small.jsonl";
  cmd_preprocess(small, log);
  cmd_build_graph(small, log);

  auto mismatched = config;
  mismatched.paths.graph = other / "graph.htg";
  CHECK(code_of([&] { cmd_evaluate(mismatched, log); }) == ErrorCode::NodeCountMismatch);

  auto empty = config;
  empty.evaluate_split = "";
  CHECK(code_of([&] { cmd_evaluate(empty, log); }) == ErrorCode::InvalidArgument);
  empty.evaluate_split = "unlabeled";
  CHECK(code_of([&] { cmd_evaluate(empty, log); }) == ErrorCode::InvalidArgument);
  empty.evaluate_split = "holdout";
  CHECK(code_of([&] { cmd_evaluate(empty, log); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("external features: coverage check, dimension mismatch and training") {
  TempDir dir;
  auto config = fixture_config(dir.path());
  std::ostringstream log;
  cmd_preprocess(config, log);
  cmd_build_graph(config, log);
  const auto graph = load_graph((dir / "graph.htg").string());

  save_feature_file((dir / "docs3.nff").string(), constant_features(graph, true, 3));
  save_feature_file((dir / "words3.nff").string(), constant_features(graph, false, 3));
  save_feature_file((dir / "words4.nff").string(), constant_features(graph, false, 4));

  config.features = FeatureMode::External;
  config.paths.doc_features = dir / "docs3.nff";
  config.paths.word_features = dir / "words3.nff";
  std::ostringstream features_log;
  cmd_features(config, features_log);
  CHECK(features_log.str().find("coverage=complete") != std::string::npos);

  config.train.epochs = 5;
  cmd_train(config, log);
  CHECK(fs::exists(dir / "model.rgc1"));

  config.paths.word_features = dir / "words4.nff";
  CHECK(code_of([&] { cmd_features(config, log); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { cmd_train(config, log); }) == ErrorCode::DimensionMismatch);

  PipelineConfig none;
  CHECK(code_of([&] { cmd_features(none, log); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("the binary maps failures to exit codes") {
  TempDir dir;
  const std::string out = " --out " + dir.path().string();
  const std::string cfg = " --config " + (kFixtures / "pipeline.cfg").string();

  CHECK(run_binary("") == 1);
  CHECK(run_binary("frobnicate") == 1);
  CHECK(run_binary("train --set nosuch.key=1" + out) == 1);
  CHECK(run_binary("build-graph " + (dir / "missing.jsonl").string() + out) == 2);

  REQUIRE(run_binary("pipeline" + cfg + out) == 0);
  CHECK(fs::exists(dir / "metrics-test.txt"));
  CHECK(run_binary("evaluate" + cfg + out + " --split validation") == 0);
  CHECK(run_binary("evaluate" + cfg + out + " --split unlabeled") == 1);

  const auto graph = load_graph((dir / "graph.htg").string());
  std::vector<std::string> doc_keys, word_keys;
  for (std::size_t n = 0; n < graph.num_nodes(); ++n) {
    auto& keys = n < graph.num_documents() ? doc_keys : word_keys;
    keys.push_back((n < graph.num_documents() ? document_key : word_key)(
        graph.key(static_cast<NodeIndex>(n))));
  }
  write_raw_nff1(dir / "docs.nff", doc_keys, 2, 1.0f);
  write_raw_nff1(dir / "words.nff", word_keys, 2, std::numeric_limits<float>::quiet_NaN());
  CHECK(run_binary("train" + cfg + out + " --set features.source=external --doc-features " +
                   (dir / "docs.nff").string() + " --word-features " +
                   (dir / "words.nff").string()) == 3);
}
