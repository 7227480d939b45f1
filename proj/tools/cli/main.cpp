#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "textrgcn/error.hpp"

namespace {

using textrgcn::cli::PipelineConfig;

// Options shared by every subcommand, applied in the order: config file,
// --set assignments, then explicit flags and positionals.
struct CommonOptions {
  std::string config_file;
  std::vector<std::string> assignments;
  std::optional<std::uint64_t> seed;
  bool one_hot = false;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_file, "key = value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.assignments, "override one config key (key=value)");
  cmd->add_option("--seed", opts.seed, "master random seed");
  cmd->add_flag("--one-hot", opts.one_hot, "use identity node features");
  cmd->add_option("--out", opts.out, "output directory");
}

PipelineConfig resolve(const CommonOptions& opts) {
  PipelineConfig config;
  if (!opts.config_file.empty()) config = textrgcn::cli::load_config(opts.config_file);
  for (const auto& a : opts.assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) {
      throw textrgcn::Error(textrgcn::ErrorCode::InvalidArgument,
                            "--set expects key=value, got '" + a + "'");
    }
    config.set(a.substr(0, eq), a.substr(eq + 1));
  }
  if (opts.seed) config.seed = *opts.seed;
  if (opts.one_hot) config.features = textrgcn::cli::FeatureMode::OneHot;
  if (!opts.out.empty()) config.paths.out = opts.out;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-graph RGCN sentiment classification"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string corpus, stopwords, substitutions, tokenized, graph, checkpoint, doc_features, word_features, split;

  auto* preprocess = app.add_subcommand("preprocess", "clean, tokenize and split a JSONL corpus");
  add_common(preprocess, common);
  preprocess->add_option("corpus", corpus, "corpus JSONL");
  preprocess->add_option("--stopwords", stopwords, "stopword list, one word per line");
  preprocess->add_option("--substitutions", substitutions, "substitution table (TSV)");

  auto* build = app.add_subcommand("build-graph", "build the heterogeneous text graph");
  add_common(build, common);
  build->add_option("tokenized", tokenized, "tokenized corpus JSONL");

  auto* features = app.add_subcommand("features", "inspect and check NFF1 feature files");
  add_common(features, common);
  features->add_option("doc-features", doc_features, "document features (NFF1)");
  features->add_option("word-features", word_features, "word features (NFF1)");
  features->add_option("--graph", graph, "graph to check coverage against");

  auto* train = app.add_subcommand("train", "train an RGCN on a graph");
  add_common(train, common);
  train->add_option("graph", graph, "graph file (HTG)");
  train->add_option("--tokenized", tokenized, "tokenized corpus JSONL");
  train->add_option("--doc-features", doc_features, "document features (NFF1)");
  train->add_option("--word-features", word_features, "word features (NFF1)");

  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint on one split");
  add_common(evaluate, common);
  evaluate->add_option("checkpoint", checkpoint, "model checkpoint (RGC1)");
  evaluate->add_option("graph", graph, "graph file (HTG)");
  evaluate->add_option("--tokenized", tokenized, "tokenized corpus JSONL");
  evaluate->add_option("--doc-features", doc_features, "document features (NFF1)");
  evaluate->add_option("--word-features", word_features, "word features (NFF1)");
  evaluate->add_option("--split", split, "train, validation or test");

  auto* pipeline = app.add_subcommand("pipeline", "preprocess, build-graph, train and evaluate");
  add_common(pipeline, common);
  pipeline->add_option("corpus", corpus, "corpus JSONL");
  pipeline->add_option("--stopwords", stopwords, "stopword list, one word per line");
  pipeline->add_option("--substitutions", substitutions, "substitution table (TSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    PipelineConfig config = resolve(common);
    auto& p = config.paths;
    if (!corpus.empty()) p.corpus = corpus;
    if (!stopwords.empty()) p.stopwords = stopwords;
    if (!substitutions.empty()) p.substitutions = substitutions;
    if (!tokenized.empty()) p.tokenized = tokenized;
    if (!graph.empty()) p.graph = graph;
    if (!checkpoint.empty()) p.checkpoint = checkpoint;
    if (!doc_features.empty()) p.doc_features = doc_features;
    if (!word_features.empty()) p.word_features = word_features;
    if (!split.empty()) config.evaluate_split = split;

    namespace c = textrgcn::cli;
    if (*preprocess) c::cmd_preprocess(config, std::cout);
    else if (*build) c::cmd_build_graph(config, std::cout);
    else if (*features) c::cmd_features(config, std::cout);
    else if (*train) c::cmd_train(config, std::cout);
    else if (*evaluate) c::cmd_evaluate(config, std::cout);
    else if (*pipeline) c::cmd_pipeline(config, std::cout);
    return 0;
  } catch (const textrgcn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return textrgcn::cli::exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
