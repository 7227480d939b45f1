#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "textrgcn/checkpoint.hpp"
#include "textrgcn/corpus.hpp"
#include "textrgcn/error.hpp"
#include "textrgcn/features.hpp"
#include "textrgcn/graph.hpp"
#include "textrgcn/train.hpp"

namespace textrgcn::cli {
namespace fs = std::filesystem;

namespace {

std::ifstream open_in(const fs::path& path, std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::Io, "cannot open " + std::string(what) + " '" + path.string() + "'");
  }
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return out;
}

void require_path(const fs::path& path, std::string_view key) {
  if (path.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no input given for " + std::string(key));
  }
}

std::vector<TokenizedDocument> load_tokenized(const PipelineConfig& config) {
  auto in = open_in(config.paths.tokenized_or_default(), "tokenized corpus");
  return read_tokenized_jsonl(in);
}

Matrix node_features(const PipelineConfig& config, const HeteroTextGraph& graph) {
  if (config.features == FeatureMode::OneHot) return assemble_features(graph, OneHotFeatures{});
  if (config.paths.doc_features.empty() || config.paths.word_features.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "external features need paths.doc_features and paths.word_features "
                "(or pass --one-hot)");
  }
  const auto docs = load_feature_file(config.paths.doc_features.string());
  const auto words = load_feature_file(config.paths.word_features.string());
  return assemble_features(graph, ExternalFeatures{&docs, &words});
}

std::size_t count_split(const std::vector<TokenizedDocument>& docs, Split split) {
  return static_cast<std::size_t>(
      std::count_if(docs.begin(), docs.end(), [&](const auto& d) { return d.split == split; }));
}

}  // namespace

void cmd_preprocess(const PipelineConfig& config, std::ostream& log) {
  require_path(config.paths.corpus, "paths.corpus");
  PreprocessConfig pre = config.preprocess;
  if (!config.paths.stopwords.empty()) {
    auto in = open_in(config.paths.stopwords, "stopword list");
    pre.stopwords = read_stopwords(in);
  }
  if (!config.paths.substitutions.empty()) {
    auto in = open_in(config.paths.substitutions, "substitution table");
    pre.substitutions = read_substitutions(in);
  }
  pre.validate();
  config.split.validate();

  const auto raw = read_corpus_jsonl(config.paths.corpus.string());
  std::vector<TokenizedDocument> docs;
  docs.reserve(raw.size());
  for (const auto& r : raw) {
    docs.push_back({r.id, preprocess_text(r.text, pre), r.label, Split::Unlabeled});
  }
  if (config.balance_target) {
    docs = balance_dataset(std::move(docs), *config.balance_target, config.seed);
  }

  std::vector<std::vector<std::string>> token_lists;
  token_lists.reserve(docs.size());
  for (const auto& d : docs) token_lists.push_back(d.tokens);
  const auto vocab = build_vocabulary(token_lists, pre.min_token_frequency);
  filter_to_vocabulary(docs, vocab);
  docs = assign_splits(docs, config.split, config.seed);

  {
    auto out = open_out(config.paths.tokenized_or_default());
    write_tokenized_jsonl(out, docs);
  }
  {
    auto out = open_out(config.paths.vocabulary_or_default());
    write_vocabulary(out, vocab);
  }
  const auto degenerate = static_cast<std::size_t>(
      std::count_if(docs.begin(), docs.end(), [](const auto& d) { return d.degenerate(); }));
  log << "documents=" << docs.size() << " vocabulary=" << vocab.size()
      << " degenerate=" << degenerate << " train=" << count_split(docs, Split::Train)
      << " validation=" << count_split(docs, Split::Validation)
      << " test=" << count_split(docs, Split::Test)
      << " unlabeled=" << count_split(docs, Split::Unlabeled) << '\n';
}

void cmd_build_graph(const PipelineConfig& config, std::ostream& log) {
  const auto docs = load_tokenized(config);
  // Tokens were already filtered, so the vocabulary is rebuilt exactly.
  std::vector<std::vector<std::string>> token_lists;
  token_lists.reserve(docs.size());
  for (const auto& d : docs) token_lists.push_back(d.tokens);
  const auto vocab = build_vocabulary(token_lists, 1);
  const auto graph = build_text_graph(docs, vocab, config.graph);
  {
    auto out = open_out(config.paths.graph_or_default());
    write_graph(out, graph);
  }
  log << "nodes=" << graph.num_nodes() << " documents=" << graph.num_documents()
      << " words=" << graph.num_words();
  for (const auto r : kRelations) log << ' ' << to_string(r) << '=' << graph.num_edges(r);
  log << '\n';
}

void cmd_features(const PipelineConfig& config, std::ostream& log) {
  if (config.paths.doc_features.empty() && config.paths.word_features.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no feature files given");
  }
  for (const auto& path : {config.paths.doc_features, config.paths.word_features}) {
    if (path.empty()) continue;
    const auto file = load_feature_file(path.string());
    log << "file=" << path.string() << " records=" << file.size()
        << " dimension=" << file.dimension() << '\n';
  }
  const auto graph_path = config.paths.graph_or_default();
  if (config.paths.doc_features.empty() || config.paths.word_features.empty() ||
      !fs::exists(graph_path)) {
    return;
  }
  auto in = open_in(graph_path, "graph");
  const auto graph = read_graph(in);
  PipelineConfig external = config;
  external.features = FeatureMode::External;
  const auto x = node_features(external, graph);
  log << "coverage=complete nodes=" << x.rows() << " dimension=" << x.cols() << '\n';
}

void cmd_train(const PipelineConfig& config, std::ostream& log) {
  HeteroTextGraph graph;
  {
    auto in = open_in(config.paths.graph_or_default(), "graph");
    graph = read_graph(in);
  }
  const auto docs = load_tokenized(config);
  const auto nodes = label_nodes(graph, docs);
  const auto features = node_features(config, graph);
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  tc.adjacency = config.adjacency;

  const auto adj = to_relation_adjacency(graph, tc.adjacency);
  const auto result = train(adj, features, nodes, tc);
  {
    auto out = open_out(config.paths.checkpoint_or_default());
    write_checkpoint(out, Checkpoint{result.model, graph.num_nodes()});
  }
  {
    auto out = open_out(config.paths.out / "history.csv");
    write_history_csv(out, result.history);
  }
  std::ostringstream summaries;
  std::ostringstream reports;
  for (const auto split : {Split::Train, Split::Validation, Split::Test}) {
    if (nodes.mask(split).empty()) continue;
    const auto m = evaluate(result.model, adj, features, nodes.mask(split), nodes.labels);
    summaries << summary_line(to_string(split), m) << '\n';
    reports << format_report(to_string(split), m) << '\n';
  }
  {
    auto out = open_out(config.paths.out / "metrics.txt");
    out << summaries.str();
  }
  {
    auto out = open_out(config.paths.out / "report.txt");
    out << reports.str();
  }
  log << "epochs=" << result.history.epochs() << " best_epoch=" << result.history.best_epoch
      << '\n'
      << summaries.str();
}

Metrics cmd_evaluate(const PipelineConfig& config, std::ostream& log) {
  if (config.evaluate_split.empty()) {
    throw Error(ErrorCode::InvalidArgument, "split name is empty");
  }
  const Split split = split_from_string(config.evaluate_split);
  if (split == Split::Unlabeled) {
    throw Error(ErrorCode::InvalidArgument, "cannot evaluate the unlabeled split");
  }
  const auto checkpoint = load_checkpoint(config.paths.checkpoint_or_default().string());
  HeteroTextGraph graph;
  {
    auto in = open_in(config.paths.graph_or_default(), "graph");
    graph = read_graph(in);
  }
  if (checkpoint.num_nodes != graph.num_nodes()) {
    throw Error(ErrorCode::NodeCountMismatch,
                "checkpoint was trained on " + std::to_string(checkpoint.num_nodes) +
                    " nodes, graph has " + std::to_string(graph.num_nodes()));
  }
  const auto nodes = label_nodes(graph, load_tokenized(config),
                                 checkpoint.model.config().num_classes);
  const auto features = node_features(config, graph);
  const auto adj = to_relation_adjacency(graph, config.adjacency);
  const auto m = evaluate(checkpoint.model, adj, features, nodes.mask(split), nodes.labels);
  const auto line = summary_line(to_string(split), m);
  {
    auto out = open_out(config.paths.out / ("metrics-" + std::string(to_string(split)) + ".txt"));
    out << line << '\n' << format_report(to_string(split), m);
  }
  log << line << '\n';
  return m;
}

void cmd_pipeline(const PipelineConfig& config, std::ostream& log) {
  cmd_preprocess(config, log);
  cmd_build_graph(config, log);
  cmd_train(config, log);
  cmd_evaluate(config, log);
}

int exit_code(const Error& error) {
  switch (category_of(error.code())) {
    case ErrorCategory::Usage: return 1;
    case ErrorCategory::Data: return 2;
    case ErrorCategory::Numeric: return 3;
  }
  return 2;
}

}  // namespace textrgcn::cli
