#ifndef TEXTRGCN_CLI_COMMANDS_HPP
#define TEXTRGCN_CLI_COMMANDS_HPP

#include <iosfwd>

#include "config.hpp"
#include "textrgcn/error.hpp"
#include "textrgcn/train.hpp"

namespace textrgcn::cli {

// Every command reads its inputs from the paths in the config, writes its
// artifacts under paths.out and prints a short summary to `log`. Failures
// surface as textrgcn::Error.

/// Writes tokenized.jsonl and vocab.tsv.
void cmd_preprocess(const PipelineConfig& config, std::ostream& log);
/// Writes graph.htg from the tokenized corpus.
void cmd_build_graph(const PipelineConfig& config, std::ostream& log);
/// Loads the configured NFF1 files and, when a graph is available, checks
/// that they cover every node.
void cmd_features(const PipelineConfig& config, std::ostream& log);
/// Writes model.rgc1, history.csv, metrics.txt and report.txt.
void cmd_train(const PipelineConfig& config, std::ostream& log);
/// Writes metrics-<split>.txt for evaluate.split.
Metrics cmd_evaluate(const PipelineConfig& config, std::ostream& log);
/// preprocess, build-graph, train and evaluate in sequence.
void cmd_pipeline(const PipelineConfig& config, std::ostream& log);

/// 1 usage, 2 data, 3 numeric.
int exit_code(const Error& error);

}  // namespace textrgcn::cli

#endif  // TEXTRGCN_CLI_COMMANDS_HPP
