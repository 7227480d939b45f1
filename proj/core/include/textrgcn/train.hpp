#ifndef TEXTRGCN_TRAIN_HPP
#define TEXTRGCN_TRAIN_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "textrgcn/corpus.hpp"
#include "textrgcn/graph.hpp"
#include "textrgcn/rgcn.hpp"

namespace textrgcn {

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 0.01;
  double dropout = 0.5;
  std::size_t hidden_dim = 64;
  std::size_t num_layers = 2;
  bool basis = false;
  std::size_t num_bases = 0;
  std::uint64_t seed = 42;
  /// Epochs without a validation-accuracy improvement before stopping.
  /// 0 disables early stopping.
  std::size_t patience = 50;
  AdjacencyOptions adjacency;

  void validate() const;
};

/// Node labels and split masks for a graph whose document i is node i.
struct LabeledNodes {
  NodeLabels labels;
  std::size_t num_classes = 0;
  std::vector<NodeIndex> train;
  std::vector<NodeIndex> validation;
  std::vector<NodeIndex> test;

  std::span<const NodeIndex> mask(Split split) const;
};

/// Matches documents to graph nodes by id. num_classes defaults to the
/// largest label + 1. Errors: MissingKey when a graph document has no
/// tokenized record.
LabeledNodes label_nodes(const HeteroTextGraph& graph,
                         const std::vector<TokenizedDocument>& docs,
                         std::size_t num_classes = 0);

struct Metrics {
  std::size_t num_classes = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  double accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  double macro_f1 = 0.0;
  double loss = 0.0;  // mean cross-entropy, NaN when not computed

  std::size_t total() const;
  /// F1 of class 1; meaningful for binary tasks only.
  double positive_f1() const { return f1.size() == 2 ? f1[1] : macro_f1; }
};

/// One-vs-rest precision, recall and F1 per class; zero denominators give
/// 0. Accuracy is trace / total.
Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion);
Metrics compute_metrics(std::span<const ClassIndex> predicted,
                        std::span<const ClassIndex> truth, std::size_t num_classes);

/// Row-wise argmax of the selected rows; ties go to the lower class.
std::vector<ClassIndex> argmax_rows(const Matrix& logits, std::span<const NodeIndex> rows);

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_acc;
  std::size_t best_epoch = 0;

  std::size_t epochs() const noexcept { return train_loss.size(); }
};

struct TrainResult {
  RGCNModel model;        // best by validation accuracy
  RGCNModel final_model;  // parameters after the last completed epoch
  TrainHistory history;
};

/// Full-batch transductive training: every epoch runs the whole graph,
/// takes the loss on the train mask only and applies one Adam update.
/// Validation accuracy after each update selects the returned model (ties
/// keep the earlier epoch). Errors: EmptyClass when a class has no
/// training node.
TrainResult train(const RelationAdjacency& adj, const Matrix& features,
                  const LabeledNodes& nodes, const TrainConfig& config);
TrainResult train(const HeteroTextGraph& graph, const Matrix& features,
                  const LabeledNodes& nodes, const TrainConfig& config);

/// Errors: EmptyMask.
Metrics evaluate(const RGCNModel& model, const RelationAdjacency& adj,
                 const Matrix& features, std::span<const NodeIndex> mask,
                 const NodeLabels& labels);

std::vector<ClassIndex> predict(const RGCNModel& model, const RelationAdjacency& adj,
                                const Matrix& features, std::span<const NodeIndex> nodes);

/// `split=<name> acc=<v> macro_f1=<v> loss=<v>`
std::string summary_line(std::string_view split, const Metrics& metrics);
/// Human-readable report: summary, per-class table, confusion matrix.
std::string format_report(std::string_view split, const Metrics& metrics);
/// Header `epoch,train_loss,val_loss,val_acc`.
void write_history_csv(std::ostream& out, const TrainHistory& history);

}  // namespace textrgcn

#endif  // TEXTRGCN_TRAIN_HPP
