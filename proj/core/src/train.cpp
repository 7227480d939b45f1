#include "textrgcn/train.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "textrgcn/error.hpp"
#include "textrgcn/random.hpp"

namespace textrgcn {
namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof(buf), pattern, v);
  return std::string(buf, static_cast<std::size_t>(n));
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  }
  if (hidden_dim < 1 || num_layers < 1) {
    throw Error(ErrorCode::InvalidArgument, "hidden_dim and num_layers must be >= 1");
  }
}

std::span<const NodeIndex> LabeledNodes::mask(Split split) const {
  switch (split) {
    case Split::Train: return train;
    case Split::Validation: return validation;
    case Split::Test: return test;
    case Split::Unlabeled: break;
  }
  throw Error(ErrorCode::InvalidArgument, "no mask for unlabeled nodes");
}

LabeledNodes label_nodes(const HeteroTextGraph& graph,
                         const std::vector<TokenizedDocument>& docs,
                         std::size_t num_classes) {
  std::unordered_map<std::string_view, const TokenizedDocument*> by_id;
  for (const auto& d : docs) by_id.emplace(d.id, &d);

  LabeledNodes out;
  out.labels.assign(graph.num_nodes(), std::nullopt);
  std::size_t max_label = 0;
  for (NodeIndex i = 0; i < graph.num_documents(); ++i) {
    const auto it = by_id.find(graph.key(i));
    if (it == by_id.end()) {
      throw Error(ErrorCode::MissingKey, "doc:" + graph.key(i));
    }
    const auto& d = *it->second;
    if (!d.label) continue;
    out.labels[i] = d.label;
    max_label = std::max<std::size_t>(max_label, *d.label + 1);
    switch (d.split) {
      case Split::Train: out.train.push_back(i); break;
      case Split::Validation: out.validation.push_back(i); break;
      case Split::Test: out.test.push_back(i); break;
      case Split::Unlabeled: break;
    }
  }
  out.num_classes = num_classes == 0 ? max_label : num_classes;
  if (max_label > out.num_classes) {
    throw Error(ErrorCode::InvalidArgument, "label exceeds the declared class count");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

std::size_t Metrics::total() const {
  std::size_t n = 0;
  for (const auto& row : confusion) {
    for (const auto v : row) n += v;
  }
  return n;
}

Metrics metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion) {
  Metrics m;
  m.num_classes = confusion.size();
  for (const auto& row : confusion) {
    if (row.size() != m.num_classes) {
      throw Error(ErrorCode::ShapeMismatch, "confusion matrix must be square");
    }
  }
  m.confusion = std::move(confusion);
  const std::size_t c = m.num_classes;
  const std::size_t total = m.total();
  std::size_t correct = 0;
  m.precision.assign(c, 0.0);
  m.recall.assign(c, 0.0);
  m.f1.assign(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    const std::size_t tp = m.confusion[k][k];
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t j = 0; j < c; ++j) {
      predicted += m.confusion[j][k];
      actual += m.confusion[k][j];
    }
    correct += tp;
    m.precision[k] = ratio(tp, predicted);
    m.recall[k] = ratio(tp, actual);
    const double denom = m.precision[k] + m.recall[k];
    m.f1[k] = denom == 0.0 ? 0.0 : 2.0 * m.precision[k] * m.recall[k] / denom;
  }
  m.accuracy = ratio(correct, total);
  double sum = 0.0;
  for (const double f : m.f1) sum += f;
  m.macro_f1 = c == 0 ? 0.0 : sum / static_cast<double>(c);
  m.loss = std::numeric_limits<double>::quiet_NaN();
  return m;
}

Metrics compute_metrics(std::span<const ClassIndex> predicted,
                        std::span<const ClassIndex> truth, std::size_t num_classes) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction and label counts differ");
  }
  std::vector<std::vector<std::size_t>> confusion(num_classes,
                                                  std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes) {
      throw Error(ErrorCode::InvalidArgument, "class index outside [0, num_classes)");
    }
    ++confusion[truth[i]][predicted[i]];
  }
  return metrics_from_confusion(std::move(confusion));
}

std::vector<ClassIndex> argmax_rows(const Matrix& logits, std::span<const NodeIndex> rows) {
  std::vector<ClassIndex> out;
  out.reserve(rows.size());
  for (const NodeIndex r : rows) {
    ClassIndex best = 0;
    for (Eigen::Index k = 1; k < logits.cols(); ++k) {
      if (logits(r, k) > logits(r, best)) best = static_cast<ClassIndex>(k);
    }
    out.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(const RelationAdjacency& adj, const Matrix& features,
                  const LabeledNodes& nodes, const TrainConfig& config) {
  config.validate();
  if (nodes.num_classes == 0) throw Error(ErrorCode::EmptyClass, "no classes");
  std::vector<std::size_t> per_class(nodes.num_classes, 0);
  for (const NodeIndex i : nodes.train) ++per_class.at(*nodes.labels.at(i));
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c] == 0) {
      throw Error(ErrorCode::EmptyClass,
                  "class " + std::to_string(c) + " has no training node");
    }
  }

  ModelConfig mc;
  mc.input_dim = static_cast<std::size_t>(features.cols());
  mc.hidden_dim = config.hidden_dim;
  mc.num_classes = nodes.num_classes;
  mc.num_layers = config.num_layers;
  mc.dropout = config.dropout;
  mc.basis = config.basis;
  mc.num_bases = config.num_bases;

  RGCNModel model = RGCNModel::initialize(mc, config.seed);
  AdamState adam;
  adam.options.learning_rate = config.learning_rate;

  TrainResult result{model, model, {}};
  auto& history = result.history;
  double best_acc = -1.0;
  const bool has_validation = !nodes.validation.empty();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto fw = model_forward(features, adj, model, true,
                                  derive_seed(config.seed, "dropout", epoch));
    const auto loss = softmax_cross_entropy(fw.logits, nodes.labels, nodes.train);
    if (!std::isfinite(loss.loss)) {
      throw Error(ErrorCode::NumericFailure,
                  "training loss is not finite at epoch " + std::to_string(epoch));
    }
    const Matrix dlogits =
        softmax_cross_entropy_gradient(loss.probabilities, nodes.labels, nodes.train);
    adam_step(model, backward(model, adj, fw.cache, dlogits), adam);

    double val_loss = std::numeric_limits<double>::quiet_NaN();
    double val_acc = std::numeric_limits<double>::quiet_NaN();
    if (has_validation) {
      const Metrics vm = evaluate(model, adj, features, nodes.validation, nodes.labels);
      val_loss = vm.loss;
      val_acc = vm.accuracy;
    }
    history.train_loss.push_back(loss.loss);
    history.val_loss.push_back(val_loss);
    history.val_acc.push_back(val_acc);

    if (!has_validation) {
      history.best_epoch = epoch;
      continue;
    }
    if (val_acc > best_acc) {
      best_acc = val_acc;
      history.best_epoch = epoch;
      result.model = model;
    } else if (config.patience > 0 && epoch - history.best_epoch >= config.patience) {
      break;
    }
  }
  result.final_model = model;
  if (!has_validation) result.model = model;
  return result;
}

TrainResult train(const HeteroTextGraph& graph, const Matrix& features,
                  const LabeledNodes& nodes, const TrainConfig& config) {
  return train(to_relation_adjacency(graph, config.adjacency), features, nodes, config);
}

Metrics evaluate(const RGCNModel& model, const RelationAdjacency& adj,
                 const Matrix& features, std::span<const NodeIndex> mask,
                 const NodeLabels& labels) {
  if (mask.empty()) throw Error(ErrorCode::EmptyMask, "evaluation mask selects no node");
  const auto fw = model_forward(features, adj, model, false, 0);
  const auto predicted = argmax_rows(fw.logits, mask);
  std::vector<ClassIndex> truth;
  truth.reserve(mask.size());
  for (const NodeIndex i : mask) {
    if (i >= labels.size() || !labels[i]) {
      throw Error(ErrorCode::InvalidArgument, "node " + std::to_string(i) + " has no label");
    }
    truth.push_back(*labels[i]);
  }
  Metrics m = compute_metrics(predicted, truth, model.config().num_classes);
  m.loss = softmax_cross_entropy(fw.logits, labels, mask).loss;
  return m;
}

std::vector<ClassIndex> predict(const RGCNModel& model, const RelationAdjacency& adj,
                                const Matrix& features, std::span<const NodeIndex> nodes) {
  for (const NodeIndex i : nodes) {
    if (i >= adj.num_nodes()) {
      throw Error(ErrorCode::InvalidArgument, "node " + std::to_string(i) + " out of range");
    }
  }
  return argmax_rows(model_forward(features, adj, model, false, 0).logits, nodes);
}

// ---------------------------------------------------------------------------
// Reports

std::string summary_line(std::string_view split, const Metrics& metrics) {
  std::string s = "split=" + std::string(split);
  s += " acc=" + fmt("%.6f", metrics.accuracy);
  s += " macro_f1=" + fmt("%.6f", metrics.macro_f1);
  s += " loss=" + fmt("%.6f", metrics.loss);
  return s;
}

std::string format_report(std::string_view split, const Metrics& metrics) {
  std::ostringstream out;
  out << "== " << split << " (" << metrics.total() << " nodes) ==\n";
  out << "accuracy  " << fmt("%.6f", metrics.accuracy) << '\n';
  out << "macro_f1  " << fmt("%.6f", metrics.macro_f1) << '\n';
  if (metrics.num_classes == 2) {
    out << "pos_f1    " << fmt("%.6f", metrics.positive_f1()) << '\n';
  }
  out << "loss      " << fmt("%.6f", metrics.loss) << '\n';
  out << "class  precision  recall     f1\n";
  for (std::size_t k = 0; k < metrics.num_classes; ++k) {
    out << fmt("%5.0f", static_cast<double>(k)) << "  " << fmt("%.6f", metrics.precision[k])
        << "   " << fmt("%.6f", metrics.recall[k]) << "   " << fmt("%.6f", metrics.f1[k])
        << '\n';
  }
  out << "confusion (rows = true class, columns = predicted)\n";
  for (const auto& row : metrics.confusion) {
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
    out << '\n';
  }
  out << summary_line(split, metrics) << '\n';
  return out.str();
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,train_loss,val_loss,val_acc\n";
  for (std::size_t e = 0; e < history.epochs(); ++e) {
    out << e << ',' << fmt("%.17g", history.train_loss[e]) << ','
        << fmt("%.17g", history.val_loss[e]) << ',' << fmt("%.17g", history.val_acc[e])
        << '\n';
  }
}

}  // namespace textrgcn
