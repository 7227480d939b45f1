#include "textrgcn/rgcn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "textrgcn/error.hpp"
#include "textrgcn/random.hpp"

namespace textrgcn {
namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                   const char* what) {
  if (m.rows() != idx(rows) || m.cols() != idx(cols)) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " is " + shape(m) +
                                              ", expected " + std::to_string(rows) +
                                              "x" + std::to_string(cols));
  }
}

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(idx(rows), idx(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  return m;
}

// sum_r A_r (H W_r) + H W_0, accumulated in channel order.
Matrix aggregate(const Matrix& h, const RelationAdjacency& adj,
                 std::span<const Matrix> weights, const Matrix& self_weight) {
  Matrix z = h * self_weight;
  for (std::size_t r = 0; r < weights.size(); ++r) {
    const CsrMatrix& a = adj.channel(r);
    if (a.nnz() == 0) continue;
    z += a.multiply(h * weights[r]);
  }
  return z;
}

void check_layer(const Matrix& h, const RelationAdjacency& adj, const LayerParams& p) {
  if (h.rows() != idx(adj.num_nodes())) {
    throw Error(ErrorCode::ShapeMismatch, "feature matrix has " + std::to_string(h.rows()) +
                                              " rows for " +
                                              std::to_string(adj.num_nodes()) + " nodes");
  }
  if (h.cols() != idx(p.in_dim)) {
    throw Error(ErrorCode::ShapeMismatch, "layer expects " + std::to_string(p.in_dim) +
                                              " input columns, got " +
                                              std::to_string(h.cols()));
  }
  if (p.num_channels() > kNumMessageChannels) {
    throw Error(ErrorCode::ShapeMismatch, "layer has more channels than the adjacency");
  }
  if (!h.allFinite()) throw Error(ErrorCode::NonFiniteInput, "layer input has NaN or Inf");
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

std::vector<Matrix> materialize_weights(std::span<const Matrix> bases,
                                        const Matrix& coefficients) {
  if (bases.empty()) throw Error(ErrorCode::ShapeMismatch, "basis mode needs B >= 1");
  if (coefficients.cols() != idx(bases.size())) {
    throw Error(ErrorCode::ShapeMismatch, "coefficient rows have " +
                                              std::to_string(coefficients.cols()) +
                                              " entries for " +
                                              std::to_string(bases.size()) + " bases");
  }
  for (const auto& v : bases) {
    if (v.rows() != bases[0].rows() || v.cols() != bases[0].cols()) {
      throw Error(ErrorCode::ShapeMismatch, "basis matrices differ in shape");
    }
  }
  std::vector<Matrix> weights;
  weights.reserve(static_cast<std::size_t>(coefficients.rows()));
  for (Eigen::Index r = 0; r < coefficients.rows(); ++r) {
    Matrix w = Matrix::Zero(bases[0].rows(), bases[0].cols());
    for (std::size_t b = 0; b < bases.size(); ++b) {
      w += coefficients(r, idx(b)) * bases[b];
    }
    weights.push_back(std::move(w));
  }
  return weights;
}

std::vector<Matrix> LayerParams::channel_weights() const {
  return basis ? materialize_weights(bases, coefficients) : relation_weights;
}

LayerParams LayerParams::zeros_like() const {
  LayerParams z;
  z.in_dim = in_dim;
  z.out_dim = out_dim;
  z.basis = basis;
  for (const auto& w : relation_weights) z.relation_weights.push_back(Matrix::Zero(w.rows(), w.cols()));
  for (const auto& v : bases) z.bases.push_back(Matrix::Zero(v.rows(), v.cols()));
  z.coefficients = Matrix::Zero(coefficients.rows(), coefficients.cols());
  z.self_weight = Matrix::Zero(self_weight.rows(), self_weight.cols());
  return z;
}

std::vector<Matrix*> LayerParams::tensors() {
  std::vector<Matrix*> out;
  if (basis) {
    for (auto& v : bases) out.push_back(&v);
    out.push_back(&coefficients);
  } else {
    for (auto& w : relation_weights) out.push_back(&w);
  }
  out.push_back(&self_weight);
  return out;
}

std::vector<const Matrix*> LayerParams::tensors() const {
  std::vector<const Matrix*> out;
  for (Matrix* m : const_cast<LayerParams*>(this)->tensors()) out.push_back(m);
  return out;
}

void ModelConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || num_classes == 0) {
    throw Error(ErrorCode::InvalidArgument, "model dimensions must be positive");
  }
  if (num_layers < 1) throw Error(ErrorCode::InvalidArgument, "model needs at least one layer");
  if (!(dropout >= 0.0 && dropout <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout must lie in [0, 1]");
  }
  if (num_channels == 0 || num_channels > kNumMessageChannels) {
    throw Error(ErrorCode::InvalidArgument, "channel count must lie in [1, 4]");
  }
}

RGCNModel::RGCNModel(ModelConfig config, std::vector<LayerParams> layers)
    : config_(config), layers_(std::move(layers)) {
  config_.validate();
  if (layers_.size() != config_.num_layers) {
    throw Error(ErrorCode::ShapeMismatch, "layer count disagrees with model config");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& p = layers_[l];
    const std::size_t in = l == 0 ? config_.input_dim : config_.hidden_dim;
    const std::size_t out = l + 1 == layers_.size() ? config_.num_classes : config_.hidden_dim;
    if (p.in_dim != in || p.out_dim != out) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(l) + " has dims " +
                                                std::to_string(p.in_dim) + "->" +
                                                std::to_string(p.out_dim));
    }
    require_shape(p.self_weight, in, out, "self weight");
    if (p.basis) {
      if (p.coefficients.rows() != idx(config_.num_channels) || p.bases.empty() ||
          p.coefficients.cols() != idx(p.bases.size())) {
        throw Error(ErrorCode::ShapeMismatch, "basis coefficients have wrong shape");
      }
      for (const auto& v : p.bases) require_shape(v, in, out, "basis matrix");
    } else {
      if (p.relation_weights.size() != config_.num_channels) {
        throw Error(ErrorCode::ShapeMismatch, "one relation weight per channel required");
      }
      for (const auto& w : p.relation_weights) require_shape(w, in, out, "relation weight");
    }
  }
}

RGCNModel RGCNModel::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, "init"));
  const std::size_t bases = config.num_bases == 0 ? config.num_channels : config.num_bases;
  std::vector<LayerParams> layers;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    LayerParams p;
    p.in_dim = l == 0 ? config.input_dim : config.hidden_dim;
    p.out_dim = l + 1 == config.num_layers ? config.num_classes : config.hidden_dim;
    p.basis = config.basis;
    if (config.basis) {
      for (std::size_t b = 0; b < bases; ++b) p.bases.push_back(glorot(p.in_dim, p.out_dim, rng));
      p.coefficients = glorot(config.num_channels, bases, rng);
    } else {
      for (std::size_t r = 0; r < config.num_channels; ++r) {
        p.relation_weights.push_back(glorot(p.in_dim, p.out_dim, rng));
      }
    }
    p.self_weight = glorot(p.in_dim, p.out_dim, rng);
    layers.push_back(std::move(p));
  }
  return RGCNModel(config, std::move(layers));
}

std::vector<Matrix*> RGCNModel::parameters() {
  std::vector<Matrix*> out;
  for (auto& layer : layers_) {
    for (Matrix* m : layer.tensors()) out.push_back(m);
  }
  return out;
}

std::vector<const Matrix*> RGCNModel::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& layer : layers_) {
    for (const Matrix* m : layer.tensors()) out.push_back(m);
  }
  return out;
}

std::size_t RGCNModel::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* m : parameters()) n += static_cast<std::size_t>(m->size());
  return n;
}

RGCNModel RGCNModel::materialized() const {
  ModelConfig cfg = config_;
  cfg.basis = false;
  cfg.num_bases = 0;
  std::vector<LayerParams> layers;
  for (const auto& p : layers_) {
    LayerParams full;
    full.in_dim = p.in_dim;
    full.out_dim = p.out_dim;
    full.relation_weights = p.channel_weights();
    full.self_weight = p.self_weight;
    layers.push_back(std::move(full));
  }
  return RGCNModel(cfg, std::move(layers));
}

// ---------------------------------------------------------------------------
// Forward

Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout rate must lie in [0, 1]");
  }
  Matrix mask(idx(rows), idx(cols));
  if (rate >= 1.0) return mask.setZero();
  const double keep_scale = 1.0 / (1.0 - rate);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  return mask;
}

Matrix dropout(const Matrix& h, double rate, bool training, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout rate must lie in [0, 1)");
  }
  if (!training || rate == 0.0) return h;
  return h.cwiseProduct(dropout_mask(static_cast<std::size_t>(h.rows()),
                                     static_cast<std::size_t>(h.cols()), rate, seed));
}

Matrix layer_forward(const Matrix& h, const RelationAdjacency& adj,
                     const LayerParams& params, bool apply_relu) {
  check_layer(h, adj, params);
  const auto weights = params.channel_weights();
  Matrix z = aggregate(h, adj, weights, params.self_weight);
  if (apply_relu) z = z.cwiseMax(0.0);
  return z;
}

ForwardResult model_forward(const Matrix& x, const RelationAdjacency& adj,
                            const RGCNModel& model, bool training, std::uint64_t seed) {
  const auto& layers = model.layers();
  const double rate = model.config().dropout;
  ForwardResult result;
  auto& cache = result.cache;
  cache.model_version = model.version();
  cache.num_nodes = adj.num_nodes();

  Matrix h = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    check_layer(h, adj, layers[l]);
    auto weights = layers[l].channel_weights();
    Matrix z = aggregate(h, adj, weights, layers[l].self_weight);
    cache.layer_inputs.push_back(std::move(h));
    cache.channel_weights.push_back(std::move(weights));
    if (l + 1 == layers.size()) {
      result.logits = z;
      cache.pre_activations.push_back(std::move(z));
      break;
    }
    Matrix a = z.cwiseMax(0.0);
    cache.pre_activations.push_back(std::move(z));
    if (training && rate > 0.0) {
      Matrix mask = dropout_mask(static_cast<std::size_t>(a.rows()),
                                 static_cast<std::size_t>(a.cols()), rate,
                                 derive_seed(seed, "dropout", l));
      h = a.cwiseProduct(mask);
      cache.dropout_masks.push_back(std::move(mask));
    } else {
      h = std::move(a);
      cache.dropout_masks.push_back(Matrix::Ones(h.rows(), h.cols()));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Loss

LossResult softmax_cross_entropy(const Matrix& logits, const NodeLabels& labels,
                                 std::span<const NodeIndex> mask) {
  if (mask.empty()) throw Error(ErrorCode::EmptyMask, "loss mask selects no node");
  if (labels.size() != static_cast<std::size_t>(logits.rows())) {
    throw Error(ErrorCode::ShapeMismatch, "label vector length differs from logits rows");
  }
  LossResult out;
  out.probabilities.resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    auto p = out.probabilities.row(i);
    p = (logits.row(i).array() - m).exp().matrix();
    p /= p.sum();
  }
  double total = 0.0;
  for (const NodeIndex node : mask) {
    if (node >= labels.size() || !labels[node] ||
        *labels[node] >= static_cast<std::size_t>(logits.cols())) {
      throw Error(ErrorCode::InvalidArgument,
                  "masked node " + std::to_string(node) + " lacks a valid label");
    }
    // log-sum-exp form keeps the loss finite for saturated rows
    const auto row = logits.row(node);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    total += lse - row(*labels[node]);
  }
  out.loss = total / static_cast<double>(mask.size());
  return out;
}

Matrix softmax_cross_entropy_gradient(const Matrix& probabilities,
                                      const NodeLabels& labels,
                                      std::span<const NodeIndex> mask) {
  if (mask.empty()) throw Error(ErrorCode::EmptyMask, "loss mask selects no node");
  Matrix g = Matrix::Zero(probabilities.rows(), probabilities.cols());
  const double scale = 1.0 / static_cast<double>(mask.size());
  for (const NodeIndex node : mask) {
    g.row(node) = probabilities.row(node) * scale;
    g(node, *labels.at(node)) -= scale;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Backward

Gradients backward(const RGCNModel& model, const RelationAdjacency& adj,
                   const ForwardCache& cache, const Matrix& logits_grad) {
  const auto& layers = model.layers();
  if (cache.model_version != model.version() || cache.num_nodes != adj.num_nodes() ||
      cache.layer_inputs.size() != layers.size() ||
      cache.pre_activations.size() != layers.size()) {
    throw Error(ErrorCode::StaleCache, "forward cache does not match the current model");
  }
  const Matrix& last = cache.pre_activations.back();
  if (logits_grad.rows() != last.rows() || logits_grad.cols() != last.cols()) {
    throw Error(ErrorCode::StaleCache, "loss gradient shape " + shape(logits_grad) +
                                           " does not match logits " + shape(last));
  }

  Gradients grads;
  grads.reserve(layers.size());
  for (const auto& p : layers) grads.push_back(p.zeros_like());

  Matrix dz = logits_grad;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& p = layers[l];
    auto& g = grads[l];
    const Matrix& h = cache.layer_inputs[l];
    const auto& weights = cache.channel_weights[l];
    const bool need_input_grad = l > 0;

    g.self_weight.noalias() = h.transpose() * dz;
    Matrix dh;
    if (need_input_grad) dh.noalias() = dz * p.self_weight.transpose();

    std::vector<Matrix> dw(weights.size());
    for (std::size_t r = 0; r < weights.size(); ++r) {
      const CsrMatrix& a = adj.channel(r);
      if (a.nnz() == 0) {
        dw[r] = Matrix::Zero(weights[r].rows(), weights[r].cols());
        continue;
      }
      const Matrix back = a.transpose_multiply(dz);  // A_r^T dZ
      dw[r].noalias() = h.transpose() * back;
      if (need_input_grad) dh.noalias() += back * weights[r].transpose();
    }

    if (p.basis) {
      for (std::size_t b = 0; b < p.bases.size(); ++b) {
        for (std::size_t r = 0; r < dw.size(); ++r) {
          g.bases[b] += p.coefficients(idx(r), idx(b)) * dw[r];
          g.coefficients(idx(r), idx(b)) = dw[r].cwiseProduct(p.bases[b]).sum();
        }
      }
    } else {
      g.relation_weights = std::move(dw);
    }

    if (need_input_grad) {
      // through dropout and the ReLU of the previous layer
      const Matrix& z_prev = cache.pre_activations[l - 1];
      dz = dh.cwiseProduct(cache.dropout_masks[l - 1]);
      dz = (z_prev.array() > 0.0).select(dz, 0.0);
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Adam

void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter and gradient counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->rows() != grads[k]->rows() || params[k]->cols() != grads[k]->cols()) {
      throw Error(ErrorCode::ShapeMismatch, "gradient " + std::to_string(k) + " is " +
                                                shape(*grads[k]) + ", parameter " +
                                                shape(*params[k]));
    }
  }
  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.second_moment.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  } else if (state.first_moment.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "Adam state tracks a different parameter set");
  }

  const auto& o = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(o.beta1, t);
  const double correction2 = 1.0 - std::pow(o.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& m = state.first_moment[k];
    Matrix& v = state.second_moment[k];
    const Matrix& g = *grads[k];
    m = o.beta1 * m + (1.0 - o.beta1) * g;
    v = o.beta2 * v + (1.0 - o.beta2) * g.cwiseProduct(g);
    auto p = params[k]->array();
    p -= o.learning_rate * (m.array() / correction1) /
         ((v.array() / correction2).sqrt() + o.epsilon);
  }
}

std::vector<const Matrix*> gradient_tensors(const Gradients& grads) {
  std::vector<const Matrix*> out;
  for (const auto& g : grads) {
    for (const Matrix* m : g.tensors()) out.push_back(m);
  }
  return out;
}

void adam_step(RGCNModel& model, const Gradients& grads, AdamState& state) {
  const auto params = model.parameters();
  const auto g = gradient_tensors(grads);
  adam_step(std::span<Matrix* const>(params), std::span<const Matrix* const>(g), state);
  model.mark_updated();
}

}  // namespace textrgcn
