#ifndef TEXTRGCN_RGCN_HPP
#define TEXTRGCN_RGCN_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "textrgcn/corpus.hpp"
#include "textrgcn/graph.hpp"
#include "textrgcn/sparse.hpp"

namespace textrgcn {

/// Parameters of one relational layer.
///
/// Full mode stores one d_in x d_out matrix per message channel. Basis mode
/// stores B shared matrices plus an R x B coefficient table, and the
/// per-channel weights only exist transiently via materialize_weights().
/// The self weight is never factored.
struct LayerParams {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  bool basis = false;
  std::vector<Matrix> relation_weights;  // full mode, one per message channel
  std::vector<Matrix> bases;             // basis mode, B entries
  Matrix coefficients;                   // basis mode, channels x B
  Matrix self_weight;

  std::size_t num_channels() const {
    return basis ? static_cast<std::size_t>(coefficients.rows()) : relation_weights.size();
  }

  /// Per-channel weights, materialized when in basis mode.
  std::vector<Matrix> channel_weights() const;

  /// Same layout, all zeros.
  LayerParams zeros_like() const;

  /// Tensors in declared order: relation weights (or bases then
  /// coefficients), then the self weight.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
};

/// W_r = sum_b coeffs(r, b) * bases[b]. Errors: ShapeMismatch.
std::vector<Matrix> materialize_weights(std::span<const Matrix> bases,
                                        const Matrix& coefficients);

struct ModelConfig {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 64;
  std::size_t num_classes = 2;
  std::size_t num_layers = 2;
  double dropout = 0.5;
  bool basis = false;
  std::size_t num_bases = 0;  // 0 selects one basis per message channel
  std::size_t num_channels = kNumMessageChannels;

  void validate() const;
};

class RGCNModel {
 public:
  RGCNModel() = default;
  RGCNModel(ModelConfig config, std::vector<LayerParams> layers);

  /// Glorot-uniform weights drawn from the "init" substream of seed.
  static RGCNModel initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const std::vector<LayerParams>& layers() const noexcept { return layers_; }
  std::vector<LayerParams>& mutable_layers() noexcept { return layers_; }

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::size_t parameter_count() const;

  /// Bumped on every parameter update; caches from older versions are stale.
  std::uint64_t version() const noexcept { return version_; }
  void mark_updated() noexcept { ++version_; }

  /// The same network with every basis-mode layer replaced by its
  /// materialized full weights.
  RGCNModel materialized() const;

 private:
  ModelConfig config_;
  std::vector<LayerParams> layers_;
  std::uint64_t version_ = 0;
};

/// Inverted-dropout scale factors: 0 with probability rate, else
/// 1 / (1 - rate). Rate 1 yields all zeros.
Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed);

/// Training: H scaled by dropout_mask(rate, seed). Inference: H unchanged.
Matrix dropout(const Matrix& h, double rate, bool training, std::uint64_t seed);

/// phi(sum_r A_r H W_r + H W_0) over the message channels. The self-loop
/// channel is represented by W_0 alone. Errors: ShapeMismatch,
/// NonFiniteInput.
Matrix layer_forward(const Matrix& h, const RelationAdjacency& adj,
                     const LayerParams& params, bool apply_relu);

struct ForwardCache {
  std::uint64_t model_version = 0;
  std::size_t num_nodes = 0;
  std::vector<Matrix> layer_inputs;     // input to each layer
  std::vector<Matrix> pre_activations;  // sum before the nonlinearity
  std::vector<Matrix> dropout_masks;    // one per hidden layer
  std::vector<std::vector<Matrix>> channel_weights;  // materialized W_r
};

struct ForwardResult {
  Matrix logits;
  ForwardCache cache;
};

/// ReLU and dropout between layers, raw logits from the last layer.
/// Dropout draws from the "dropout" substream of seed and only runs when
/// training.
ForwardResult model_forward(const Matrix& x, const RelationAdjacency& adj,
                            const RGCNModel& model, bool training, std::uint64_t seed);

using NodeLabels = std::vector<std::optional<ClassIndex>>;

struct LossResult {
  double loss = 0.0;
  Matrix probabilities;  // row-wise softmax of every node
};

/// Mean over masked nodes of -ln softmax(logits)[label].
/// Errors: EmptyMask, InvalidArgument for missing or out-of-range labels.
LossResult softmax_cross_entropy(const Matrix& logits, const NodeLabels& labels,
                                 std::span<const NodeIndex> mask);

/// d(loss)/d(logits) for softmax_cross_entropy: (P - Y) / |mask| on masked
/// rows, zero elsewhere.
Matrix softmax_cross_entropy_gradient(const Matrix& probabilities,
                                      const NodeLabels& labels,
                                      std::span<const NodeIndex> mask);

/// Gradients mirror the parameter layout, one LayerParams per layer.
using Gradients = std::vector<LayerParams>;

/// Reverse-mode pass for model_forward. Errors: StaleCache when the model
/// changed since the forward call or shapes disagree.
Gradients backward(const RGCNModel& model, const RelationAdjacency& adj,
                   const ForwardCache& cache, const Matrix& logits_grad);

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// Bias-corrected Adam on parallel tensor lists. Moments are allocated on
/// the first call. Errors: ShapeMismatch.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state);
/// Updates every model tensor and bumps the model version.
void adam_step(RGCNModel& model, const Gradients& grads, AdamState& state);

std::vector<const Matrix*> gradient_tensors(const Gradients& grads);

}  // namespace textrgcn

#endif  // TEXTRGCN_RGCN_HPP
