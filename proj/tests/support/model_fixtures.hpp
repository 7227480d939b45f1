// Random model instances plus the reference checks shared by the unit and
// acceptance suites: the dense two-layer evaluation and finite-difference
// gradients.
#ifndef TEXTRGCN_TESTS_MODEL_FIXTURES_HPP
#define TEXTRGCN_TESTS_MODEL_FIXTURES_HPP

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "graph_fixtures.hpp"
#include "oracles.hpp"
#include "textrgcn/graph.hpp"
#include "textrgcn/rgcn.hpp"

namespace fixture {

struct Instance {
  textrgcn::HeteroTextGraph graph;
  textrgcn::RelationAdjacency adj;
  textrgcn::Matrix x;
  textrgcn::NodeLabels labels;
  std::vector<textrgcn::NodeIndex> mask;
};

inline textrgcn::Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                                      double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  textrgcn::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
  }
  return m;
}

/// Random graph with dense features; every document and every other word
/// carries a label in [0, classes).
inline Instance random_instance(std::mt19937_64& rng, std::size_t docs, std::size_t words,
                                std::size_t feature_dim, std::size_t classes,
                                const textrgcn::AdjacencyOptions& options = {}) {
  Instance in;
  in.graph = random_graph(rng, docs, words, 0.35);
  in.adj = textrgcn::to_relation_adjacency(in.graph, options);
  in.x = random_matrix(rng, in.graph.num_nodes(), feature_dim);
  in.labels.resize(in.graph.num_nodes());
  for (textrgcn::NodeIndex i = 0; i < in.graph.num_nodes(); ++i) {
    if (i < docs || i % 2 == 0) {
      in.labels[i] = static_cast<textrgcn::ClassIndex>(rng() % classes);
      in.mask.push_back(i);
    }
  }
  return in;
}

inline textrgcn::ModelConfig small_config(std::size_t input_dim, std::size_t classes,
                                          bool basis, double dropout = 0.0) {
  textrgcn::ModelConfig c;
  c.input_dim = input_dim;
  c.hidden_dim = 5;
  c.num_classes = classes;
  c.dropout = dropout;
  c.basis = basis;
  c.num_bases = basis ? 2 : 0;
  return c;
}

/// Logits of a dropout-free forward pass evaluated with the per-node
/// oracle on dense copies of the weights.
inline oracle::Dense oracle_logits(const textrgcn::HeteroTextGraph& graph,
                                   const textrgcn::AdjacencyOptions& options,
                                   const textrgcn::Matrix& x,
                                   const textrgcn::RGCNModel& model) {
  const auto adj = dense_channels(
      graph, options.normalization == textrgcn::Normalization::WeightedDegree,
      options.use_edge_weights);
  oracle::Dense h = to_dense(x);
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    std::vector<oracle::Dense> weights;
    if (p.basis) {
      std::vector<oracle::Dense> bases;
      for (const auto& b : p.bases) bases.push_back(to_dense(b));
      weights = oracle::combine_bases(bases, to_dense(p.coefficients));
    } else {
      for (const auto& w : p.relation_weights) weights.push_back(to_dense(w));
    }
    h = oracle::relational_layer(h, adj, weights, to_dense(p.self_weight),
                                 l + 1 < layers.size());
  }
  return h;
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-5});
}

/// Largest relative error between backward() and central differences over
/// every parameter entry. Training-mode forward with a fixed seed, so the
/// dropout masks match across perturbations.
inline double gradient_check(textrgcn::RGCNModel model, const Instance& in,
                             std::uint64_t seed, double step = 1e-4) {
  using namespace textrgcn;
  const auto loss_at = [&](const RGCNModel& m) {
    const auto fwd = model_forward(in.x, in.adj, m, true, seed);
    return softmax_cross_entropy(fwd.logits, in.labels, in.mask).loss;
  };
  const auto fwd = model_forward(in.x, in.adj, model, true, seed);
  const auto loss = softmax_cross_entropy(fwd.logits, in.labels, in.mask);
  const auto grads = backward(model, in.adj, fwd.cache,
                              softmax_cross_entropy_gradient(loss.probabilities, in.labels,
                                                             in.mask));
  const auto analytic = gradient_tensors(grads);
  const auto params = model.parameters();
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Matrix& p = *params[t];
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double saved = p.data()[k];
      p.data()[k] = saved + step;
      const double up = loss_at(model);
      p.data()[k] = saved - step;
      const double down = loss_at(model);
      p.data()[k] = saved;
      worst = std::max(worst, relative_error(analytic[t]->data()[k], (up - down) / (2 * step)));
    }
  }
  return worst;
}

/// Permutes nodes of a graph: new index = perm[old index]. Documents stay
/// in the document range, words in the word range.
inline textrgcn::HeteroTextGraph permute_graph(const textrgcn::HeteroTextGraph& g,
                                               const std::vector<textrgcn::NodeIndex>& perm) {
  using namespace textrgcn;
  std::vector<std::string> doc_keys(g.num_documents());
  std::vector<std::string> word_keys(g.num_words());
  for (NodeIndex i = 0; i < g.num_nodes(); ++i) {
    if (i < g.num_documents()) {
      doc_keys[perm[i]] = g.key(i);
    } else {
      word_keys[perm[i] - g.num_documents()] = g.key(i);
    }
  }
  std::array<std::vector<Edge>, kNumRelations> edges;
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    for (const auto& e : g.edges(kRelations[r])) {
      edges[r].push_back({perm[e.source], perm[e.target], e.weight});
    }
  }
  return HeteroTextGraph::create(std::move(doc_keys), std::move(word_keys), std::move(edges));
}

/// Type-preserving random permutation.
inline std::vector<textrgcn::NodeIndex> random_permutation(std::mt19937_64& rng,
                                                           std::size_t docs,
                                                           std::size_t words) {
  std::vector<textrgcn::NodeIndex> d(docs), w(words);
  for (std::size_t i = 0; i < docs; ++i) d[i] = static_cast<textrgcn::NodeIndex>(i);
  for (std::size_t i = 0; i < words; ++i) w[i] = static_cast<textrgcn::NodeIndex>(docs + i);
  std::shuffle(d.begin(), d.end(), rng);
  std::shuffle(w.begin(), w.end(), rng);
  d.insert(d.end(), w.begin(), w.end());
  return d;
}

/// Largest |model_forward(PX, PAP^T) - P model_forward(X, A)| entry.
inline double equivariance_gap(std::mt19937_64& rng, const Instance& in,
                               const textrgcn::RGCNModel& model,
                               const textrgcn::AdjacencyOptions& options = {}) {
  using namespace textrgcn;
  const auto perm = random_permutation(rng, in.graph.num_documents(), in.graph.num_words());
  const auto pg = permute_graph(in.graph, perm);
  Matrix px(in.x.rows(), in.x.cols());
  for (Eigen::Index i = 0; i < in.x.rows(); ++i) px.row(perm[static_cast<std::size_t>(i)]) = in.x.row(i);
  const auto base = model_forward(in.x, in.adj, model, false, 0).logits;
  const auto moved = model_forward(px, to_relation_adjacency(pg, options), model, false, 0).logits;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < base.rows(); ++i) {
    worst = std::max(worst,
                     (moved.row(perm[static_cast<std::size_t>(i)]) - base.row(i)).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Full-mode copy of a basis model; forward outputs must match bit for bit.
inline bool basis_matches_full(const textrgcn::RGCNModel& basis_model, const Instance& in,
                               std::uint64_t seed) {
  const auto full = basis_model.materialized();
  for (const bool training : {false, true}) {
    const auto a = textrgcn::model_forward(in.x, in.adj, basis_model, training, seed).logits;
    const auto b = textrgcn::model_forward(in.x, in.adj, full, training, seed).logits;
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if (std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace fixture

#endif  // TEXTRGCN_TESTS_MODEL_FIXTURES_HPP
