#include <cmath>
#include <random>

#include "doctest.h"
#include "model_fixtures.hpp"
#include "textrgcn/error.hpp"
#include "textrgcn/rgcn.hpp"

using namespace textrgcn;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected textrgcn::Error");
  return ErrorCode::InvalidArgument;
}

LayerParams full_layer(std::mt19937_64& rng, std::size_t in, std::size_t out) {
  LayerParams p;
  p.in_dim = in;
  p.out_dim = out;
  for (std::size_t r = 0; r < kNumMessageChannels; ++r) {
    p.relation_weights.push_back(fixture::random_matrix(rng, in, out));
  }
  p.self_weight = fixture::random_matrix(rng, in, out);
  return p;
}

NodeLabels labels_for(std::initializer_list<int> values) {
  NodeLabels out;
  for (const int v : values) {
    out.push_back(v < 0 ? std::nullopt : std::optional<ClassIndex>(static_cast<ClassIndex>(v)));
  }
  return out;
}

}  // namespace

TEST_CASE("materialize_weights") {
  std::mt19937_64 rng(1);
  const std::vector<Matrix> bases = {fixture::random_matrix(rng, 3, 2),
                                     fixture::random_matrix(rng, 3, 2),
                                     fixture::random_matrix(rng, 3, 2)};
  const auto identity = materialize_weights(bases, Matrix::Identity(3, 3));
  for (std::size_t r = 0; r < 3; ++r) CHECK(identity[r] == bases[r]);

  Matrix scale(3, 1);
  scale << 2.0, -1.0, 0.5;
  const auto scaled = materialize_weights(std::span(bases).first(1), scale);
  for (std::size_t r = 0; r < 3; ++r) CHECK(scaled[r].isApprox(scale(r, 0) * bases[0]));

  const Matrix coeffs = fixture::random_matrix(rng, 3, 2);
  const auto got = materialize_weights(std::span(bases).first(2), coeffs);
  const auto want = oracle::combine_bases(
      {fixture::to_dense(bases[0]), fixture::to_dense(bases[1])}, fixture::to_dense(coeffs));
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(fixture::max_abs_diff(fixture::to_dense(got[r]), want[r]) <= 1e-12);
  }

  CHECK(code_of([&] { materialize_weights(bases, Matrix::Identity(3, 2)); }) ==
        ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { materialize_weights({}, Matrix(3, 0)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("layer_forward special cases") {
  std::mt19937_64 rng(2);
  const auto g = HeteroTextGraph::create({"d0", "d1"}, {"a", "b", "c"},
                                         {std::vector<Edge>{{2, 3, 1.0}}, {}, {}});
  const auto adj = to_relation_adjacency(g);
  const Matrix h = fixture::random_matrix(rng, 5, 3);

  auto p = full_layer(rng, 3, 3);
  for (auto& w : p.relation_weights) w.setZero();
  p.self_weight = Matrix::Identity(3, 3);
  CHECK(layer_forward(h, adj, p, false) == h);

  // Node 4 has no neighbours in any channel.
  const auto q = full_layer(rng, 3, 2);
  const Matrix out = layer_forward(h, adj, q, true);
  const Matrix isolated = (h.row(4) * q.self_weight).cwiseMax(0.0);
  CHECK(out.row(4).isApprox(isolated));

  CHECK(code_of([&] { layer_forward(Matrix::Zero(4, 3), adj, q, true); }) ==
        ErrorCode::ShapeMismatch);
  Matrix bad = h;
  bad(0, 0) = INFINITY;
  CHECK(code_of([&] { layer_forward(bad, adj, q, true); }) == ErrorCode::NonFiniteInput);
}

TEST_CASE("layer_forward matches the per-node oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = fixture::random_graph(rng, 3, 5, 0.4);
    for (const bool weighted : {false, true}) {
      const AdjacencyOptions opts{weighted ? Normalization::WeightedDegree : Normalization::Count,
                                  weighted};
      const auto adj = to_relation_adjacency(g, opts);
      const auto p = full_layer(rng, 4, 3);
      const Matrix h = fixture::random_matrix(rng, 8, 4);
      std::vector<oracle::Dense> weights;
      for (const auto& w : p.relation_weights) weights.push_back(fixture::to_dense(w));
      for (const bool relu : {false, true}) {
        const auto want = oracle::relational_layer(fixture::to_dense(h),
                                                   fixture::dense_channels(g, weighted, weighted),
                                                   weights, fixture::to_dense(p.self_weight), relu);
        CHECK(fixture::max_abs_diff(fixture::to_dense(layer_forward(h, adj, p, relu)), want) <=
              1e-10);
      }
    }
  }
}

TEST_CASE("model_forward matches the two-layer oracle in both modes") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = fixture::random_instance(rng, 4, 6, 5, 3);
    for (const bool basis : {false, true}) {
      const auto model = RGCNModel::initialize(fixture::small_config(5, 3, basis, 0.5), rng());
      const auto got = model_forward(in.x, in.adj, model, false, 0).logits;
      CHECK(fixture::max_abs_diff(fixture::to_dense(got),
                                  fixture::oracle_logits(in.graph, {}, in.x, model)) <= 1e-10);
    }
  }
}

TEST_CASE("model_forward dropout behaviour") {
  std::mt19937_64 rng(5);
  const auto in = fixture::random_instance(rng, 4, 6, 5, 3);

  const auto no_drop = RGCNModel::initialize(fixture::small_config(5, 3, false, 0.0), 9);
  CHECK(model_forward(in.x, in.adj, no_drop, true, 1).logits ==
        model_forward(in.x, in.adj, no_drop, false, 1).logits);

  const auto half = RGCNModel::initialize(fixture::small_config(5, 3, false, 0.5), 9);
  const auto a = model_forward(in.x, in.adj, half, true, 77).logits;
  CHECK(a == model_forward(in.x, in.adj, half, true, 77).logits);
  CHECK(a != model_forward(in.x, in.adj, half, true, 78).logits);

  const auto all = RGCNModel::initialize(fixture::small_config(5, 3, false, 1.0), 9);
  const auto logits = model_forward(in.x, in.adj, all, true, 3).logits;
  CHECK(logits.cwiseAbs().maxCoeff() == 0.0);
  const auto loss = softmax_cross_entropy(logits, in.labels, in.mask);
  CHECK(loss.loss == doctest::Approx(std::log(3.0)).epsilon(1e-14));
}

TEST_CASE("dropout preserves expectation") {
  const Matrix ones = Matrix::Ones(1, 1);
  CHECK(dropout(ones, 0.0, true, 1) == ones);
  CHECK(dropout(ones, 0.7, false, 1) == ones);

  // 10k trials of a 1x1 mask at rate 0.5: mean 1, std of the mean 0.01.
  constexpr int kTrials = 10000;
  const double rate = 0.5;
  double sum = 0.0;
  for (int t = 0; t < kTrials; ++t) sum += dropout_mask(1, 1, rate, static_cast<std::uint64_t>(t))(0, 0);
  const double sigma = std::sqrt(rate / (1.0 - rate) / kTrials);
  CHECK(std::abs(sum / kTrials - 1.0) < 3.0 * sigma);

  const Matrix big = dropout_mask(200, 50, 0.3, 11);
  const double kept = static_cast<double>((big.array() != 0.0).count()) / 10000.0;
  CHECK(std::abs(kept - 0.7) < 0.03);
  CHECK(((big.array() == 0.0) || (big.array() == 1.0 / 0.7)).all());
}

TEST_CASE("softmax cross-entropy") {
  const Matrix uniform = Matrix::Zero(2, 5);
  const auto labels = labels_for({0, 4});
  const std::vector<NodeIndex> both = {0, 1};
  CHECK(softmax_cross_entropy(uniform, labels, both).loss ==
        doctest::Approx(std::log(5.0)).epsilon(1e-14));

  Matrix confident = Matrix::Zero(1, 3);
  confident(0, 1) = 800.0;
  const auto r = softmax_cross_entropy(confident, labels_for({1}), std::vector<NodeIndex>{0});
  CHECK(r.loss < 1e-300);
  CHECK(std::isfinite(r.loss));

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix logits = fixture::random_matrix(rng, 6, 3, 4.0);
    NodeLabels lab(6);
    std::vector<NodeIndex> mask;
    std::vector<std::size_t> rows, ys;
    for (NodeIndex i = 0; i < 6; ++i) {
      if (rng() % 3 == 0) continue;
      lab[i] = static_cast<ClassIndex>(rng() % 3);
      mask.push_back(i);
      rows.push_back(i);
      ys.push_back(*lab[i]);
    }
    if (mask.empty()) continue;
    const auto got = softmax_cross_entropy(logits, lab, mask);
    CHECK(std::abs(got.loss - oracle::cross_entropy(fixture::to_dense(logits), rows, ys)) <= 1e-12);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::abs(got.probabilities.row(i).sum() - 1.0) <= 1e-12);
  }

  CHECK(code_of([&] { softmax_cross_entropy(uniform, labels, {}); }) == ErrorCode::EmptyMask);
  CHECK(code_of([&] {
          softmax_cross_entropy(uniform, labels_for({-1, 0}), std::vector<NodeIndex>{0});
        }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] {
          softmax_cross_entropy(uniform, labels_for({7, 0}), std::vector<NodeIndex>{0});
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 rng(7);
  for (const bool basis : {false, true}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto in = fixture::random_instance(rng, 4, 6, 4, 3);
      const auto model = RGCNModel::initialize(fixture::small_config(4, 3, basis, 0.5), rng());
      CHECK_MESSAGE(fixture::gradient_check(model, in, rng()) < 1e-6, "basis=" << basis);
    }
  }
}

TEST_CASE("backward edge cases") {
  std::mt19937_64 rng(8);
  const auto in = fixture::random_instance(rng, 4, 6, 4, 3);
  auto model = RGCNModel::initialize(fixture::small_config(4, 3, false), 1);
  const auto fwd = model_forward(in.x, in.adj, model, false, 0);

  const auto zero = backward(model, in.adj, fwd.cache, Matrix::Zero(10, 3));
  for (const auto* g : gradient_tensors(zero)) CHECK(g->cwiseAbs().maxCoeff() == 0.0);

  // The doc-doc channel carries no edges here, so its weights get no signal.
  const auto g = HeteroTextGraph::create({"d0", "d1"}, {"a", "b"},
                                         {std::vector<Edge>{{2, 3, 1.0}}, {},
                                          std::vector<Edge>{{0, 2, 1.0}, {1, 3, 0.5}}});
  const auto adj = to_relation_adjacency(g);
  const Matrix x = fixture::random_matrix(rng, 4, 4);
  const auto f2 = model_forward(x, adj, model, false, 0);
  const auto grads = backward(model, adj, f2.cache, fixture::random_matrix(rng, 4, 3));
  for (const auto& layer : grads) {
    CHECK(layer.relation_weights[static_cast<std::size_t>(Channel::DocSimilarity)]
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK(layer.self_weight.cwiseAbs().maxCoeff() > 0.0);
  }

  AdamState state;
  adam_step(model, zero, state);
  CHECK(code_of([&] { backward(model, in.adj, fwd.cache, Matrix::Zero(10, 3)); }) ==
        ErrorCode::StaleCache);
  const auto fresh = model_forward(in.x, in.adj, model, false, 0);
  CHECK(code_of([&] { backward(model, in.adj, fresh.cache, Matrix::Zero(9, 3)); }) ==
        ErrorCode::StaleCache);
}

TEST_CASE("adam") {
  SUBCASE("single scalar step against a hand computation") {
    const AdamOptions o{0.01, 0.9, 0.999, 1e-8};
    for (const double g : {0.5, -3.0, 1e-6}) {
      Matrix p = Matrix::Constant(1, 1, 2.0);
      const Matrix grad = Matrix::Constant(1, 1, g);
      AdamState s{o, 0, {}, {}};
      Matrix* params[] = {&p};
      const Matrix* grads[] = {&grad};
      adam_step(params, grads, s);
      const double m = (1 - o.beta1) * g;
      const double v = (1 - o.beta2) * g * g;
      const double m_hat = m / (1 - o.beta1);
      const double v_hat = v / (1 - o.beta2);
      CHECK(std::abs(p(0, 0) - (2.0 - o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon))) <=
            1e-12);
      CHECK(s.step == 1);
      CHECK(s.first_moment[0](0, 0) == doctest::Approx(m));
      CHECK(s.second_moment[0](0, 0) == doctest::Approx(v));
    }
  }
  SUBCASE("zero gradient leaves parameters and decays moments") {
    Matrix p = Matrix::Constant(2, 2, 1.5);
    const Matrix one = Matrix::Ones(2, 2);
    const Matrix zero = Matrix::Zero(2, 2);
    AdamState s;
    Matrix* params[] = {&p};
    const Matrix* g1[] = {&one};
    const Matrix* g0[] = {&zero};
    adam_step(params, g1, s);
    const double m_before = s.first_moment[0](0, 0);
    adam_step(params, g0, s);
    CHECK(s.first_moment[0](0, 0) < m_before);
    CHECK(s.first_moment[0](0, 0) > 0.0);
    Matrix q = Matrix::Constant(2, 2, 1.5);
    AdamState fresh;
    Matrix* qp[] = {&q};
    adam_step(qp, g0, fresh);
    CHECK(q == Matrix::Constant(2, 2, 1.5));
  }
  SUBCASE("constant gradient steps approach the learning rate") {
    Matrix p = Matrix::Zero(1, 1);
    const Matrix g = Matrix::Constant(1, 1, 0.3);
    AdamState s;
    Matrix* params[] = {&p};
    const Matrix* grads[] = {&g};
    double last = 0.0;
    for (int k = 0; k < 2000; ++k) {
      const double before = p(0, 0);
      adam_step(params, grads, s);
      last = before - p(0, 0);
    }
    CHECK(last == doctest::Approx(0.01).epsilon(1e-6));
  }
  SUBCASE("shape mismatch") {
    Matrix p = Matrix::Zero(2, 2);
    const Matrix g = Matrix::Zero(2, 3);
    AdamState s;
    Matrix* params[] = {&p};
    const Matrix* grads[] = {&g};
    CHECK(code_of([&] { adam_step(params, grads, s); }) == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("permutation equivariance and basis consistency") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = fixture::random_instance(rng, 5, 7, 4, 3);
    for (const bool basis : {false, true}) {
      const auto model = RGCNModel::initialize(fixture::small_config(4, 3, basis, 0.5), rng());
      CHECK(fixture::equivariance_gap(rng, in, model) <= 1e-10);
    }
    const auto basis_model = RGCNModel::initialize(fixture::small_config(4, 3, true, 0.5), rng());
    CHECK(fixture::basis_matches_full(basis_model, in, rng()));
  }
}

TEST_CASE("one small Adam step lowers the training loss") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    const auto in = fixture::random_instance(rng, 4, 6, 4, 3);
    auto model = RGCNModel::initialize(fixture::small_config(4, 3, seed % 2 == 1), seed);
    const auto fwd = model_forward(in.x, in.adj, model, false, 0);
    const auto loss = softmax_cross_entropy(fwd.logits, in.labels, in.mask);
    const auto grads = backward(
        model, in.adj, fwd.cache,
        softmax_cross_entropy_gradient(loss.probabilities, in.labels, in.mask));
    AdamState state{{1e-3, 0.9, 0.999, 1e-8}, 0, {}, {}};
    adam_step(model, grads, state);
    const auto after = softmax_cross_entropy(model_forward(in.x, in.adj, model, false, 0).logits,
                                             in.labels, in.mask);
    CHECK_MESSAGE(after.loss < loss.loss, "seed " << seed);
  }
}

TEST_CASE("model construction") {
  const auto m = RGCNModel::initialize(fixture::small_config(6, 3, false), 1);
  REQUIRE(m.layers().size() == 2);
  CHECK(m.layers()[0].in_dim == 6);
  CHECK(m.layers()[0].out_dim == 5);
  CHECK(m.layers()[1].out_dim == 3);
  CHECK(m.parameter_count() == 5 * (6 * 5) + 5 * (5 * 3));
  const auto again = RGCNModel::initialize(fixture::small_config(6, 3, false), 1);
  CHECK(m.layers()[0].self_weight == again.layers()[0].self_weight);

  const auto b = RGCNModel::initialize(fixture::small_config(6, 3, true), 1);
  CHECK(b.layers()[0].bases.size() == 2);
  CHECK(b.layers()[0].coefficients.rows() == 4);
  CHECK(b.parameter_count() == 3 * 30 + 4 * 2 + 3 * 15 + 4 * 2);

  auto bad = fixture::small_config(0, 3, false);
  CHECK_THROWS_AS(RGCNModel::initialize(bad, 1), Error);
  bad = fixture::small_config(3, 3, false, 1.5);
  CHECK_THROWS_AS(RGCNModel::initialize(bad, 1), Error);
}
