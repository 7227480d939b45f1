#include "textrgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "textrgcn/error.hpp"

namespace textrgcn {

// ---------------------------------------------------------------------------
// Window statistics and PMI

std::uint64_t SlidingWindowStats::pair_count(TokenIndex i, TokenIndex j) const {
  const auto it = pair_windows.find(pair_key(i, j));
  return it == pair_windows.end() ? 0 : it->second;
}

SlidingWindowStats collect_window_stats(
    const std::vector<std::vector<TokenIndex>>& docs, std::size_t window_size,
    std::size_t vocab_size) {
  if (window_size < 2) {
    throw Error(ErrorCode::InvalidArgument, "window_size must be >= 2");
  }
  SlidingWindowStats stats;
  stats.window_size = window_size;
  stats.token_windows.assign(vocab_size, 0);

  std::vector<TokenIndex> window;
  auto count_window = [&](std::span<const TokenIndex> tokens) {
    window.assign(tokens.begin(), tokens.end());
    std::sort(window.begin(), window.end());
    window.erase(std::unique(window.begin(), window.end()), window.end());
    ++stats.total_windows;
    for (std::size_t a = 0; a < window.size(); ++a) {
      if (window[a] >= stats.token_windows.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "token index " + std::to_string(window[a]) +
                        " outside vocabulary of size " + std::to_string(vocab_size));
      }
      ++stats.token_windows[window[a]];
      for (std::size_t b = a + 1; b < window.size(); ++b) {
        ++stats.pair_windows[SlidingWindowStats::pair_key(window[a], window[b])];
      }
    }
  };

  for (const auto& doc : docs) {
    if (doc.empty()) continue;
    const std::span<const TokenIndex> tokens(doc);
    if (doc.size() <= window_size) {
      count_window(tokens);
      continue;
    }
    for (std::size_t start = 0; start + window_size <= doc.size(); ++start) {
      count_window(tokens.subspan(start, window_size));
    }
  }
  return stats;
}

double pmi(const SlidingWindowStats& stats, TokenIndex i, TokenIndex j) {
  const auto wi = stats.token_count(i);
  const auto wj = stats.token_count(j);
  if (wi == 0 || wj == 0) {
    throw Error(ErrorCode::ZeroMarginal,
                "token " + std::to_string(wi == 0 ? i : j) + " occurs in no window");
  }
  const auto wij = stats.pair_count(i, j);
  if (wij == 0) return -std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(wij) * static_cast<double>(stats.total_windows) /
                  (static_cast<double>(wi) * static_cast<double>(wj)));
}

std::vector<LocalEdge> build_word_word_edges(const SlidingWindowStats& stats) {
  std::vector<LocalEdge> edges;
  for (const auto& [key, count] : stats.pair_windows) {
    if (count == 0) continue;
    const auto i = static_cast<TokenIndex>(key >> 32);
    const auto j = static_cast<TokenIndex>(key & 0xffffffffU);
    const double w = pmi(stats, i, j);
    if (w > 0.0) edges.push_back({i, j, w});
  }
  std::sort(edges.begin(), edges.end(), [](const LocalEdge& a, const LocalEdge& b) {
    return a.first != b.first ? a.first < b.first : a.second < b.second;
  });
  return edges;
}

// ---------------------------------------------------------------------------
// Jaccard

double jaccard(std::span<const TokenIndex> a, std::span<const TokenIndex> b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (std::size_t x = 0, y = 0; x < a.size() && y < b.size();) {
    if (a[x] < b[y]) {
      ++x;
    } else if (b[y] < a[x]) {
      ++y;
    } else {
      ++common;
      ++x;
      ++y;
    }
  }
  return static_cast<double>(common) /
         static_cast<double>(a.size() + b.size() - common);
}

std::vector<std::vector<TokenIndex>> token_sets(
    const std::vector<std::vector<TokenIndex>>& docs) {
  std::vector<std::vector<TokenIndex>> sets;
  sets.reserve(docs.size());
  for (const auto& doc : docs) {
    auto& s = sets.emplace_back(doc);
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  return sets;
}

std::vector<LocalEdge> build_doc_doc_edges(
    const std::vector<std::vector<TokenIndex>>& doc_token_sets, double threshold,
    std::optional<std::size_t> max_degree) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "jaccard threshold must lie in [0, 1]");
  }
  const std::size_t n = doc_token_sets.size();

  // Inverted index: only pairs sharing a token can have positive Jaccard.
  TokenIndex max_token = 0;
  for (const auto& s : doc_token_sets) {
    if (!s.empty()) max_token = std::max(max_token, s.back() + 1);
  }
  std::vector<std::vector<std::uint32_t>> postings(max_token);
  for (std::uint32_t d = 0; d < n; ++d) {
    for (const auto t : doc_token_sets[d]) postings[t].push_back(d);
  }

  std::vector<LocalEdge> edges;
  std::vector<std::uint32_t> common(n, 0);
  std::vector<std::uint32_t> touched;
  for (std::uint32_t a = 0; a < n; ++a) {
    touched.clear();
    for (const auto t : doc_token_sets[a]) {
      const auto& plist = postings[t];
      // postings are ascending, so skip partners <= a
      for (auto it = std::upper_bound(plist.begin(), plist.end(), a); it != plist.end();
           ++it) {
        if (common[*it]++ == 0) touched.push_back(*it);
      }
    }
    std::sort(touched.begin(), touched.end());
    for (const auto b : touched) {
      const std::size_t c = common[b];
      common[b] = 0;
      const double j =
          static_cast<double>(c) /
          static_cast<double>(doc_token_sets[a].size() + doc_token_sets[b].size() - c);
      if (j > 0.0 && j >= threshold) edges.push_back({a, b, j});
    }
  }

  if (!max_degree) return edges;

  // Rank every node's incident edges; keep an edge only if both endpoints
  // rank it within their top max_degree.
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    incident[edges[e].first].push_back(e);
    incident[edges[e].second].push_back(e);
  }
  std::vector<std::uint8_t> votes(edges.size(), 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    auto& inc = incident[v];
    auto partner = [&](std::size_t e) {
      return edges[e].first == v ? edges[e].second : edges[e].first;
    };
    std::sort(inc.begin(), inc.end(), [&](std::size_t x, std::size_t y) {
      if (edges[x].weight != edges[y].weight) return edges[x].weight > edges[y].weight;
      return partner(x) < partner(y);
    });
    for (std::size_t k = 0; k < std::min(*max_degree, inc.size()); ++k) ++votes[inc[k]];
  }
  std::vector<LocalEdge> kept;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (votes[e] == 2) kept.push_back(edges[e]);
  }
  return kept;
}

// ---------------------------------------------------------------------------
// TF-IDF

double tfidf(std::size_t term_count_in_doc, std::size_t doc_length,
             std::size_t num_docs, std::size_t df) {
  if (doc_length == 0) {
    throw Error(ErrorCode::InvalidArgument, "tfidf: document length must be positive");
  }
  if (df < 1 || df > num_docs) {
    throw Error(ErrorCode::InvalidArgument,
                "tfidf: document frequency must lie in [1, num_docs]");
  }
  const double tf =
      static_cast<double>(term_count_in_doc) / static_cast<double>(doc_length);
  return tf * std::log(static_cast<double>(num_docs) / static_cast<double>(df));
}

std::vector<LocalEdge> build_doc_word_edges(
    const std::vector<std::vector<TokenIndex>>& docs, const Vocabulary& vocab) {
  std::vector<LocalEdge> edges;
  std::vector<std::size_t> counts(vocab.size(), 0);
  std::vector<TokenIndex> present;
  for (std::uint32_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    if (doc.empty()) continue;
    present.clear();
    for (const auto t : doc) {
      if (t >= vocab.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "token index " + std::to_string(t) + " outside vocabulary");
      }
      if (counts[t]++ == 0) present.push_back(t);
    }
    std::sort(present.begin(), present.end());
    for (const auto t : present) {
      const double w =
          tfidf(counts[t], doc.size(), vocab.num_documents(), vocab.document_frequency(t));
      counts[t] = 0;
      if (w > 0.0) edges.push_back({d, t, w});
    }
  }
  return edges;
}

// ---------------------------------------------------------------------------
// Graph

std::string_view to_string(Relation relation) noexcept {
  switch (relation) {
    case Relation::WordCooccurrence: return "word_cooccurrence";
    case Relation::DocSimilarity: return "doc_similarity";
    case Relation::DocWordFrequency: return "doc_word_frequency";
  }
  return "unknown";
}

Relation relation_from_string(std::string_view name) {
  for (const auto r : kRelations) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorCode::ParseError, "unknown relation '" + std::string(name) + "'");
}

HeteroTextGraph HeteroTextGraph::create(
    std::vector<std::string> document_keys, std::vector<std::string> word_keys,
    std::array<std::vector<Edge>, kNumRelations> edges) {
  HeteroTextGraph g;
  g.num_documents_ = document_keys.size();
  g.keys_ = std::move(document_keys);
  g.keys_.reserve(g.keys_.size() + word_keys.size());
  for (auto& k : word_keys) g.keys_.push_back(std::move(k));

  const std::size_t n = g.keys_.size();
  for (const auto relation : kRelations) {
    auto& list = edges[static_cast<std::size_t>(relation)];
    const std::string rname(to_string(relation));
    const NodeType src_type =
        relation == Relation::WordCooccurrence ? NodeType::Word : NodeType::Document;
    const NodeType dst_type =
        relation == Relation::DocSimilarity ? NodeType::Document : NodeType::Word;
    const bool symmetric = relation != Relation::DocWordFrequency;

    for (auto& e : list) {
      if (e.source >= n || e.target >= n || g.node_type(e.source) != src_type ||
          g.node_type(e.target) != dst_type) {
        throw Error(ErrorCode::DanglingEdge,
                    rname + " edge (" + std::to_string(e.source) + ", " +
                        std::to_string(e.target) + ") has an unknown endpoint");
      }
      if (e.source == e.target) {
        throw Error(ErrorCode::SelfEdge,
                    rname + " self edge on node " + std::to_string(e.source));
      }
      if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
        throw Error(ErrorCode::InvalidWeight,
                    rname + " edge (" + std::to_string(e.source) + ", " +
                        std::to_string(e.target) + ") has non-positive weight");
      }
      if (symmetric && e.source > e.target) std::swap(e.source, e.target);
    }
    std::sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) {
      return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    for (std::size_t k = 1; k < list.size(); ++k) {
      if (list[k].source == list[k - 1].source && list[k].target == list[k - 1].target) {
        throw Error(ErrorCode::DuplicateEdge,
                    rname + " edge (" + std::to_string(list[k].source) + ", " +
                        std::to_string(list[k].target) + ") submitted twice");
      }
    }
    g.edges_[static_cast<std::size_t>(relation)] = std::move(list);
  }
  return g;
}

HeteroTextGraph assemble_graph(const std::vector<LocalEdge>& word_word,
                               const std::vector<LocalEdge>& doc_doc,
                               const std::vector<LocalEdge>& doc_word,
                               const Vocabulary& vocab,
                               const std::vector<TokenizedDocument>& docs) {
  const std::size_t num_docs = docs.size();
  const std::size_t num_words = vocab.size();
  auto check = [](std::uint32_t index, std::size_t limit, std::string_view what) {
    if (index >= limit) {
      throw Error(ErrorCode::DanglingEdge,
                  std::string(what) + " index " + std::to_string(index) + " is unknown");
    }
  };

  std::array<std::vector<Edge>, kNumRelations> edges;
  auto& ww = edges[static_cast<std::size_t>(Relation::WordCooccurrence)];
  for (const auto& e : word_word) {
    check(e.first, num_words, "word");
    check(e.second, num_words, "word");
    ww.push_back({static_cast<NodeIndex>(num_docs + e.first),
                  static_cast<NodeIndex>(num_docs + e.second), e.weight});
  }
  auto& dd = edges[static_cast<std::size_t>(Relation::DocSimilarity)];
  for (const auto& e : doc_doc) {
    check(e.first, num_docs, "document");
    check(e.second, num_docs, "document");
    dd.push_back({e.first, e.second, e.weight});
  }
  auto& dw = edges[static_cast<std::size_t>(Relation::DocWordFrequency)];
  for (const auto& e : doc_word) {
    check(e.first, num_docs, "document");
    check(e.second, num_words, "word");
    dw.push_back({e.first, static_cast<NodeIndex>(num_docs + e.second), e.weight});
  }

  std::vector<std::string> doc_keys;
  doc_keys.reserve(num_docs);
  for (const auto& d : docs) doc_keys.push_back(d.id);
  return HeteroTextGraph::create(std::move(doc_keys), vocab.tokens(), std::move(edges));
}

HeteroTextGraph build_text_graph(const std::vector<TokenizedDocument>& docs,
                                 const Vocabulary& vocab,
                                 const GraphBuildOptions& options) {
  std::vector<std::vector<TokenIndex>> encoded;
  encoded.reserve(docs.size());
  for (const auto& d : docs) {
    auto& row = encoded.emplace_back();
    for (const auto& t : d.tokens) {
      if (const auto idx = vocab.find(t)) row.push_back(*idx);
    }
  }
  const auto stats = collect_window_stats(encoded, options.window_size, vocab.size());
  const auto word_word = build_word_word_edges(stats);
  const auto doc_doc =
      build_doc_doc_edges(token_sets(encoded), options.jaccard_threshold, options.max_degree);
  const auto doc_word = build_doc_word_edges(encoded, vocab);
  return assemble_graph(word_word, doc_doc, doc_word, vocab, docs);
}

// ---------------------------------------------------------------------------
// Adjacency

std::string_view to_string(Channel channel) noexcept {
  switch (channel) {
    case Channel::WordCooccurrence: return "word_cooccurrence";
    case Channel::DocSimilarity: return "doc_similarity";
    case Channel::DocWordFrequency: return "doc_word_frequency";
    case Channel::InverseDocWordFrequency: return "inverse_doc_word_frequency";
    case Channel::SelfLoop: return "self_loop";
  }
  return "unknown";
}

std::string_view to_string(Normalization normalization) noexcept {
  switch (normalization) {
    case Normalization::Count: return "count";
    case Normalization::WeightedDegree: return "weighted-degree";
  }
  return "weighted-degree";
}

Normalization normalization_from_string(std::string_view name) {
  if (name == "count") return Normalization::Count;
  if (name == "weighted-degree") return Normalization::WeightedDegree;
  throw Error(ErrorCode::InvalidArgument,
              "unknown normalization '" + std::string(name) + "'");
}

RelationAdjacency::RelationAdjacency(std::size_t num_nodes,
                                     std::array<CsrMatrix, kNumChannels> channels)
    : num_nodes_(num_nodes), channels_(std::move(channels)) {
  for (const auto& c : channels_) {
    if (c.rows() != num_nodes || c.cols() != num_nodes) {
      throw Error(ErrorCode::ShapeMismatch, "adjacency channel is not num_nodes square");
    }
  }
}

RelationAdjacency RelationAdjacency::without(Channel c) const {
  RelationAdjacency copy = *this;
  copy.channels_[static_cast<std::size_t>(c)] = CsrMatrix(num_nodes_, num_nodes_);
  return copy;
}

RelationAdjacency to_relation_adjacency(const HeteroTextGraph& graph,
                                        const AdjacencyOptions& options) {
  const std::size_t n = graph.num_nodes();
  std::array<std::vector<Triplet>, kNumChannels> raw;

  auto weight_of = [&](const Edge& e) { return options.use_edge_weights ? e.weight : 1.0; };
  for (const auto& e : graph.edges(Relation::WordCooccurrence)) {
    raw[0].push_back({e.target, e.source, weight_of(e)});
    raw[0].push_back({e.source, e.target, weight_of(e)});
  }
  for (const auto& e : graph.edges(Relation::DocSimilarity)) {
    raw[1].push_back({e.target, e.source, weight_of(e)});
    raw[1].push_back({e.source, e.target, weight_of(e)});
  }
  for (const auto& e : graph.edges(Relation::DocWordFrequency)) {
    // message document -> word lands in the word's row
    raw[2].push_back({e.target, e.source, weight_of(e)});
    raw[3].push_back({e.source, e.target, weight_of(e)});
  }

  std::array<CsrMatrix, kNumChannels> channels;
  for (std::size_t c = 0; c + 1 < kNumChannels; ++c) {
    CsrMatrix m = CsrMatrix::from_triplets(n, n, std::move(raw[c]));
    for (std::size_t i = 0; i < n; ++i) {
      auto vals = m.row_values(i);
      if (vals.empty()) continue;
      double norm = 0.0;
      if (options.normalization == Normalization::Count) {
        norm = static_cast<double>(vals.size());
      } else {
        for (const double v : vals) norm += v;
      }
      for (double& v : vals) v /= norm;
    }
    channels[c] = std::move(m);
  }
  channels[static_cast<std::size_t>(Channel::SelfLoop)] = CsrMatrix::identity(n);
  return RelationAdjacency(n, std::move(channels));
}

}  // namespace textrgcn
