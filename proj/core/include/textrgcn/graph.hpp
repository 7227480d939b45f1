#ifndef TEXTRGCN_GRAPH_HPP
#define TEXTRGCN_GRAPH_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textrgcn/corpus.hpp"
#include "textrgcn/sparse.hpp"

namespace textrgcn {

// ---------------------------------------------------------------------------
// Co-occurrence statistics

/// Sliding-window counts over a token-index corpus.
///
/// Windows move with stride 1 inside each document; a document no longer
/// than the window contributes one window holding the whole document, and an
/// empty document contributes none. Within a window every distinct token and
/// every distinct unordered pair is counted once.
struct SlidingWindowStats {
  std::size_t window_size = 0;
  std::uint64_t total_windows = 0;
  std::vector<std::uint64_t> token_windows;  // #W(i), index = token
  std::unordered_map<std::uint64_t, std::uint64_t> pair_windows;  // key: pair_key(i, j)

  static std::uint64_t pair_key(TokenIndex i, TokenIndex j) noexcept {
    if (i > j) std::swap(i, j);
    return (static_cast<std::uint64_t>(i) << 32) | j;
  }

  std::uint64_t token_count(TokenIndex i) const {
    return i < token_windows.size() ? token_windows[i] : 0;
  }
  std::uint64_t pair_count(TokenIndex i, TokenIndex j) const;
};

/// vocab_size may exceed the largest token index seen; it fixes the length
/// of token_windows.
SlidingWindowStats collect_window_stats(
    const std::vector<std::vector<TokenIndex>>& docs, std::size_t window_size,
    std::size_t vocab_size);

/// ln(#W(i,j) * #W / (#W(i) * #W(j))), or -infinity when the pair never
/// co-occurs. Throws ZeroMarginal when either token has no window.
double pmi(const SlidingWindowStats& stats, TokenIndex i, TokenIndex j);

// ---------------------------------------------------------------------------
// Edge lists in local index spaces

/// An edge before assembly. Endpoints are indices within their node type:
/// word indices for word-word, document indices for doc-doc, and
/// (document, word) for doc-word edges.
struct LocalEdge {
  std::uint32_t first;
  std::uint32_t second;
  double weight;
};

/// Pairs with strictly positive PMI, first < second, sorted.
std::vector<LocalEdge> build_word_word_edges(const SlidingWindowStats& stats);

/// |A ∩ B| / |A ∪ B| over sorted, duplicate-free index sets; 0 when both are
/// empty.
double jaccard(std::span<const TokenIndex> a, std::span<const TokenIndex> b);

/// Sorted distinct tokens per document.
std::vector<std::vector<TokenIndex>> token_sets(
    const std::vector<std::vector<TokenIndex>>& docs);

/// Unordered document pairs with Jaccard > 0 and >= threshold. With
/// max_degree set, an edge survives only when it ranks within the
/// max_degree heaviest edges of both endpoints (ties favour the lower
/// partner index).
std::vector<LocalEdge> build_doc_doc_edges(
    const std::vector<std::vector<TokenIndex>>& doc_token_sets, double threshold,
    std::optional<std::size_t> max_degree = std::nullopt);

/// (count / length) * ln(num_docs / df).
double tfidf(std::size_t term_count_in_doc, std::size_t doc_length,
             std::size_t num_docs, std::size_t df);

/// Directed document -> word edges with positive TF-IDF. Document frequency
/// and the document count come from the vocabulary.
std::vector<LocalEdge> build_doc_word_edges(
    const std::vector<std::vector<TokenIndex>>& docs, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Heterogeneous graph

enum class NodeType : std::uint8_t { Document, Word };

enum class Relation : std::uint8_t {
  WordCooccurrence = 0,
  DocSimilarity = 1,
  DocWordFrequency = 2,
};
inline constexpr std::size_t kNumRelations = 3;
inline constexpr std::array<Relation, kNumRelations> kRelations{
    Relation::WordCooccurrence, Relation::DocSimilarity, Relation::DocWordFrequency};

std::string_view to_string(Relation relation) noexcept;
Relation relation_from_string(std::string_view name);

/// Global-index edge. For the symmetric relations source < target and the
/// edge stands for both directions.
struct Edge {
  NodeIndex source;
  NodeIndex target;
  double weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Documents occupy node indices [0, D), words [D, D + V).
class HeteroTextGraph {
 public:
  HeteroTextGraph() = default;

  /// Validates and stores the graph. Symmetric edges may be given in either
  /// orientation; they are canonicalised and sorted.
  /// Errors: DanglingEdge (endpoint out of range or of the wrong type),
  /// DuplicateEdge, SelfEdge, InvalidWeight.
  static HeteroTextGraph create(std::vector<std::string> document_keys,
                                std::vector<std::string> word_keys,
                                std::array<std::vector<Edge>, kNumRelations> edges);

  std::size_t num_nodes() const noexcept { return keys_.size(); }
  std::size_t num_documents() const noexcept { return num_documents_; }
  std::size_t num_words() const noexcept { return keys_.size() - num_documents_; }

  NodeType node_type(NodeIndex node) const noexcept {
    return node < num_documents_ ? NodeType::Document : NodeType::Word;
  }
  const std::string& key(NodeIndex node) const { return keys_.at(node); }
  NodeIndex word_node(TokenIndex word) const {
    return static_cast<NodeIndex>(num_documents_ + word);
  }

  std::span<const Edge> edges(Relation relation) const {
    return edges_[static_cast<std::size_t>(relation)];
  }
  std::size_t num_edges(Relation relation) const { return edges(relation).size(); }

 private:
  std::vector<std::string> keys_;
  std::size_t num_documents_ = 0;
  std::array<std::vector<Edge>, kNumRelations> edges_;
};

/// Combines local edge lists into the global graph. Document keys are the
/// document ids, word keys the vocabulary tokens.
HeteroTextGraph assemble_graph(const std::vector<LocalEdge>& word_word,
                               const std::vector<LocalEdge>& doc_doc,
                               const std::vector<LocalEdge>& doc_word,
                               const Vocabulary& vocab,
                               const std::vector<TokenizedDocument>& docs);

struct GraphBuildOptions {
  std::size_t window_size = 20;
  double jaccard_threshold = 0.0;
  std::optional<std::size_t> max_degree;
};

/// Statistics, all three edge builders and assembly in one call. Tokens
/// outside the vocabulary are ignored.
HeteroTextGraph build_text_graph(const std::vector<TokenizedDocument>& docs,
                                 const Vocabulary& vocab,
                                 const GraphBuildOptions& options);

/// `HTG v1 <docs> <words>` header, then `N <index> <d|w> <key>` node lines
/// and `E <relation> <src> <dst> <weight>` edge lines. Weights carry 17
/// significant digits so they survive a round trip exactly.
void write_graph(std::ostream& out, const HeteroTextGraph& graph);
HeteroTextGraph read_graph(std::istream& in);
void save_graph(const std::string& path, const HeteroTextGraph& graph);
HeteroTextGraph load_graph(const std::string& path);

// ---------------------------------------------------------------------------
// Per-relation adjacency

/// Propagation channels: the three base relations, the inverse of the
/// directed doc-word relation, and the self loop.
enum class Channel : std::uint8_t {
  WordCooccurrence = 0,
  DocSimilarity = 1,
  DocWordFrequency = 2,
  InverseDocWordFrequency = 3,
  SelfLoop = 4,
};
inline constexpr std::size_t kNumChannels = 5;
/// Channels that carry their own weight matrix; the self loop is served by
/// the separate self weight.
inline constexpr std::size_t kNumMessageChannels = 4;
inline constexpr std::array<Channel, kNumChannels> kChannels{
    Channel::WordCooccurrence, Channel::DocSimilarity, Channel::DocWordFrequency,
    Channel::InverseDocWordFrequency, Channel::SelfLoop};

std::string_view to_string(Channel channel) noexcept;

enum class Normalization { Count, WeightedDegree };

std::string_view to_string(Normalization normalization) noexcept;
Normalization normalization_from_string(std::string_view name);

struct AdjacencyOptions {
  Normalization normalization = Normalization::WeightedDegree;
  bool use_edge_weights = true;
};

/// Row i of channel r lists the nodes that send messages to i under r, so
/// a document -> word edge (d, w) sits at (w, d) in DocWordFrequency and at
/// (d, w) in InverseDocWordFrequency. Stored values are already divided by
/// the normalisation constant c_{i,r}.
class RelationAdjacency {
 public:
  RelationAdjacency() = default;
  RelationAdjacency(std::size_t num_nodes, std::array<CsrMatrix, kNumChannels> channels);

  std::size_t num_nodes() const noexcept { return num_nodes_; }
  const CsrMatrix& channel(Channel c) const {
    return channels_[static_cast<std::size_t>(c)];
  }
  const CsrMatrix& channel(std::size_t c) const { return channels_.at(c); }
  std::size_t neighbor_count(Channel c, NodeIndex node) const {
    return channel(c).row_size(node);
  }

  /// Copy with the given channel emptied (ablation studies).
  RelationAdjacency without(Channel c) const;

 private:
  std::size_t num_nodes_ = 0;
  std::array<CsrMatrix, kNumChannels> channels_;
};

RelationAdjacency to_relation_adjacency(const HeteroTextGraph& graph,
                                        const AdjacencyOptions& options = {});

}  // namespace textrgcn

#endif  // TEXTRGCN_GRAPH_HPP
