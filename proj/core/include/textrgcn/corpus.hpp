#ifndef TEXTRGCN_CORPUS_HPP
#define TEXTRGCN_CORPUS_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace textrgcn {

using ClassIndex = std::uint32_t;
using TokenIndex = std::uint32_t;

struct RawDocument {
  std::string id;
  std::string text;
  std::optional<ClassIndex> label;
};

enum class Lemmatizer { Identity, SuffixStripping };

std::string_view to_string(Lemmatizer lemmatizer) noexcept;
Lemmatizer lemmatizer_from_string(std::string_view name);

struct PreprocessConfig {
  bool lowercase = true;
  bool strip_punctuation = true;
  bool strip_numbers = true;
  bool strip_urls_html = true;
  bool strip_emoji = true;
  std::unordered_set<std::string> stopwords;
  // Chat-word / spelling substitutions, applied per token after lowercasing.
  std::unordered_map<std::string, std::string> substitutions;
  std::size_t min_token_frequency = 1;
  Lemmatizer lemmatizer = Lemmatizer::Identity;

  void validate() const;
};

enum class Split { Train, Validation, Test, Unlabeled };

std::string_view to_string(Split split) noexcept;
Split split_from_string(std::string_view name);

struct TokenizedDocument {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<ClassIndex> label;
  Split split = Split::Unlabeled;

  // Emptied by preprocessing. Kept as a graph node, but excluded from
  // TF-IDF and Jaccard edge generation.
  bool degenerate() const noexcept { return tokens.empty(); }
};

class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t num_documents() const noexcept { return num_documents_; }

  const std::string& token(TokenIndex index) const { return tokens_.at(index); }
  std::optional<TokenIndex> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  TokenIndex index(std::string_view token) const;

  std::size_t frequency(TokenIndex index) const { return frequency_.at(index); }
  std::size_t document_frequency(TokenIndex index) const {
    return document_frequency_.at(index);
  }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  /// Adds a token with the given statistics; returns its index.
  TokenIndex add(std::string token, std::size_t frequency,
                 std::size_t document_frequency);
  void set_num_documents(std::size_t n) { num_documents_ = n; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenIndex, Hash, std::equal_to<>> index_;
  std::vector<std::size_t> frequency_;
  std::vector<std::size_t> document_frequency_;
  std::size_t num_documents_ = 0;
};

struct SplitRatios {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;

  void validate() const;
};

// Operations

std::vector<std::string> preprocess_text(std::string_view text,
                                         const PreprocessConfig& config);

/// Lemmatizes a single lowercase token with the named strategy.
std::string lemmatize(std::string_view token, Lemmatizer lemmatizer);

/// Indices are dense and assigned in first-occurrence order; throws
/// AllTokensFiltered when nothing reaches min_token_frequency.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs,
                            std::size_t min_token_frequency);

/// Drops tokens that are not in the vocabulary, preserving order.
void filter_to_vocabulary(std::vector<TokenizedDocument>& docs,
                          const Vocabulary& vocab);

/// Token sequences as vocabulary indices. Every token must be in vocab.
std::vector<std::vector<TokenIndex>> encode(
    const std::vector<TokenizedDocument>& docs, const Vocabulary& vocab);
std::vector<std::vector<TokenIndex>> encode(
    const std::vector<std::vector<std::string>>& docs, const Vocabulary& vocab);

/// Stratified per-class assignment. Class counts per split follow the
/// largest-remainder rounding of count * ratio, so each is within one
/// document of its quota. Unlabeled documents get Split::Unlabeled.
/// num_classes defaults to max label + 1; any class with no labeled
/// document raises EmptyClass.
std::vector<TokenizedDocument> assign_splits(
    std::vector<TokenizedDocument> docs, const SplitRatios& ratios,
    std::uint64_t seed, std::optional<std::size_t> num_classes = std::nullopt);

/// Resizes every class to the target class's count: smaller classes are
/// topped up by sampling with replacement, larger ones are reduced by
/// uniform removal. Retained documents keep their relative order; duplicates
/// are appended with ids of the form "<id>~<n>".
std::vector<TokenizedDocument> balance_dataset(
    std::vector<TokenizedDocument> docs, ClassIndex target_class,
    std::uint64_t seed);

/// Label histogram, index = class.
std::vector<std::size_t> class_counts(const std::vector<TokenizedDocument>& docs);

// File formats

/// JSON Lines: {"id": string, "text": string, "label": int (optional)}.
/// Parse failures name the 1-based line number.
std::vector<RawDocument> read_corpus_jsonl(std::istream& in);
std::vector<RawDocument> read_corpus_jsonl(const std::string& path);

/// One token per line; blank lines ignored.
std::unordered_set<std::string> read_stopwords(std::istream& in);
/// Two-column TSV, token <TAB> replacement.
std::unordered_map<std::string, std::string> read_substitutions(std::istream& in);

/// {"id", "tokens", "label" (omitted when absent), "split"} per line.
void write_tokenized_jsonl(std::ostream& out,
                           const std::vector<TokenizedDocument>& docs);
std::vector<TokenizedDocument> read_tokenized_jsonl(std::istream& in);

/// Header line "token\tfrequency\tdocument_frequency\tnum_documents=<N>",
/// then one token per line in index order.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);

}  // namespace textrgcn

#endif  // TEXTRGCN_CORPUS_HPP
