#include "textrgcn/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <regex>
#include <span>
#include <sstream>

#include "json.hpp"
#include "textrgcn/error.hpp"
#include "textrgcn/random.hpp"

namespace textrgcn {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// UTF-8 scanning

struct CodePoint {
  char32_t value;
  std::size_t length;  // bytes consumed
  bool valid;
};

CodePoint decode_utf8(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1, true};
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {b0, 1, false};
  }
  if (pos + len > s.size()) return {b0, 1, false};
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[pos + k]);
    if ((b & 0xC0) != 0x80) return {b0, 1, false};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len, true};
}

bool is_separator(char32_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f' || c == 0x00A0 || (c >= 0x2000 && c <= 0x200B) ||
         c == 0x3000 || c == 0x202F || c == 0x205F;
}

bool is_punctuation(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  // Latin-1 punctuation, general punctuation (ZWNJ/ZWJ excluded, they join
  // Persian word parts), CJK and Arabic-script punctuation.
  return (c >= 0x00A1 && c <= 0x00BF && c != 0x00AA && c != 0x00B5 &&
          c != 0x00BA) ||
         c == 0x00D7 || c == 0x00F7 || (c >= 0x2010 && c <= 0x205E) ||
         (c >= 0x3001 && c <= 0x303F) || c == 0x060C || c == 0x061B ||
         c == 0x061F || (c >= 0x066A && c <= 0x066D) || c == 0x06D4;
}

bool is_digit(char32_t c) {
  return (c >= '0' && c <= '9') || (c >= 0x0660 && c <= 0x0669) ||
         (c >= 0x06F0 && c <= 0x06F9);
}

bool is_emoji(char32_t c) {
  return (c >= 0x1F000 && c <= 0x1FAFF) || (c >= 0x2600 && c <= 0x27BF) ||
         (c >= 0x2B00 && c <= 0x2BFF) || (c >= 0xFE00 && c <= 0xFE0F) ||
         (c >= 0x1F1E6 && c <= 0x1F1FF) || c == 0x20E3 ||
         (c >= 0xE0020 && c <= 0xE007F);
}

const std::regex& url_pattern() {
  static const std::regex re(R"((https?://|www\.)\S*)", std::regex::icase);
  return re;
}

const std::regex& html_pattern() {
  static const std::regex re(R"(<[^<>]*>)");
  return re;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.substr(s.size() - suffix.size()) == suffix;
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// One round of suffix stripping. Returns false when no rule applies.
bool strip_one_suffix(std::string& w) {
  constexpr std::size_t kMinStem = 3;
  if (ends_with(w, "sses")) {
    w.resize(w.size() - 2);
    return true;
  }
  if (ends_with(w, "ies") && w.size() >= kMinStem + 2) {
    w.resize(w.size() - 3);
    w += 'y';
    return true;
  }
  for (std::string_view suffix : {"ing", "ed", "ly"}) {
    if (ends_with(w, suffix) && w.size() >= suffix.size() + kMinStem) {
      w.resize(w.size() - suffix.size());
      // "running" -> "runn" -> "run"
      const std::size_t n = w.size();
      if (n >= kMinStem + 1 && w[n - 1] == w[n - 2] && !is_vowel(w[n - 1]) &&
          w[n - 1] != 'l' && w[n - 1] != 's' && w[n - 1] != 'z') {
        w.pop_back();
      }
      return true;
    }
  }
  if (ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
      !ends_with(w, "is") && w.size() >= kMinStem + 1) {
    w.pop_back();
    return true;
  }
  return false;
}

std::size_t max_label_plus_one(const std::vector<TokenizedDocument>& docs) {
  std::size_t n = 0;
  for (const auto& d : docs) {
    if (d.label) n = std::max<std::size_t>(n, *d.label + 1);
  }
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Enum names

std::string_view to_string(Lemmatizer lemmatizer) noexcept {
  switch (lemmatizer) {
    case Lemmatizer::Identity: return "identity";
    case Lemmatizer::SuffixStripping: return "suffix-stripping";
  }
  return "identity";
}

Lemmatizer lemmatizer_from_string(std::string_view name) {
  if (name == "identity") return Lemmatizer::Identity;
  if (name == "suffix-stripping") return Lemmatizer::SuffixStripping;
  throw Error(ErrorCode::InvalidArgument,
              "unknown lemmatizer '" + std::string(name) + "'");
}

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
    case Split::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "validation") return Split::Validation;
  if (name == "test") return Split::Test;
  if (name == "unlabeled") return Split::Unlabeled;
  throw Error(ErrorCode::InvalidArgument,
              "unknown split '" + std::string(name) + "'");
}

void PreprocessConfig::validate() const {
  if (min_token_frequency < 1) {
    throw Error(ErrorCode::InvalidArgument, "min_token_frequency must be >= 1");
  }
}

void SplitRatios::validate() const {
  if (!(train > 0.0) || !(validation > 0.0) || !(test > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "split ratios must be positive");
  }
  if (std::abs(train + validation + test - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "split ratios must sum to 1");
  }
}

// ---------------------------------------------------------------------------
// Vocabulary

std::optional<TokenIndex> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenIndex Vocabulary::index(std::string_view token) const {
  const auto found = find(token);
  if (!found) {
    throw Error(ErrorCode::MissingKey,
                "token '" + std::string(token) + "' not in vocabulary");
  }
  return *found;
}

TokenIndex Vocabulary::add(std::string token, std::size_t frequency,
                           std::size_t document_frequency) {
  if (contains(token)) {
    throw Error(ErrorCode::InvalidArgument,
                "duplicate vocabulary token '" + token + "'");
  }
  const auto idx = static_cast<TokenIndex>(tokens_.size());
  index_.emplace(token, idx);
  tokens_.push_back(std::move(token));
  frequency_.push_back(frequency);
  document_frequency_.push_back(document_frequency);
  return idx;
}

// ---------------------------------------------------------------------------
// Preprocessing

std::string lemmatize(std::string_view token, Lemmatizer lemmatizer) {
  std::string w(token);
  if (lemmatizer == Lemmatizer::Identity) return w;
  // Only plain ASCII words are stemmed; anything else passes through.
  const bool ascii_alpha = std::all_of(w.begin(), w.end(), [](char c) {
    return c >= 'a' && c <= 'z';
  });
  if (!ascii_alpha) return w;
  // Iterate to a fixed point so the strategy is idempotent.
  while (strip_one_suffix(w)) {
  }
  return w;
}

std::vector<std::string> preprocess_text(std::string_view text,
                                         const PreprocessConfig& config) {
  std::string work(text);
  if (config.strip_urls_html) {
    work = std::regex_replace(work, url_pattern(), " ");
    work = std::regex_replace(work, html_pattern(), " ");
    // Unmatched brackets are leftovers of broken markup.
    std::replace(work.begin(), work.end(), '<', ' ');
    std::replace(work.begin(), work.end(), '>', ' ');
  }

  std::vector<std::string> raw_tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) raw_tokens.push_back(std::move(current));
    current.clear();
  };

  for (std::size_t pos = 0; pos < work.size();) {
    const CodePoint cp = decode_utf8(work, pos);
    const std::string_view bytes(work.data() + pos, cp.length);
    pos += cp.length;
    if (!cp.valid) {
      current.append(bytes);
      continue;
    }
    const char32_t c = cp.value;
    if (is_separator(c) || (config.strip_punctuation && is_punctuation(c)) ||
        (config.strip_numbers && is_digit(c))) {
      flush();
      continue;
    }
    if (config.strip_emoji && is_emoji(c)) {
      flush();
      continue;
    }
    if (config.lowercase && c >= 'A' && c <= 'Z') {
      current.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      current.append(bytes);
    }
  }
  flush();

  std::vector<std::string> tokens;
  tokens.reserve(raw_tokens.size());
  for (auto& token : raw_tokens) {
    if (const auto it = config.substitutions.find(token);
        it != config.substitutions.end()) {
      token = it->second;
      if (token.empty()) continue;
    }
    if (config.stopwords.contains(token)) continue;
    std::string lemma = lemmatize(token, config.lemmatizer);
    if (lemma.empty() || config.stopwords.contains(lemma)) continue;
    tokens.push_back(std::move(lemma));
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Vocabulary construction

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs,
                            std::size_t min_token_frequency) {
  if (docs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "cannot build vocabulary from zero documents");
  }
  if (min_token_frequency < 1) {
    throw Error(ErrorCode::InvalidArgument, "min_token_frequency must be >= 1");
  }

  struct Stats {
    std::size_t first_seen;
    std::size_t frequency = 0;
    std::size_t document_frequency = 0;
    std::size_t last_doc = static_cast<std::size_t>(-1);
  };
  std::unordered_map<std::string_view, Stats> stats;
  std::vector<std::string_view> order;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& token : docs[d]) {
      auto [it, inserted] = stats.try_emplace(token, Stats{order.size()});
      if (inserted) order.push_back(token);
      auto& s = it->second;
      ++s.frequency;
      if (s.last_doc != d) {
        s.last_doc = d;
        ++s.document_frequency;
      }
    }
  }

  Vocabulary vocab;
  vocab.set_num_documents(docs.size());
  for (const auto token : order) {
    const auto& s = stats.at(token);
    if (s.frequency >= min_token_frequency) {
      vocab.add(std::string(token), s.frequency, s.document_frequency);
    }
  }
  if (vocab.size() == 0) {
    throw Error(ErrorCode::AllTokensFiltered,
                "no token reaches min_token_frequency " +
                    std::to_string(min_token_frequency));
  }
  return vocab;
}

void filter_to_vocabulary(std::vector<TokenizedDocument>& docs,
                          const Vocabulary& vocab) {
  for (auto& doc : docs) {
    std::erase_if(doc.tokens,
                  [&](const std::string& t) { return !vocab.contains(t); });
  }
}

std::vector<std::vector<TokenIndex>> encode(
    const std::vector<std::vector<std::string>>& docs, const Vocabulary& vocab) {
  std::vector<std::vector<TokenIndex>> out;
  out.reserve(docs.size());
  for (const auto& tokens : docs) {
    auto& row = out.emplace_back();
    row.reserve(tokens.size());
    for (const auto& t : tokens) row.push_back(vocab.index(t));
  }
  return out;
}

std::vector<std::vector<TokenIndex>> encode(
    const std::vector<TokenizedDocument>& docs, const Vocabulary& vocab) {
  std::vector<std::vector<TokenIndex>> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    auto& row = out.emplace_back();
    row.reserve(doc.tokens.size());
    for (const auto& t : doc.tokens) row.push_back(vocab.index(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits and balancing

std::vector<std::size_t> class_counts(const std::vector<TokenizedDocument>& docs) {
  std::vector<std::size_t> counts(max_label_plus_one(docs), 0);
  for (const auto& d : docs) {
    if (d.label) ++counts[*d.label];
  }
  return counts;
}

std::vector<TokenizedDocument> assign_splits(
    std::vector<TokenizedDocument> docs, const SplitRatios& ratios,
    std::uint64_t seed, std::optional<std::size_t> num_classes) {
  ratios.validate();
  const std::size_t classes = num_classes.value_or(max_label_plus_one(docs));

  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!docs[i].label) {
      docs[i].split = Split::Unlabeled;
      continue;
    }
    if (*docs[i].label >= classes) {
      throw Error(ErrorCode::InvalidArgument,
                  "label " + std::to_string(*docs[i].label) + " of document '" +
                      docs[i].id + "' exceeds class count");
    }
    members[*docs[i].label].push_back(i);
  }

  const std::array<double, 3> weights{ratios.train, ratios.validation, ratios.test};
  const std::array<Split, 3> names{Split::Train, Split::Validation, Split::Test};
  Rng rng(derive_seed(seed, "split"));
  for (std::size_t c = 0; c < classes; ++c) {
    auto& idx = members[c];
    if (idx.empty()) {
      throw Error(ErrorCode::EmptyClass,
                  "class " + std::to_string(c) + " has no labeled documents");
    }
    rng.shuffle(std::span(idx));

    // Largest-remainder apportionment of idx.size() over the three ratios.
    const double n = static_cast<double>(idx.size());
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double quota = n * weights[k];
      counts[k] = static_cast<std::size_t>(std::floor(quota + 1e-9));
      remainders[k] = quota - static_cast<double>(counts[k]);
      assigned += counts[k];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return remainders[a] > remainders[b];
    });
    for (std::size_t k = 0; assigned < idx.size(); ++k, ++assigned) {
      ++counts[order[k % 3]];
    }
    while (assigned > idx.size()) {  // only reachable through the epsilon
      for (std::size_t k = 3; k-- > 0 && assigned > idx.size();) {
        if (counts[order[k]] > 0) {
          --counts[order[k]];
          --assigned;
        }
      }
    }

    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t m = 0; m < counts[k]; ++m) docs[idx[pos++]].split = names[k];
    }
  }
  return docs;
}

std::vector<TokenizedDocument> balance_dataset(std::vector<TokenizedDocument> docs,
                                               ClassIndex target_class,
                                               std::uint64_t seed) {
  for (const auto& d : docs) {
    if (!d.label) {
      throw Error(ErrorCode::UnlabeledDocuments,
                  "document '" + d.id + "' has no label");
    }
  }
  const auto counts = class_counts(docs);
  if (target_class >= counts.size() || counts[target_class] == 0) {
    throw Error(ErrorCode::InvalidArgument,
                "target class " + std::to_string(target_class) +
                    " is not present among labels");
  }
  const std::size_t target = counts[target_class];

  std::vector<std::vector<std::size_t>> members(counts.size());
  for (std::size_t i = 0; i < docs.size(); ++i) members[*docs[i].label].push_back(i);

  std::vector<bool> keep(docs.size(), true);
  std::vector<TokenizedDocument> extra;
  for (std::size_t c = 0; c < members.size(); ++c) {
    auto& idx = members[c];
    if (idx.empty() || idx.size() == target) continue;
    Rng rng(derive_seed(seed, "balance", c));
    if (idx.size() > target) {
      // Partial Fisher-Yates: the first (size - target) slots are removed.
      const std::size_t drop = idx.size() - target;
      for (std::size_t k = 0; k < drop; ++k) {
        const auto j = k + static_cast<std::size_t>(rng.below(idx.size() - k));
        std::swap(idx[k], idx[j]);
        keep[idx[k]] = false;
      }
    } else {
      std::map<std::size_t, std::size_t> copies;  // per source document
      const std::size_t originals = idx.size();
      for (std::size_t k = originals; k < target; ++k) {
        const std::size_t src = idx[rng.below(originals)];
        TokenizedDocument dup = docs[src];
        dup.id += "~" + std::to_string(++copies[src]);
        extra.push_back(std::move(dup));
      }
    }
  }

  std::vector<TokenizedDocument> out;
  out.reserve(target * members.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (keep[i]) out.push_back(std::move(docs[i]));
  }
  for (auto& d : extra) out.push_back(std::move(d));
  return out;
}

// ---------------------------------------------------------------------------
// File formats

std::vector<RawDocument> read_corpus_jsonl(std::istream& in) {
  std::vector<RawDocument> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("text") || !obj["text"].is_string()) {
      throw Error(ErrorCode::ParseError,
                  where + ": expected object with string fields \"id\" and \"text\"");
    }
    RawDocument doc;
    doc.id = obj["id"].get<std::string>();
    doc.text = obj["text"].get<std::string>();
    if (doc.id.empty()) throw Error(ErrorCode::ParseError, where + ": empty id");
    if (!seen.insert(doc.id).second) {
      throw Error(ErrorCode::ParseError, where + ": duplicate id '" + doc.id + "'");
    }
    if (obj.contains("label") && !obj["label"].is_null()) {
      const auto& label = obj["label"];
      if (!label.is_number_integer() || label.get<long long>() < 0) {
        throw Error(ErrorCode::ParseError,
                    where + ": label must be a non-negative integer");
      }
      doc.label = static_cast<ClassIndex>(label.get<long long>());
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<RawDocument> read_corpus_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open corpus '" + path + "'");
  return read_corpus_jsonl(in);
}

std::unordered_set<std::string> read_stopwords(std::istream& in) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) words.insert(line);
  }
  return words;
}

std::unordered_map<std::string, std::string> read_substitutions(std::istream& in) {
  std::unordered_map<std::string, std::string> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw Error(ErrorCode::ParseError, "substitution table line " +
                                             std::to_string(line_no) +
                                             ": expected two tab-separated columns");
    }
    table[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return table;
}

void write_tokenized_jsonl(std::ostream& out,
                           const std::vector<TokenizedDocument>& docs) {
  for (const auto& d : docs) {
    json obj;
    obj["id"] = d.id;
    obj["tokens"] = d.tokens;
    if (d.label) obj["label"] = *d.label;
    obj["split"] = std::string(to_string(d.split));
    out << obj.dump() << '\n';
  }
}

std::vector<TokenizedDocument> read_tokenized_jsonl(std::istream& in) {
  std::vector<TokenizedDocument> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    try {
      const json obj = json::parse(line);
      TokenizedDocument d;
      d.id = obj.at("id").get<std::string>();
      d.tokens = obj.at("tokens").get<std::vector<std::string>>();
      if (obj.contains("label") && !obj["label"].is_null()) {
        d.label = obj["label"].get<ClassIndex>();
      }
      d.split = obj.contains("split")
                    ? split_from_string(obj["split"].get<std::string>())
                    : Split::Unlabeled;
      docs.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, where + ": " + e.message());
    }
  }
  return docs;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  out << "token\tfrequency\tdocument_frequency\tnum_documents="
      << vocab.num_documents() << '\n';
  for (TokenIndex i = 0; i < vocab.size(); ++i) {
    out << vocab.token(i) << '\t' << vocab.frequency(i) << '\t'
        << vocab.document_frequency(i) << '\n';
  }
}

Vocabulary read_vocabulary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::ParseError, "vocabulary file is empty");
  }
  const std::string key = "num_documents=";
  const auto pos = line.find(key);
  if (line.rfind("token\t", 0) != 0 || pos == std::string::npos) {
    throw Error(ErrorCode::ParseError, "vocabulary header missing");
  }
  Vocabulary vocab;
  vocab.set_num_documents(std::stoull(line.substr(pos + key.size())));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    std::size_t freq = 0;
    std::size_t df = 0;
    if (!std::getline(fields, token, '\t') || !(fields >> freq >> df)) {
      throw Error(ErrorCode::ParseError,
                  "vocabulary line " + std::to_string(line_no) + " is malformed");
    }
    vocab.add(std::move(token), freq, df);
  }
  return vocab;
}

}  // namespace textrgcn
