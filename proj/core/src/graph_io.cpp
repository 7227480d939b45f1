#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "textrgcn/error.hpp"
#include "textrgcn/graph.hpp"

namespace textrgcn {
namespace {

std::string format_weight(double w) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", w);
  return std::string(buf, static_cast<std::size_t>(n));
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, std::string_view what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::ParseError, "graph line " + std::to_string(line_no) +
                                           ": bad " + std::string(what) + " '" +
                                           std::string(field) + "'");
  }
  return value;
}

// Splits off the next space-delimited field.
std::string_view next_field(std::string_view& rest) {
  const auto sp = rest.find(' ');
  const auto field = rest.substr(0, sp);
  rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp + 1);
  return field;
}

}  // namespace

void write_graph(std::ostream& out, const HeteroTextGraph& graph) {
  out << "HTG v1 " << graph.num_documents() << ' ' << graph.num_words() << '\n';
  for (NodeIndex i = 0; i < graph.num_nodes(); ++i) {
    const auto& key = graph.key(i);
    if (key.find('\n') != std::string::npos || key.find('\r') != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "node key contains a line break");
    }
    out << "N " << i << ' ' << (graph.node_type(i) == NodeType::Document ? 'd' : 'w')
        << ' ' << key << '\n';
  }
  for (const auto relation : kRelations) {
    for (const auto& e : graph.edges(relation)) {
      out << "E " << to_string(relation) << ' ' << e.source << ' ' << e.target << ' '
          << format_weight(e.weight) << '\n';
    }
  }
}

HeteroTextGraph read_graph(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "graph file is empty");
  std::string_view rest = line;
  if (next_field(rest) != "HTG" || next_field(rest) != "v1") {
    throw Error(ErrorCode::BadMagic, "expected 'HTG v1' header");
  }
  const auto num_docs = parse_number<std::size_t>(next_field(rest), 1, "document count");
  const auto num_words = parse_number<std::size_t>(next_field(rest), 1, "word count");
  if (!rest.empty()) throw Error(ErrorCode::ParseError, "graph line 1: trailing fields");

  const std::size_t n = num_docs + num_words;
  std::vector<std::string> keys(n);
  std::vector<bool> seen(n, false);
  std::array<std::vector<Edge>, kNumRelations> edges;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    rest = line;
    const auto tag = next_field(rest);
    if (tag == "N") {
      const auto idx = parse_number<std::size_t>(next_field(rest), line_no, "node index");
      const auto type = next_field(rest);
      if (idx >= n || seen[idx]) {
        throw Error(ErrorCode::ParseError, "graph line " + std::to_string(line_no) +
                                               ": node index out of range or repeated");
      }
      const bool expect_doc = idx < num_docs;
      if (type != (expect_doc ? "d" : "w")) {
        throw Error(ErrorCode::ParseError,
                    "graph line " + std::to_string(line_no) + ": node type mismatch");
      }
      keys[idx] = std::string(rest);
      seen[idx] = true;
    } else if (tag == "E") {
      const auto relation = relation_from_string(next_field(rest));
      const auto src = parse_number<NodeIndex>(next_field(rest), line_no, "source");
      const auto dst = parse_number<NodeIndex>(next_field(rest), line_no, "target");
      const auto w = parse_number<double>(next_field(rest), line_no, "weight");
      if (!rest.empty()) {
        throw Error(ErrorCode::ParseError,
                    "graph line " + std::to_string(line_no) + ": trailing fields");
      }
      edges[static_cast<std::size_t>(relation)].push_back({src, dst, w});
    } else {
      throw Error(ErrorCode::ParseError,
                  "graph line " + std::to_string(line_no) + ": unknown record type");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) {
      throw Error(ErrorCode::ParseError, "graph node " + std::to_string(i) + " missing");
    }
  }
  std::vector<std::string> doc_keys(std::make_move_iterator(keys.begin()),
                                    std::make_move_iterator(keys.begin() + num_docs));
  std::vector<std::string> word_keys(std::make_move_iterator(keys.begin() + num_docs),
                                     std::make_move_iterator(keys.end()));
  return HeteroTextGraph::create(std::move(doc_keys), std::move(word_keys),
                                 std::move(edges));
}

void save_graph(const std::string& path, const HeteroTextGraph& graph) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write graph '" + path + "'");
  write_graph(out, graph);
}

HeteroTextGraph load_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open graph '" + path + "'");
  return read_graph(in);
}

}  // namespace textrgcn
