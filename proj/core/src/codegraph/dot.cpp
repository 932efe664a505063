#include "vulnformer/codegraph/dot.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

namespace vulnformer::codegraph {
namespace {

std::string quote(std::string_view text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') {
      out.push_back('\\');
      out.push_back(c);
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

struct DotToken {
  enum Kind { kId, kString, kArrow, kSymbol, kEnd } kind = kEnd;
  std::string text;
};

class DotLexer {
 public:
  explicit DotLexer(std::string_view text) : text_(text) {}

  DotToken next() {
    skip_space();
    DotToken t;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (c == '"') {
      t.kind = DotToken::kString;
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] != '"') {
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
          const char e = text_[++pos_];
          t.text.push_back(e == 'n' ? '\n' : e);
        } else {
          t.text.push_back(text_[pos_]);
        }
        ++pos_;
      }
      if (pos_ >= text_.size()) throw Error(ErrorKind::kFormat, "unterminated string in DOT input");
      ++pos_;
      return t;
    }
    if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
      pos_ += 2;
      t.kind = DotToken::kArrow;
      t.text = "->";
      return t;
    }
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-') {
      t.kind = DotToken::kId;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                     text_[pos_] == '_' || text_[pos_] == '.' || text_[pos_] == ':')) {
        t.text.push_back(text_[pos_++]);
      }
      if (t.text.empty()) t.text.push_back(text_[pos_++]);
      return t;
    }
    t.kind = DotToken::kSymbol;
    t.text = std::string(1, c);
    ++pos_;
    return t;
  }

 private:
  void skip_space() {
    for (;;) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (text_.substr(pos_, 2) == "//") {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        continue;
      }
      break;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

int node_index(const std::string& id) {
  if (id.size() < 2 || id[0] != 'n') throw Error(ErrorKind::kFormat, "unexpected DOT node id '" + id + "'");
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(id[i]))) {
      throw Error(ErrorKind::kFormat, "unexpected DOT node id '" + id + "'");
    }
  }
  return std::stoi(id.substr(1));
}

ByteRange parse_span(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorKind::kFormat, "bad span attribute '" + text + "'");
  try {
    return ByteRange{std::stoul(text.substr(0, colon)), std::stoul(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorKind::kFormat, "bad span attribute '" + text + "'");
  }
}

}  // namespace

std::string to_dot(const CodeGraph& graph) {
  std::string out = "digraph ";
  out += graph_kind_name(graph.kind);
  out += " {\n";
  for (const GraphNode& n : graph.nodes) {
    out += "  n" + std::to_string(n.id) + " [label=" + quote(n.kind_tag) + ", span=\"" +
           std::to_string(n.span.begin) + ":" + std::to_string(n.span.end) + "\"];\n";
  }
  std::vector<const GraphEdge*> edges;
  edges.reserve(graph.edges.size());
  for (const GraphEdge& e : graph.edges) edges.push_back(&e);
  std::sort(edges.begin(), edges.end(), [](const GraphEdge* a, const GraphEdge* b) {
    return std::tie(a->src, a->dst, a->tag) < std::tie(b->src, b->dst, b->tag);
  });
  for (const GraphEdge* e : edges) {
    out += "  n" + std::to_string(e->src) + " -> n" + std::to_string(e->dst) + " [label=" + quote(e->tag) + "];\n";
  }
  out += "}\n";
  return out;
}

CodeGraph parse_dot(std::string_view text) {
  DotLexer lexer(text);
  DotToken t = lexer.next();
  auto expect_symbol = [&](std::string_view s) {
    if (t.kind != DotToken::kSymbol || t.text != s) {
      throw Error(ErrorKind::kFormat, "expected '" + std::string(s) + "' in DOT input, found '" + t.text + "'");
    }
    t = lexer.next();
  };
  if (t.kind != DotToken::kId || t.text != "digraph") throw Error(ErrorKind::kFormat, "DOT input must start with 'digraph'");
  t = lexer.next();
  CodeGraph g;
  if (t.kind == DotToken::kId || t.kind == DotToken::kString) {
    g.kind = parse_graph_kind(t.text).value_or(GraphKind::kAst);
    t = lexer.next();
  }
  expect_symbol("{");

  auto read_attrs = [&]() {
    std::map<std::string, std::string> attrs;
    if (t.kind != DotToken::kSymbol || t.text != "[") return attrs;
    t = lexer.next();
    while (!(t.kind == DotToken::kSymbol && t.text == "]")) {
      if (t.kind != DotToken::kId) throw Error(ErrorKind::kFormat, "expected attribute name in DOT input");
      const std::string key = t.text;
      t = lexer.next();
      expect_symbol("=");
      if (t.kind != DotToken::kId && t.kind != DotToken::kString) {
        throw Error(ErrorKind::kFormat, "expected attribute value in DOT input");
      }
      attrs[key] = t.text;
      t = lexer.next();
      if (t.kind == DotToken::kSymbol && (t.text == "," || t.text == ";")) t = lexer.next();
    }
    t = lexer.next();
    return attrs;
  };

  std::map<int, GraphNode> nodes;
  while (!(t.kind == DotToken::kSymbol && t.text == "}")) {
    if (t.kind == DotToken::kEnd) throw Error(ErrorKind::kFormat, "unterminated DOT graph");
    if (t.kind != DotToken::kId && t.kind != DotToken::kString) {
      throw Error(ErrorKind::kFormat, "unexpected token '" + t.text + "' in DOT input");
    }
    const std::string first = t.text;
    t = lexer.next();
    if (t.kind == DotToken::kArrow) {
      t = lexer.next();
      if (t.kind != DotToken::kId && t.kind != DotToken::kString) throw Error(ErrorKind::kFormat, "edge without target");
      const std::string second = t.text;
      t = lexer.next();
      auto attrs = read_attrs();
      g.edges.push_back(GraphEdge{node_index(first), node_index(second), attrs["label"]});
    } else {
      auto attrs = read_attrs();
      if (first == "graph" || first == "node" || first == "edge") {
        // default attribute statements carry nothing we model
      } else {
        GraphNode n;
        n.id = node_index(first);
        n.kind_tag = attrs["label"];
        if (auto it = attrs.find("span"); it != attrs.end()) n.span = parse_span(it->second);
        nodes[n.id] = std::move(n);
      }
    }
    if (t.kind == DotToken::kSymbol && t.text == ";") t = lexer.next();
  }
  for (auto& [id, node] : nodes) g.nodes.push_back(std::move(node));
  g.validate();
  return g;
}

}  // namespace vulnformer::codegraph
