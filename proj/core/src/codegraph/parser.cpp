#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <utility>

#include "vulnformer/codegraph/lexer.hpp"
#include "vulnformer/codegraph/syntax.hpp"

namespace vulnformer::codegraph {

const SyntaxNode* SyntaxNode::child(std::string_view field_name) const {
  for (const SyntaxNode& c : children) {
    if (c.field == field_name) return &c;
  }
  return nullptr;
}

void walk(const SyntaxNode& node, const std::function<bool(const SyntaxNode&)>& visit) {
  if (!visit(node)) return;
  for (const SyntaxNode& c : node.children) walk(c, visit);
}

CodeGraph SyntaxTree::graph() const {
  CodeGraph g;
  g.kind = GraphKind::kAst;
  // Explicit stack keeps deep expression chains off the call stack.
  struct Frame {
    const SyntaxNode* node;
    int parent;
  };
  std::vector<Frame> stack{{&root_, -1}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const int id = g.add_node(std::string(f.node->kind), f.node->span());
    if (f.parent >= 0) {
      g.edges.push_back(GraphEdge{f.parent, id, f.node->field.empty() ? "child" : std::string(f.node->field)});
    }
    for (auto it = f.node->children.rbegin(); it != f.node->children.rend(); ++it) {
      stack.push_back(Frame{&*it, id});
    }
  }
  return g;
}

std::size_t SyntaxTree::error_count() const {
  std::size_t count = 0;
  walk(root_, [&](const SyntaxNode& n) {
    if (n.is_error()) ++count;
    return true;
  });
  return count;
}

namespace {

struct ParseFailure {};

constexpr std::array<std::string_view, 9> kStorageClass = {
    "static", "extern", "auto", "register", "inline", "__inline", "_Noreturn", "_Thread_local", "typedef"};
constexpr std::array<std::string_view, 5> kQualifiers = {"const", "volatile", "restrict", "__restrict", "_Atomic"};
constexpr std::array<std::string_view, 6> kPrimitiveKeywords = {"char", "int", "float", "double", "void", "_Bool"};
constexpr std::array<std::string_view, 4> kSizeModifiers = {"signed", "unsigned", "short", "long"};
// Identifiers tree-sitter-c also reports as primitive_type.
constexpr std::array<std::string_view, 18> kPrimitiveIdentifiers = {
    "bool",     "size_t",   "ssize_t",   "ptrdiff_t", "intptr_t", "uintptr_t",
    "int8_t",   "int16_t",  "int32_t",   "int64_t",   "uint8_t",  "uint16_t",
    "uint32_t", "uint64_t", "char16_t",  "char32_t",  "nullptr_t", "max_align_t"};

template <std::size_t N>
bool one_of(const std::array<std::string_view, N>& set, std::string_view text) {
  return std::find(set.begin(), set.end(), text) != set.end();
}

int binary_precedence(std::string_view op) {
  if (op == "||") return 1;
  if (op == "&&") return 2;
  if (op == "|") return 3;
  if (op == "^") return 4;
  if (op == "&") return 5;
  if (op == "==" || op == "!=") return 6;
  if (op == "<" || op == ">" || op == "<=" || op == ">=") return 7;
  if (op == "<<" || op == ">>") return 8;
  if (op == "+" || op == "-") return 9;
  if (op == "*" || op == "/" || op == "%") return 10;
  return 0;
}

bool is_assignment_op(std::string_view op) {
  return op == "=" || op == "+=" || op == "-=" || op == "*=" || op == "/=" || op == "%=" || op == "&=" ||
         op == "|=" || op == "^=" || op == "<<=" || op == ">>=";
}

class Parser {
 public:
  explicit Parser(std::string_view source) : src_(source), toks_(lex(source)) {}

  SyntaxNode translation_unit() {
    SyntaxNode root = make("translation_unit");
    root.begin = 0;
    while (!at_end()) {
      if (is(";")) {
        advance();
        continue;
      }
      const std::size_t start = pos_;
      try {
        root.children.push_back(external_declaration());
      } catch (const ParseFailure&) {
        pos_ = start;
        root.children.push_back(recover(start, /*in_block=*/false));
      }
    }
    root.end = src_.size();
    return root;
  }

 private:
  // ---- token helpers -------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& la(std::size_t k) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return cur().kind == TokenKind::kEnd; }
  bool is(std::string_view text) const { return is_at(pos_, text); }
  bool is_at(std::size_t index, std::string_view text) const {
    const Token& t = toks_[std::min(index, toks_.size() - 1)];
    return (t.kind == TokenKind::kPunct || t.kind == TokenKind::kKeyword) && t.text == text;
  }
  bool is_ident_at(std::size_t index) const {
    return toks_[std::min(index, toks_.size() - 1)].kind == TokenKind::kIdentifier;
  }
  void advance() {
    if (!at_end()) ++pos_;
  }
  void expect(std::string_view text) {
    if (!is(text)) throw ParseFailure{};
    advance();
  }
  bool accept(std::string_view text) {
    if (!is(text)) return false;
    advance();
    return true;
  }

  SyntaxNode make(std::string_view kind) const {
    SyntaxNode n;
    n.kind = kind;
    n.begin = cur().begin;
    n.end = cur().begin;
    return n;
  }
  void finish(SyntaxNode& n) const { n.end = pos_ > 0 ? toks_[pos_ - 1].end : n.begin; }
  static SyntaxNode with_field(SyntaxNode node, std::string_view field) {
    node.field = field;
    return node;
  }
  SyntaxNode leaf(std::string_view kind) {
    SyntaxNode n = make(kind);
    advance();
    finish(n);
    return n;
  }

  struct DepthGuard {
    explicit DepthGuard(int& depth) : depth_(depth) {
      if (++depth_ > 400) {
        --depth_;
        throw ParseFailure{};
      }
    }
    ~DepthGuard() { --depth_; }
    int& depth_;
  };

  // Skips to the end of the current statement or declaration and wraps the
  // skipped tokens in an ERROR node. Always consumes at least one token.
  // Inside a block the block's own closing brace is left in place.
  SyntaxNode recover(std::size_t start, bool in_block) {
    pos_ = start;
    SyntaxNode err = make("ERROR");
    int depth = 0;
    do {
      const Token& t = cur();
      if (t.kind == TokenKind::kPunct) {
        if (t.text == "(" || t.text == "[" || t.text == "{") {
          ++depth;
        } else if (t.text == ")" || t.text == "]" || t.text == "}") {
          if (depth == 0) {
            if (t.text == "}" && in_block && pos_ != start) break;
            if (t.text == "}") {
              advance();
              break;
            }
          } else {
            --depth;
            if (depth == 0 && t.text == "}") {
              advance();
              break;
            }
          }
        } else if (t.text == ";" && depth == 0) {
          advance();
          break;
        }
      }
      advance();
    } while (!at_end());
    finish(err);
    return err;
  }

  // ---- type classification --------------------------------------------

  bool is_typelike_identifier(std::string_view name) const {
    if (typedefs_.count(std::string(name)) > 0) return true;
    if (one_of(kPrimitiveIdentifiers, name)) return true;
    return name.size() > 2 && name.substr(name.size() - 2) == "_t";
  }

  bool is_specifier_keyword(std::string_view text) const {
    return one_of(kStorageClass, text) || one_of(kQualifiers, text) || one_of(kPrimitiveKeywords, text) ||
           one_of(kSizeModifiers, text) || text == "struct" || text == "union" || text == "enum";
  }

  bool is_attribute_at(std::size_t index) const {
    const Token& t = toks_[std::min(index, toks_.size() - 1)];
    return t.kind == TokenKind::kIdentifier &&
           (t.text == "__attribute__" || t.text == "__attribute" || t.text == "__declspec");
  }

  // Could the tokens starting at `index` begin a type name (casts, sizeof)?
  bool type_name_starts_at(std::size_t index) const {
    const Token& t = toks_[std::min(index, toks_.size() - 1)];
    if (t.kind == TokenKind::kKeyword) return is_specifier_keyword(t.text);
    if (t.kind != TokenKind::kIdentifier) return false;
    if (is_typelike_identifier(t.text)) return true;
    // `(T *)` or `(T **)`
    std::size_t j = index + 1;
    if (is_at(j, "*")) {
      while (is_at(j, "*")) ++j;
      return is_at(j, ")");
    }
    // `(T)x`: an identifier in parentheses directly followed by an operand.
    if (is_at(j, ")")) {
      const Token& next = toks_[std::min(j + 1, toks_.size() - 1)];
      return next.kind == TokenKind::kIdentifier || next.kind == TokenKind::kNumber ||
             next.kind == TokenKind::kString || next.kind == TokenKind::kChar || is_at(j + 1, "(");
    }
    return false;
  }

  bool declaration_starts_here() const {
    const Token& t = cur();
    if (t.kind == TokenKind::kKeyword) return is_specifier_keyword(t.text);
    if (t.kind != TokenKind::kIdentifier) return false;
    if (is_attribute_at(pos_)) return true;
    if (is_ident_at(pos_ + 1)) return true;
    if (is_typelike_identifier(t.text)) {
      return is_at(pos_ + 1, "*") || (la(1).kind == TokenKind::kKeyword && is_specifier_keyword(la(1).text));
    }
    if (la(1).kind == TokenKind::kKeyword && one_of(kQualifiers, la(1).text)) return true;
    if (is_at(pos_ + 1, "*")) {
      std::size_t j = pos_ + 1;
      while (is_at(j, "*") || (toks_[std::min(j, toks_.size() - 1)].kind == TokenKind::kKeyword &&
                               one_of(kQualifiers, toks_[std::min(j, toks_.size() - 1)].text))) {
        ++j;
      }
      if (!is_ident_at(j)) return false;
      return is_at(j + 1, ";") || is_at(j + 1, "=") || is_at(j + 1, ",") || is_at(j + 1, "[") ||
             is_at(j + 1, ")");
    }
    return false;
  }

  // ---- declarations -----------------------------------------------------

  SyntaxNode attribute_specifier() {
    SyntaxNode n = make("attribute_specifier");
    advance();
    if (is("(")) skip_balanced();
    finish(n);
    return n;
  }

  void skip_balanced() {
    int depth = 0;
    do {
      if (is("(") || is("[") || is("{")) ++depth;
      if (is(")") || is("]") || is("}")) --depth;
      if (at_end()) throw ParseFailure{};
      advance();
    } while (depth > 0);
  }

  struct Specifiers {
    std::vector<SyntaxNode> nodes;
    bool has_type = false;
    bool is_typedef = false;
  };

  Specifiers declaration_specifiers() {
    Specifiers spec;
    for (;;) {
      const Token& t = cur();
      if (t.kind == TokenKind::kKeyword && one_of(kStorageClass, t.text)) {
        if (t.text == "typedef") spec.is_typedef = true;
        spec.nodes.push_back(leaf("storage_class_specifier"));
      } else if (t.kind == TokenKind::kKeyword && one_of(kQualifiers, t.text)) {
        spec.nodes.push_back(leaf("type_qualifier"));
      } else if (is_attribute_at(pos_)) {
        spec.nodes.push_back(attribute_specifier());
      } else if (t.kind == TokenKind::kKeyword && one_of(kSizeModifiers, t.text)) {
        spec.nodes.push_back(with_field(sized_type_specifier(), "type"));
        spec.has_type = true;
      } else if (t.kind == TokenKind::kKeyword && one_of(kPrimitiveKeywords, t.text)) {
        spec.nodes.push_back(with_field(leaf("primitive_type"), "type"));
        spec.has_type = true;
      } else if (is("struct") || is("union")) {
        spec.nodes.push_back(with_field(struct_specifier(), "type"));
        spec.has_type = true;
      } else if (is("enum")) {
        spec.nodes.push_back(with_field(enum_specifier(), "type"));
        spec.has_type = true;
      } else if (t.kind == TokenKind::kIdentifier && !spec.has_type) {
        const bool next_names_something =
            is_ident_at(pos_ + 1) || is_at(pos_ + 1, "*") ||
            (la(1).kind == TokenKind::kKeyword && is_specifier_keyword(la(1).text)) || is_attribute_at(pos_ + 1);
        if (!(is_typelike_identifier(t.text) || next_names_something)) break;
        const bool primitive = one_of(kPrimitiveIdentifiers, t.text);
        spec.nodes.push_back(with_field(leaf(primitive ? "primitive_type" : "type_identifier"), "type"));
        // A leading macro such as `av_cold int` leaves the type slot open.
        const bool macro_qualifier =
            la(0).kind == TokenKind::kKeyword && is_specifier_keyword(la(0).text) && !is_typelike_identifier(t.text);
        spec.has_type = !macro_qualifier;
      } else {
        break;
      }
    }
    return spec;
  }

  SyntaxNode sized_type_specifier() {
    SyntaxNode n = make("sized_type_specifier");
    while (cur().kind == TokenKind::kKeyword && one_of(kSizeModifiers, cur().text)) advance();
    if (cur().kind == TokenKind::kKeyword && one_of(kPrimitiveKeywords, cur().text)) {
      n.children.push_back(with_field(leaf("primitive_type"), "type"));
    }
    finish(n);
    return n;
  }

  SyntaxNode struct_specifier() {
    SyntaxNode n = make(is("struct") ? "struct_specifier" : "union_specifier");
    advance();
    while (is_attribute_at(pos_)) n.children.push_back(attribute_specifier());
    if (cur().kind == TokenKind::kIdentifier) n.children.push_back(with_field(leaf("type_identifier"), "name"));
    if (is("{")) n.children.push_back(with_field(field_declaration_list(), "body"));
    if (n.children.empty()) throw ParseFailure{};
    while (is_attribute_at(pos_)) n.children.push_back(attribute_specifier());
    finish(n);
    return n;
  }

  SyntaxNode field_declaration_list() {
    SyntaxNode n = make("field_declaration_list");
    expect("{");
    while (!is("}")) {
      if (at_end()) throw ParseFailure{};
      if (accept(";")) continue;
      if (cur().kind == TokenKind::kPreprocessor) {
        n.children.push_back(preprocessor());
        continue;
      }
      const std::size_t start = pos_;
      try {
        n.children.push_back(field_declaration());
      } catch (const ParseFailure&) {
        n.children.push_back(recover(start, /*in_block=*/true));
      }
    }
    expect("}");
    finish(n);
    return n;
  }

  SyntaxNode field_declaration() {
    SyntaxNode n = make("field_declaration");
    Specifiers spec = declaration_specifiers();
    if (!spec.has_type) throw ParseFailure{};
    for (SyntaxNode& s : spec.nodes) n.children.push_back(std::move(s));
    if (!is(";")) {
      for (;;) {
        if (is(":")) {
          n.children.push_back(bitfield_clause());
        } else {
          n.children.push_back(with_field(declarator(/*abstract=*/false, /*field=*/true), "declarator"));
          if (is(":")) n.children.push_back(bitfield_clause());
        }
        if (!accept(",")) break;
      }
    }
    while (is_attribute_at(pos_)) n.children.push_back(attribute_specifier());
    expect(";");
    finish(n);
    return n;
  }

  SyntaxNode bitfield_clause() {
    SyntaxNode n = make("bitfield_clause");
    expect(":");
    n.children.push_back(conditional_expression());
    finish(n);
    return n;
  }

  SyntaxNode enum_specifier() {
    SyntaxNode n = make("enum_specifier");
    expect("enum");
    if (cur().kind == TokenKind::kIdentifier) n.children.push_back(with_field(leaf("type_identifier"), "name"));
    if (is("{")) {
      SyntaxNode list = make("enumerator_list");
      advance();
      while (!is("}")) {
        if (cur().kind == TokenKind::kPreprocessor) {
          list.children.push_back(preprocessor());
          continue;
        }
        if (cur().kind != TokenKind::kIdentifier) throw ParseFailure{};
        SyntaxNode e = make("enumerator");
        e.children.push_back(with_field(leaf("identifier"), "name"));
        if (accept("=")) e.children.push_back(with_field(conditional_expression(), "value"));
        finish(e);
        list.children.push_back(std::move(e));
        if (!accept(",")) break;
      }
      expect("}");
      finish(list);
      n.children.push_back(with_field(std::move(list), "body"));
    }
    if (n.children.empty()) throw ParseFailure{};
    finish(n);
    return n;
  }

  // Declarator grammar. With `abstract` the name may be omitted (parameter
  // types, casts); `field` names use field_identifier.
  SyntaxNode declarator(bool abstract, bool field) {
    DepthGuard guard(depth_);
    while (is_attribute_at(pos_)) advance_attribute();
    if (is("*")) {
      SyntaxNode n = make(abstract ? "abstract_pointer_declarator" : "pointer_declarator");
      advance();
      while (cur().kind == TokenKind::kKeyword && one_of(kQualifiers, cur().text)) {
        n.children.push_back(leaf("type_qualifier"));
      }
      while (is_attribute_at(pos_)) n.children.push_back(attribute_specifier());
      if (!abstract || declarator_follows()) {
        SyntaxNode inner = declarator(abstract, field);
        if (abstract && declarator_name(inner) != nullptr) n.kind = "pointer_declarator";
        n.children.push_back(with_field(std::move(inner), "declarator"));
      }
      finish(n);
      return n;
    }
    SyntaxNode base;
    bool have_base = false;
    if (cur().kind == TokenKind::kIdentifier) {
      base = leaf(field ? "field_identifier" : "identifier");
      have_base = true;
    } else if (is("(") && (is_at(pos_ + 1, "*") || (is_ident_at(pos_ + 1) && !type_name_starts_at(pos_ + 1)))) {
      base = make("parenthesized_declarator");
      advance();
      base.children.push_back(declarator(abstract, field));
      expect(")");
      finish(base);
      have_base = true;
    } else if (!abstract) {
      throw ParseFailure{};
    }
    for (;;) {
      if (is("[")) {
        SyntaxNode n = make(abstract && !have_base ? "abstract_array_declarator" : "array_declarator");
        if (have_base) {
          n.begin = base.begin;
          n.children.push_back(with_field(std::move(base), "declarator"));
        }
        advance();
        while (cur().kind == TokenKind::kKeyword && (one_of(kQualifiers, cur().text) || cur().text == "static")) {
          advance();
        }
        if (!is("]")) n.children.push_back(with_field(expression(), "size"));
        expect("]");
        finish(n);
        base = std::move(n);
        have_base = true;
      } else if (is("(")) {
        SyntaxNode n = make(abstract && !have_base ? "abstract_function_declarator" : "function_declarator");
        if (have_base) {
          n.begin = base.begin;
          n.children.push_back(with_field(std::move(base), "declarator"));
        }
        n.children.push_back(with_field(parameter_list(), "parameters"));
        while (is_attribute_at(pos_)) n.children.push_back(attribute_specifier());
        finish(n);
        base = std::move(n);
        have_base = true;
      } else {
        break;
      }
    }
    if (!have_base) throw ParseFailure{};
    return base;
  }

  void advance_attribute() {
    advance();
    if (is("(")) skip_balanced();
  }

  bool declarator_follows() const {
    return is("*") || cur().kind == TokenKind::kIdentifier || is("(") || is("[");
  }

  SyntaxNode parameter_list() {
    SyntaxNode n = make("parameter_list");
    expect("(");
    if (!is(")")) {
      for (;;) {
        if (is("...")) {
          n.children.push_back(leaf("variadic_parameter"));
        } else {
          SyntaxNode p = make("parameter_declaration");
          Specifiers spec = declaration_specifiers();
          if (spec.nodes.empty()) {
            // K&R identifier list or macro argument: keep the bare name.
            if (cur().kind != TokenKind::kIdentifier) throw ParseFailure{};
            p.children.push_back(with_field(leaf("identifier"), "declarator"));
          } else {
            for (SyntaxNode& s : spec.nodes) p.children.push_back(std::move(s));
            if (!is(",") && !is(")")) p.children.push_back(with_field(declarator(true, false), "declarator"));
          }
          finish(p);
          n.children.push_back(std::move(p));
        }
        if (!accept(",")) break;
      }
    }
    expect(")");
    finish(n);
    return n;
  }

  SyntaxNode type_descriptor() {
    SyntaxNode n = make("type_descriptor");
    Specifiers spec = declaration_specifiers();
    if (spec.nodes.empty()) throw ParseFailure{};
    for (SyntaxNode& s : spec.nodes) n.children.push_back(std::move(s));
    if (!is(")")) n.children.push_back(with_field(declarator(true, false), "declarator"));
    finish(n);
    return n;
  }

  static bool contains_function_declarator(const SyntaxNode& d) {
    if (d.kind == "function_declarator") return true;
    if (d.kind == "pointer_declarator" || d.kind == "parenthesized_declarator" || d.kind == "array_declarator") {
      for (const SyntaxNode& c : d.children) {
        if (contains_function_declarator(c)) return true;
      }
    }
    return false;
  }

  static const SyntaxNode* declarator_name(const SyntaxNode& d) {
    if (d.kind == "identifier" || d.kind == "type_identifier") return &d;
    for (const SyntaxNode& c : d.children) {
      if (c.field == "declarator" || c.kind == "parenthesized_declarator" || d.kind == "parenthesized_declarator") {
        if (const SyntaxNode* n = declarator_name(c)) return n;
      }
    }
    return nullptr;
  }

  SyntaxNode preprocessor() {
    const std::string_view text = cur().text;
    std::size_t k = 1;
    while (k < text.size() && (text[k] == ' ' || text[k] == '\t')) ++k;
    std::size_t e = k;
    while (e < text.size() && ((text[e] >= 'a' && text[e] <= 'z') || text[e] == '_')) ++e;
    const std::string_view directive = text.substr(k, e - k);
    std::string_view kind = "preproc_call";
    if (directive == "include") kind = "preproc_include";
    if (directive == "define") kind = "preproc_def";
    return leaf(kind);
  }

  // Either a function_definition or a declaration.
  SyntaxNode external_declaration() {
    if (cur().kind == TokenKind::kPreprocessor) return preprocessor();
    const std::size_t start = pos_;
    SyntaxNode n = make("declaration");
    Specifiers spec = declaration_specifiers();
    if (is(";")) {
      if (spec.nodes.empty()) throw ParseFailure{};
      for (SyntaxNode& s : spec.nodes) n.children.push_back(std::move(s));
      advance();
      finish(n);
      return n;
    }
    SyntaxNode first = declarator(false, false);
    if (is("{") && contains_function_declarator(first)) {
      SyntaxNode fn = make("function_definition");
      fn.begin = toks_[start].begin;
      for (SyntaxNode& s : spec.nodes) fn.children.push_back(std::move(s));
      fn.children.push_back(with_field(std::move(first), "declarator"));
      fn.children.push_back(with_field(compound_statement(), "body"));
      finish(fn);
      return fn;
    }
    for (SyntaxNode& s : spec.nodes) n.children.push_back(std::move(s));
    finish_declaration(n, std::move(first), spec.is_typedef);
    return n;
  }

  void finish_declaration(SyntaxNode& n, SyntaxNode first, bool is_typedef) {
    SyntaxNode current = std::move(first);
    for (;;) {
      while (is_attribute_at(pos_)) advance_attribute();
      if (is_typedef) {
        if (const SyntaxNode* name = declarator_name(current)) {
          typedefs_.insert(std::string(src_.substr(name->begin, name->end - name->begin)));
        }
      }
      if (is("=")) {
        SyntaxNode init = make("init_declarator");
        init.begin = current.begin;
        init.children.push_back(with_field(std::move(current), "declarator"));
        advance();
        init.children.push_back(with_field(initializer(), "value"));
        finish(init);
        n.children.push_back(with_field(std::move(init), "declarator"));
      } else {
        n.children.push_back(with_field(std::move(current), "declarator"));
      }
      if (!accept(",")) break;
      current = declarator(false, false);
    }
    expect(";");
    finish(n);
  }

  SyntaxNode declaration() {
    SyntaxNode n = make("declaration");
    Specifiers spec = declaration_specifiers();
    if (spec.nodes.empty()) throw ParseFailure{};
    for (SyntaxNode& s : spec.nodes) n.children.push_back(std::move(s));
    if (accept(";")) {
      finish(n);
      return n;
    }
    SyntaxNode first = declarator(false, false);
    finish_declaration(n, std::move(first), spec.is_typedef);
    return n;
  }

  SyntaxNode initializer() {
    if (is("{")) return initializer_list();
    return assignment_expression();
  }

  SyntaxNode initializer_list() {
    DepthGuard guard(depth_);
    SyntaxNode n = make("initializer_list");
    expect("{");
    while (!is("}")) {
      if (is(".") || is("[")) {
        SyntaxNode pair = make("initializer_pair");
        while (is(".") || is("[")) {
          if (accept(".")) {
            SyntaxNode d = make("field_designator");
            if (cur().kind != TokenKind::kIdentifier) throw ParseFailure{};
            d.begin = toks_[pos_ - 1].begin;
            d.children.push_back(leaf("field_identifier"));
            finish(d);
            pair.children.push_back(with_field(std::move(d), "designator"));
          } else {
            SyntaxNode d = make("subscript_designator");
            advance();
            d.children.push_back(conditional_expression());
            expect("]");
            finish(d);
            pair.children.push_back(with_field(std::move(d), "designator"));
          }
        }
        expect("=");
        pair.children.push_back(with_field(initializer(), "value"));
        finish(pair);
        n.children.push_back(std::move(pair));
      } else {
        n.children.push_back(initializer());
      }
      if (!accept(",")) break;
    }
    expect("}");
    finish(n);
    return n;
  }

  // ---- statements ---------------------------------------------------------

  SyntaxNode compound_statement() {
    DepthGuard guard(depth_);
    SyntaxNode n = make("compound_statement");
    expect("{");
    block_items(n);
    expect("}");
    finish(n);
    return n;
  }

  // Statements up to the closing brace. `case`/`default` labels own the
  // statements that follow them, mirroring tree-sitter-c.
  void block_items(SyntaxNode& block) {
    SyntaxNode* open_case = nullptr;
    while (!is("}")) {
      if (at_end()) throw ParseFailure{};
      if (is("case") || is("default")) {
        block.children.push_back(case_label());
        open_case = &block.children.back();
        continue;
      }
      SyntaxNode item = block_item();
      if (open_case != nullptr) {
        open_case->children.push_back(std::move(item));
        open_case->end = open_case->children.back().end;
      } else {
        block.children.push_back(std::move(item));
      }
    }
  }

  SyntaxNode case_label() {
    SyntaxNode n = make("case_statement");
    if (accept("case")) {
      n.children.push_back(with_field(conditional_expression(), "value"));
      if (accept("...")) n.children.push_back(with_field(conditional_expression(), "value"));
    } else {
      expect("default");
    }
    expect(":");
    finish(n);
    return n;
  }

  SyntaxNode block_item() {
    const std::size_t start = pos_;
    try {
      if (declaration_starts_here()) return declaration();
      return statement();
    } catch (const ParseFailure&) {
      return recover(start, /*in_block=*/true);
    }
  }

  SyntaxNode statement() {
    DepthGuard guard(depth_);
    const Token& t = cur();
    if (t.kind == TokenKind::kPreprocessor) return preprocessor();
    if (is("{")) return compound_statement();
    if (is(";")) return leaf("expression_statement");
    if (is("if")) {
      SyntaxNode n = make("if_statement");
      advance();
      n.children.push_back(with_field(condition_clause(), "condition"));
      n.children.push_back(with_field(statement_or_declaration(), "consequence"));
      if (is("else")) {
        SyntaxNode e = make("else_clause");
        advance();
        e.children.push_back(statement_or_declaration());
        finish(e);
        n.children.push_back(with_field(std::move(e), "alternative"));
      }
      finish(n);
      return n;
    }
    if (is("while")) {
      SyntaxNode n = make("while_statement");
      advance();
      n.children.push_back(with_field(condition_clause(), "condition"));
      n.children.push_back(with_field(statement_or_declaration(), "body"));
      finish(n);
      return n;
    }
    if (is("do")) {
      SyntaxNode n = make("do_statement");
      advance();
      n.children.push_back(with_field(statement_or_declaration(), "body"));
      expect("while");
      n.children.push_back(with_field(condition_clause(), "condition"));
      expect(";");
      finish(n);
      return n;
    }
    if (is("for")) return for_statement();
    if (is("switch")) {
      SyntaxNode n = make("switch_statement");
      advance();
      n.children.push_back(with_field(condition_clause(), "condition"));
      n.children.push_back(with_field(statement_or_declaration(), "body"));
      finish(n);
      return n;
    }
    if (is("return")) {
      SyntaxNode n = make("return_statement");
      advance();
      if (!is(";")) n.children.push_back(expression());
      expect(";");
      finish(n);
      return n;
    }
    if (is("break") || is("continue")) {
      SyntaxNode n = make(is("break") ? "break_statement" : "continue_statement");
      advance();
      expect(";");
      finish(n);
      return n;
    }
    if (is("goto")) {
      SyntaxNode n = make("goto_statement");
      advance();
      if (cur().kind != TokenKind::kIdentifier) throw ParseFailure{};
      n.children.push_back(with_field(leaf("statement_identifier"), "label"));
      expect(";");
      finish(n);
      return n;
    }
    if (is("case") || is("default")) {
      // A label outside a block, e.g. `switch (x) case 1: f();`.
      SyntaxNode n = case_label();
      n.children.push_back(statement());
      finish(n);
      return n;
    }
    if (t.kind == TokenKind::kIdentifier && is_at(pos_ + 1, ":")) {
      SyntaxNode n = make("labeled_statement");
      n.children.push_back(with_field(leaf("statement_identifier"), "label"));
      advance();  // ':'
      if (is("}")) {
        finish(n);
        return n;
      }
      n.children.push_back(statement_or_declaration());
      finish(n);
      return n;
    }
    SyntaxNode n = make("expression_statement");
    n.children.push_back(expression());
    expect(";");
    finish(n);
    return n;
  }

  SyntaxNode statement_or_declaration() {
    if (declaration_starts_here()) return declaration();
    return statement();
  }

  SyntaxNode condition_clause() {
    SyntaxNode n = make("parenthesized_expression");
    expect("(");
    n.children.push_back(expression());
    expect(")");
    finish(n);
    return n;
  }

  SyntaxNode for_statement() {
    SyntaxNode n = make("for_statement");
    expect("for");
    expect("(");
    if (declaration_starts_here()) {
      n.children.push_back(with_field(declaration(), "initializer"));
    } else {
      if (!is(";")) n.children.push_back(with_field(expression(), "initializer"));
      expect(";");
    }
    if (!is(";")) n.children.push_back(with_field(expression(), "condition"));
    expect(";");
    if (!is(")")) n.children.push_back(with_field(expression(), "update"));
    expect(")");
    n.children.push_back(with_field(statement_or_declaration(), "body"));
    finish(n);
    return n;
  }

  // ---- expressions --------------------------------------------------------

  SyntaxNode expression() {
    SyntaxNode left = assignment_expression();
    while (is(",")) {
      SyntaxNode n = make("comma_expression");
      n.begin = left.begin;
      advance();
      n.children.push_back(with_field(std::move(left), "left"));
      n.children.push_back(with_field(assignment_expression(), "right"));
      finish(n);
      left = std::move(n);
    }
    return left;
  }

  SyntaxNode assignment_expression() {
    DepthGuard guard(depth_);
    SyntaxNode left = conditional_expression();
    if (cur().kind == TokenKind::kPunct && is_assignment_op(cur().text)) {
      SyntaxNode n = make("assignment_expression");
      n.begin = left.begin;
      n.op = std::string(cur().text);
      advance();
      n.children.push_back(with_field(std::move(left), "left"));
      n.children.push_back(with_field(assignment_expression(), "right"));
      finish(n);
      return n;
    }
    return left;
  }

  SyntaxNode conditional_expression() {
    SyntaxNode cond = binary_expression(1);
    if (!is("?")) return cond;
    SyntaxNode n = make("conditional_expression");
    n.begin = cond.begin;
    advance();
    n.children.push_back(with_field(std::move(cond), "condition"));
    if (!is(":")) n.children.push_back(with_field(expression(), "consequence"));
    expect(":");
    n.children.push_back(with_field(conditional_expression(), "alternative"));
    finish(n);
    return n;
  }

  SyntaxNode binary_expression(int min_precedence) {
    SyntaxNode left = unary_expression();
    for (;;) {
      if (cur().kind != TokenKind::kPunct) break;
      const int prec = binary_precedence(cur().text);
      if (prec == 0 || prec < min_precedence) break;
      SyntaxNode n = make("binary_expression");
      n.begin = left.begin;
      n.op = std::string(cur().text);
      advance();
      n.children.push_back(with_field(std::move(left), "left"));
      n.children.push_back(with_field(binary_expression(prec + 1), "right"));
      finish(n);
      left = std::move(n);
    }
    return left;
  }

  SyntaxNode unary_expression() {
    DepthGuard guard(depth_);
    if (is("++") || is("--")) {
      SyntaxNode n = make("update_expression");
      n.op = std::string(cur().text);
      advance();
      n.children.push_back(with_field(unary_expression(), "argument"));
      finish(n);
      return n;
    }
    if (is("-") || is("+") || is("!") || is("~")) {
      SyntaxNode n = make("unary_expression");
      n.op = std::string(cur().text);
      advance();
      n.children.push_back(with_field(unary_expression(), "argument"));
      finish(n);
      return n;
    }
    if (is("*") || is("&")) {
      SyntaxNode n = make("pointer_expression");
      n.op = std::string(cur().text);
      advance();
      n.children.push_back(with_field(unary_expression(), "argument"));
      finish(n);
      return n;
    }
    if (is("sizeof") || is("_Alignof")) {
      SyntaxNode n = make(is("sizeof") ? "sizeof_expression" : "alignof_expression");
      advance();
      if (is("(") && type_name_starts_at(pos_ + 1)) {
        advance();
        n.children.push_back(with_field(type_descriptor(), "type"));
        expect(")");
      } else {
        n.children.push_back(with_field(unary_expression(), "value"));
      }
      finish(n);
      return n;
    }
    if (is("(") && type_name_starts_at(pos_ + 1)) {
      const std::size_t open = pos_;
      advance();
      SyntaxNode type = type_descriptor();
      expect(")");
      if (is("{")) {
        SyntaxNode n = make("compound_literal_expression");
        n.begin = toks_[open].begin;
        n.children.push_back(with_field(std::move(type), "type"));
        n.children.push_back(with_field(initializer_list(), "value"));
        finish(n);
        return postfix_tail(std::move(n));
      }
      SyntaxNode n = make("cast_expression");
      n.begin = toks_[open].begin;
      n.children.push_back(with_field(std::move(type), "type"));
      n.children.push_back(with_field(unary_expression(), "value"));
      finish(n);
      return n;
    }
    return postfix_tail(primary_expression());
  }

  SyntaxNode postfix_tail(SyntaxNode base) {
    for (;;) {
      if (is("(")) {
        SyntaxNode n = make("call_expression");
        n.begin = base.begin;
        n.children.push_back(with_field(std::move(base), "function"));
        SyntaxNode args = make("argument_list");
        advance();
        if (!is(")")) {
          for (;;) {
            args.children.push_back(assignment_expression());
            if (!accept(",")) break;
          }
        }
        expect(")");
        finish(args);
        n.children.push_back(with_field(std::move(args), "arguments"));
        finish(n);
        base = std::move(n);
      } else if (is("[")) {
        SyntaxNode n = make("subscript_expression");
        n.begin = base.begin;
        n.children.push_back(with_field(std::move(base), "argument"));
        advance();
        n.children.push_back(with_field(expression(), "index"));
        expect("]");
        finish(n);
        base = std::move(n);
      } else if (is(".") || is("->")) {
        SyntaxNode n = make("field_expression");
        n.begin = base.begin;
        n.op = std::string(cur().text);
        n.children.push_back(with_field(std::move(base), "argument"));
        advance();
        if (cur().kind != TokenKind::kIdentifier) throw ParseFailure{};
        n.children.push_back(with_field(leaf("field_identifier"), "field"));
        finish(n);
        base = std::move(n);
      } else if (is("++") || is("--")) {
        SyntaxNode n = make("update_expression");
        n.begin = base.begin;
        n.op = std::string(cur().text);
        n.children.push_back(with_field(std::move(base), "argument"));
        advance();
        finish(n);
        base = std::move(n);
      } else {
        break;
      }
    }
    return base;
  }

  SyntaxNode primary_expression() {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::kIdentifier: {
        if (t.text == "true") return leaf("true");
        if (t.text == "false") return leaf("false");
        if (t.text == "NULL" || t.text == "nullptr") return leaf("null");
        if (la(1).kind == TokenKind::kString) return string_sequence();
        return leaf("identifier");
      }
      case TokenKind::kNumber: return leaf("number_literal");
      case TokenKind::kChar: return leaf("char_literal");
      case TokenKind::kString: return string_sequence();
      default: break;
    }
    if (is("(")) {
      SyntaxNode n = make("parenthesized_expression");
      advance();
      if (is("{")) {
        n.children.push_back(compound_statement());  // GNU statement expression
      } else {
        n.children.push_back(expression());
      }
      expect(")");
      finish(n);
      return n;
    }
    throw ParseFailure{};
  }

  // "a" "b" or "a" PRId64 "b": adjacent literals, possibly with macros.
  SyntaxNode string_sequence() {
    SyntaxNode n = make("concatenated_string");
    for (;;) {
      if (cur().kind == TokenKind::kString) {
        n.children.push_back(leaf("string_literal"));
      } else if (cur().kind == TokenKind::kIdentifier && la(1).kind == TokenKind::kString) {
        n.children.push_back(leaf("identifier"));
      } else {
        break;
      }
    }
    if (n.children.empty()) throw ParseFailure{};
    if (n.children.size() == 1) return std::move(n.children.front());
    finish(n);
    return n;
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  std::set<std::string> typedefs_;
};

}  // namespace

SyntaxTree parse(std::string source, Language language) {
  (void)language;  // only C is wired up
  Parser parser(source);
  SyntaxNode root = parser.translation_unit();
  const bool recognisable = std::any_of(root.children.begin(), root.children.end(),
                                        [](const SyntaxNode& c) { return !c.is_error(); });
  if (!recognisable) {
    throw Error(ErrorKind::kParse, root.children.empty() ? "source contains no code"
                                                         : "parser produced no recognisable declaration");
  }
  return SyntaxTree(std::move(source), std::move(root));
}

}  // namespace vulnformer::codegraph
