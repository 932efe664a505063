#include "vulnformer/codegraph/cfg.hpp"

#include <string>
#include <string_view>
#include <utility>

namespace vulnformer::codegraph {
namespace {

struct Pending {
  int src;
  std::string_view tag;
};
using Flow = std::vector<Pending>;

bool is_jump_call(std::string_view name) {
  return name == "setjmp" || name == "longjmp" || name == "_setjmp" || name == "_longjmp" ||
         name == "sigsetjmp" || name == "siglongjmp";
}

const SyntaxNode* find_function_declarator(const SyntaxNode& declarator) {
  if (declarator.kind == "function_declarator") return &declarator;
  for (const SyntaxNode& c : declarator.children) {
    if (c.field == "declarator" || declarator.kind == "parenthesized_declarator") {
      if (const SyntaxNode* f = find_function_declarator(c)) return f;
    }
  }
  return nullptr;
}

bool declares_named_parameter(const SyntaxNode& params) {
  for (const SyntaxNode& p : params.children) {
    if (p.kind == "parameter_declaration" && p.child("declarator") != nullptr) {
      bool named = false;
      walk(*p.child("declarator"), [&](const SyntaxNode& n) {
        if (n.kind == "identifier") named = true;
        return n.kind != "parameter_list";
      });
      if (named) return true;
    }
  }
  return false;
}

class CfgBuilder {
 public:
  explicit CfgBuilder(const SyntaxTree& tree) : tree_(tree) {}

  ControlFlowGraph run() {
    out_.graph.kind = GraphKind::kCfg;
    add(nullptr, "entry", ByteRange{});
    add(nullptr, "exit", ByteRange{});
    bool any_function = false;
    for (const SyntaxNode& item : tree_.root().children) {
      if (item.kind != "function_definition") continue;
      any_function = true;
      Flow in{{kCfgEntry, "next"}};
      const SyntaxNode* declarator = item.child("declarator");
      const SyntaxNode* fn = declarator != nullptr ? find_function_declarator(*declarator) : nullptr;
      const SyntaxNode* params = fn != nullptr ? fn->child("parameters") : nullptr;
      if (params != nullptr && declares_named_parameter(*params)) {
        const int p = add(params, "parameter_list", params->span());
        connect(in, p);
        in = {{p, "next"}};
      }
      Flow out = build(*item.child("body"), std::move(in));
      connect(out, kCfgExit);
    }
    if (!any_function) out_.graph.add_edge(kCfgEntry, kCfgExit, "next");
    return std::move(out_);
  }

 private:
  struct JumpScope {
    bool is_loop = false;
    Flow breaks;
    Flow continues;
  };

  int add(const SyntaxNode* payload, std::string_view kind, ByteRange span) {
    out_.payload.push_back(payload);
    return out_.graph.add_node(std::string(kind), span);
  }

  void connect(const Flow& from, int dst) {
    for (const Pending& p : from) out_.graph.add_edge(p.src, dst, std::string(p.tag));
  }

  int simple(const SyntaxNode& stmt, const Flow& in) {
    const int n = add(&stmt, stmt.kind, stmt.span());
    connect(in, n);
    note_jump_calls(stmt);
    return n;
  }

  void note_jump_calls(const SyntaxNode& stmt) {
    walk(stmt, [&](const SyntaxNode& n) {
      if (n.kind == "call_expression") {
        const SyntaxNode* f = n.child("function");
        if (f != nullptr && f->kind == "identifier" && is_jump_call(tree_.text(*f))) {
          out_.graph.diagnostics.push_back(
              Diagnostic{ErrorKind::kUnsupportedConstruct,
                         std::string(tree_.text(*f)) + " treated as straight-line flow", n.span()});
        }
      }
      return true;
    });
  }

  JumpScope* innermost(bool loop_only) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      if (it->is_loop || !loop_only) return &*it;
    }
    return nullptr;
  }

  static void append(Flow& into, const Flow& from) { into.insert(into.end(), from.begin(), from.end()); }

  Flow build(const SyntaxNode& stmt, Flow in) {
    const std::string_view kind = stmt.kind;
    if (kind == "compound_statement") {
      for (const SyntaxNode& c : stmt.children) in = build(c, std::move(in));
      return in;
    }
    if (kind.substr(0, 7) == "preproc") return in;
    if (kind == "if_statement") {
      const int b = add(stmt.child("condition"), kind, stmt.span());
      connect(in, b);
      Flow out = build(*stmt.child("consequence"), {{b, "true"}});
      if (const SyntaxNode* alt = stmt.child("alternative"); alt != nullptr && !alt->children.empty()) {
        append(out, build(alt->children.front(), {{b, "false"}}));
      } else {
        out.push_back({b, "false"});
      }
      return out;
    }
    if (kind == "while_statement") {
      const int h = add(stmt.child("condition"), kind, stmt.span());
      connect(in, h);
      scopes_.push_back(JumpScope{true, {}, {}});
      Flow body = build(*stmt.child("body"), {{h, "true"}});
      JumpScope scope = std::move(scopes_.back());
      scopes_.pop_back();
      connect(body, h);
      connect(scope.continues, h);
      Flow out{{h, "false"}};
      append(out, scope.breaks);
      return out;
    }
    if (kind == "do_statement") {
      const auto first = static_cast<int>(out_.graph.nodes.size());
      scopes_.push_back(JumpScope{true, {}, {}});
      Flow body = build(*stmt.child("body"), std::move(in));
      JumpScope scope = std::move(scopes_.back());
      scopes_.pop_back();
      const int c = add(stmt.child("condition"), kind, stmt.span());
      connect(body, c);
      connect(scope.continues, c);
      out_.graph.add_edge(c, c == first ? c : first, "true");
      Flow out{{c, "false"}};
      append(out, scope.breaks);
      return out;
    }
    if (kind == "for_statement") {
      const SyntaxNode* init = stmt.child("initializer");
      const SyntaxNode* cond = stmt.child("condition");
      const SyntaxNode* update = stmt.child("update");
      if (init != nullptr) {
        const int i = add(init, "for_initializer", init->span());
        connect(in, i);
        in = {{i, "next"}};
      }
      const int h = add(cond, kind, stmt.span());
      connect(in, h);
      int u = -1;
      if (update != nullptr) u = add(update, "for_update", update->span());
      scopes_.push_back(JumpScope{true, {}, {}});
      Flow body = build(*stmt.child("body"), {{h, "true"}});
      JumpScope scope = std::move(scopes_.back());
      scopes_.pop_back();
      const int back_target = u >= 0 ? u : h;
      connect(body, back_target);
      connect(scope.continues, back_target);
      if (u >= 0) out_.graph.add_edge(u, h, "back");
      Flow out;
      if (cond != nullptr) out.push_back({h, "false"});
      append(out, scope.breaks);
      return out;
    }
    if (kind == "switch_statement") {
      const int s = add(stmt.child("condition"), kind, stmt.span());
      connect(in, s);
      scopes_.push_back(JumpScope{false, {}, {}});
      const SyntaxNode& body = *stmt.child("body");
      Flow flow;  // statements ahead of the first label are unreachable
      bool has_default = false;
      auto visit_item = [&](const SyntaxNode& item) {
        if (item.kind != "case_statement") {
          flow = build(item, std::move(flow));
          return;
        }
        const int c = add(nullptr, "case_statement", item.span());
        out_.graph.add_edge(s, c, "case");
        connect(flow, c);
        flow = {{c, "next"}};
        if (item.child("value") == nullptr) has_default = true;
        for (const SyntaxNode& inner : item.children) {
          if (inner.field != "value") flow = build(inner, std::move(flow));
        }
      };
      if (body.kind == "compound_statement") {
        for (const SyntaxNode& item : body.children) visit_item(item);
      } else {
        visit_item(body);
      }
      JumpScope scope = std::move(scopes_.back());
      scopes_.pop_back();
      Flow out = std::move(flow);
      append(out, scope.breaks);
      if (!has_default) out.push_back({s, "default"});
      return out;
    }
    if (kind == "case_statement") {
      // A label with no enclosing switch in this function: plain label.
      const int c = add(nullptr, kind, stmt.span());
      connect(in, c);
      Flow flow{{c, "next"}};
      for (const SyntaxNode& inner : stmt.children) {
        if (inner.field != "value") flow = build(inner, std::move(flow));
      }
      return flow;
    }
    if (kind == "break_statement" || kind == "continue_statement") {
      const int n = add(nullptr, kind, stmt.span());
      connect(in, n);
      if (JumpScope* scope = innermost(kind == "continue_statement")) {
        (kind == "break_statement" ? scope->breaks : scope->continues).push_back({n, "next"});
        return {};
      }
      return {{n, "next"}};
    }
    if (kind == "return_statement") {
      const int n = simple(stmt, in);
      out_.graph.add_edge(n, kCfgExit, "return");
      return {};
    }
    if (kind == "goto_statement") {
      const int n = add(nullptr, kind, stmt.span());
      connect(in, n);
      out_.graph.diagnostics.push_back(
          Diagnostic{ErrorKind::kUnsupportedConstruct, "goto treated as straight-line flow", stmt.span()});
      return {{n, "next"}};
    }
    if (kind == "labeled_statement") {
      const int n = add(nullptr, kind, stmt.span());
      connect(in, n);
      Flow flow{{n, "next"}};
      for (const SyntaxNode& inner : stmt.children) {
        if (inner.field != "label") flow = build(inner, std::move(flow));
      }
      return flow;
    }
    // declaration, expression_statement, ERROR and anything else: one node.
    return {{simple(stmt, in), "next"}};
  }

  const SyntaxTree& tree_;
  ControlFlowGraph out_;
  std::vector<JumpScope> scopes_;
};

}  // namespace

ControlFlowGraph build_control_flow(const SyntaxTree& ast) { return CfgBuilder(ast).run(); }

}  // namespace vulnformer::codegraph
