#include "vulnformer/codegraph/dfg.hpp"

#include <deque>
#include <map>
#include <set>

namespace vulnformer::codegraph {

std::string_view access_kind_tag(AccessKind kind) {
  switch (kind) {
    case AccessKind::kDefinition: return "variable_definition";
    case AccessKind::kModification: return "variable_modification";
    case AccessKind::kUse: return "variable_use";
  }
  return "variable_use";
}

namespace {

bool is_opaque(std::string_view kind) {
  return kind == "type_descriptor" || kind == "primitive_type" || kind == "type_identifier" ||
         kind == "sized_type_specifier" || kind == "struct_specifier" || kind == "union_specifier" ||
         kind == "enum_specifier" || kind == "field_identifier" || kind == "statement_identifier" ||
         kind == "string_literal" || kind == "concatenated_string" || kind == "number_literal" ||
         kind == "char_literal" || kind == "storage_class_specifier" || kind == "type_qualifier" ||
         kind == "attribute_specifier" || kind == "field_designator" || kind == "subscript_designator" ||
         kind == "ERROR";
}

class AccessCollector {
 public:
  explicit AccessCollector(const SyntaxTree& tree) : tree_(tree) {}

  std::vector<VariableAccess> take() { return std::move(out_); }

  void expression(const SyntaxNode& n) {
    const std::string_view kind = n.kind;
    if (is_opaque(kind)) return;
    if (kind == "identifier") {
      record(AccessKind::kUse, n);
      return;
    }
    if (kind == "declaration") {
      for (const SyntaxNode& c : n.children) {
        if (c.field == "declarator") declarator(c);
      }
      return;
    }
    if (kind == "parameter_list") {
      for (const SyntaxNode& p : n.children) {
        if (const SyntaxNode* d = p.child("declarator")) declarator(*d);
      }
      return;
    }
    if (kind == "assignment_expression") {
      expression(*n.child("right"));
      const SyntaxNode& left = *n.child("left");
      if (left.kind == "identifier") {
        if (n.op != "=") record(AccessKind::kUse, left);
        record(AccessKind::kModification, left);
      } else {
        expression(left);
      }
      return;
    }
    if (kind == "update_expression") {
      const SyntaxNode& arg = *n.child("argument");
      if (arg.kind == "identifier") {
        record(AccessKind::kUse, arg);
        record(AccessKind::kModification, arg);
      } else {
        expression(arg);
      }
      return;
    }
    if (kind == "call_expression") {
      const SyntaxNode& fn = *n.child("function");
      if (fn.kind != "identifier") expression(fn);
      expression(*n.child("arguments"));
      return;
    }
    for (const SyntaxNode& c : n.children) {
      if (c.field == "type") continue;
      expression(c);
    }
  }

 private:
  void declarator(const SyntaxNode& d) {
    const std::string_view kind = d.kind;
    if (kind == "init_declarator") {
      expression(*d.child("value"));
      declarator(*d.child("declarator"));
    } else if (kind == "identifier") {
      record(AccessKind::kDefinition, d);
    } else if (kind == "array_declarator") {
      if (const SyntaxNode* size = d.child("size")) expression(*size);
      if (const SyntaxNode* inner = d.child("declarator")) declarator(*inner);
    } else if (kind == "pointer_declarator" || kind == "parenthesized_declarator") {
      for (const SyntaxNode& c : d.children) {
        if (c.field == "declarator" || kind == "parenthesized_declarator") declarator(c);
      }
    }
    // function_declarator: a prototype, not a variable.
  }

  void record(AccessKind kind, const SyntaxNode& ident) {
    out_.push_back(VariableAccess{kind, std::string(tree_.text(ident)), ident.span(), 0});
  }

  const SyntaxTree& tree_;
  std::vector<VariableAccess> out_;
};

// Reaching definitions, keyed by variable name.
using DefState = std::map<std::string, std::set<int>>;

void transfer(DefState& state, const std::vector<int>& site_ids, const std::vector<VariableAccess>& sites) {
  for (int id : site_ids) {
    const VariableAccess& a = sites[static_cast<std::size_t>(id)];
    if (defines(a.kind)) state[a.name] = {id};
  }
}

}  // namespace

std::vector<VariableAccess> collect_accesses(const SyntaxTree& tree, const SyntaxNode& payload) {
  AccessCollector collector(tree);
  collector.expression(payload);
  return collector.take();
}

DataFlow analyze_dataflow(const SyntaxTree& ast) {
  DataFlow df;
  df.cfg = build_control_flow(ast);
  const std::size_t n = df.cfg.graph.nodes.size();
  df.node_sites.resize(n);
  df.graph.kind = GraphKind::kDfg;
  for (std::size_t v = 0; v < n; ++v) {
    const SyntaxNode* payload = df.cfg.payload[v];
    if (payload == nullptr) continue;
    for (VariableAccess& a : collect_accesses(ast, *payload)) {
      a.cfg_node = static_cast<int>(v);
      const int id = df.graph.add_node(std::string(access_kind_tag(a.kind)), a.span);
      df.node_sites[v].push_back(id);
      df.sites.push_back(std::move(a));
    }
  }

  std::vector<std::vector<int>> preds(n);
  std::vector<std::vector<int>> succs(n);
  for (const auto& [src, dst] : df.cfg.graph.edge_pairs()) {
    preds[static_cast<std::size_t>(dst)].push_back(src);
    succs[static_cast<std::size_t>(src)].push_back(dst);
  }

  // Forward may-analysis to a fixpoint; OUT starts empty everywhere.
  std::vector<DefState> in(n);
  std::vector<DefState> out(n);
  std::deque<std::size_t> work;
  std::vector<bool> queued(n, true);
  for (std::size_t v = 0; v < n; ++v) work.push_back(v);
  while (!work.empty()) {
    const std::size_t v = work.front();
    work.pop_front();
    queued[v] = false;
    DefState merged;
    for (int p : preds[v]) {
      for (const auto& [name, defs] : out[static_cast<std::size_t>(p)]) merged[name].insert(defs.begin(), defs.end());
    }
    DefState next = merged;
    transfer(next, df.node_sites[v], df.sites);
    in[v] = std::move(merged);
    if (next != out[v]) {
      out[v] = std::move(next);
      for (int s : succs[v]) {
        if (!queued[static_cast<std::size_t>(s)]) {
          queued[static_cast<std::size_t>(s)] = true;
          work.push_back(static_cast<std::size_t>(s));
        }
      }
    }
  }

  for (std::size_t v = 0; v < n; ++v) {
    DefState state = in[v];
    for (int id : df.node_sites[v]) {
      const VariableAccess& a = df.sites[static_cast<std::size_t>(id)];
      if (defines(a.kind)) {
        state[a.name] = {id};
      } else if (auto it = state.find(a.name); it != state.end()) {
        for (int d : it->second) df.graph.add_edge(d, id, a.name);
      }
    }
  }
  return df;
}

}  // namespace vulnformer::codegraph
