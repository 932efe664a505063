#include <doctest.h>

#include <algorithm>
#include <map>

#include "oracles.hpp"
#include "vulnformer/codegraph/dfg.hpp"
#include "vulnformer/codegraph/dot.hpp"
#include "vulnformer/codegraph/lexer.hpp"
#include "vulnformer/harness/synthetic.hpp"

using namespace vulnformer;
using namespace vulnformer::codegraph;

namespace {

const SyntaxNode* find_kind(const SyntaxNode& root, std::string_view kind) {
  const SyntaxNode* hit = nullptr;
  walk(root, [&](const SyntaxNode& n) {
    if (hit == nullptr && n.kind == kind) hit = &n;
    return hit == nullptr;
  });
  return hit;
}

std::vector<std::string> texts_of(const SyntaxTree& tree, std::string_view kind) {
  std::vector<std::string> out;
  walk(tree.root(), [&](const SyntaxNode& n) {
    if (n.kind == kind) out.emplace_back(tree.text(n));
    return true;
  });
  return out;
}

// Edges of the DFG as (definition text, use text) with line numbers so the
// expectations read like the hand analysis.
std::set<std::pair<std::string, std::string>> def_use_by_line(const DataFlow& flow, const std::string& code) {
  auto where = [&](int site) {
    const auto& s = flow.sites[site];
    const auto line = std::count(code.begin(), code.begin() + static_cast<std::ptrdiff_t>(s.span.begin), '\n') + 1;
    return s.name + "@" + std::to_string(line);
  };
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& e : flow.graph.edges) out.insert({where(e.src), where(e.dst)});
  return out;
}

}  // namespace

TEST_SUITE("lexer") {
  TEST_CASE("comments and whitespace are dropped") {
    auto toks = lex("int /* c */ a = 1; // tail\n");
    std::vector<std::string> texts;
    for (const auto& t : toks)
      if (t.kind != TokenKind::kEnd) texts.emplace_back(t.text);
    CHECK(texts == std::vector<std::string>{"int", "a", "=", "1", ";"});
    CHECK(toks.back().kind == TokenKind::kEnd);
  }

  TEST_CASE("directives stay whole unless asked otherwise") {
    auto whole = lex("#define N 4\nint x;");
    CHECK(whole.front().kind == TokenKind::kPreprocessor);
    auto split = lex("#define N 4\nint x;", LexOptions{false});
    CHECK(split.front().text == "#");
  }
}

TEST_SUITE("parse_ast") {
  TEST_CASE("function definition contains a return statement") {
    SyntaxTree tree = parse("int f(){return 0;}");
    const SyntaxNode* fn = find_kind(tree.root(), "function_definition");
    REQUIRE(fn != nullptr);
    CHECK(find_kind(*fn, "return_statement") != nullptr);
    CHECK(tree.error_count() == 0);
  }

  TEST_CASE("snake_case declarator is one identifier node") {
    SyntaxTree tree = parse("void drc_set_unusable(int x) { x = 0; }");
    auto ids = texts_of(tree, "identifier");
    CHECK(std::count(ids.begin(), ids.end(), "drc_set_unusable") == 1);
    CHECK(std::find(ids.begin(), ids.end(), "drc") == ids.end());
  }

  TEST_CASE("AST graph is a pre-order tree") {
    SyntaxTree tree = parse("int g(int a) { if (a) return 1; return 0; }");
    CodeGraph g = tree.graph();
    g.validate();
    CHECK(g.kind == GraphKind::kAst);
    CHECK(g.edges.size() == g.node_count() - 1);
    for (const auto& e : g.edges) CHECK(e.src < e.dst);
    CHECK(g.nodes[0].kind_tag == "translation_unit");
  }

  TEST_CASE("broken statement becomes an ERROR node, the rest survives") {
    SyntaxTree tree = parse("int h(int a) { a = ; return a; }\nint k(void) { return 2; }");
    CHECK(tree.error_count() >= 1);
    CHECK(texts_of(tree, "function_definition").size() == 2);
    CHECK(find_kind(tree.root(), "return_statement") != nullptr);
  }

  TEST_CASE("nothing recognisable is a ParseError") {
    for (const char* src : {"", "   \n", "@@@ ### $$$"}) {
      CAPTURE(src);
      try {
        (void)parse(src);
        FAIL("expected ParseError");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kParse);
      }
    }
  }
}

TEST_SUITE("build_cfg") {
  TEST_CASE("hand-annotated corpus matches exactly") {
    const auto corpus = vftest::load_cfg_corpus();
    REQUIRE(corpus.size() >= 20);
    for (const auto& fn : corpus) {
      CAPTURE(fn.name);
      SyntaxTree tree = parse(fn.code);
      CodeGraph cfg = build_cfg(tree);
      cfg.validate();
      CHECK(cfg.node_count() <= 12);
      CHECK(vftest::keyed_edges(cfg, fn.code) == fn.edges);
      CHECK(cfg.diagnostics.size() == fn.diagnostics);
    }
  }

  TEST_CASE("statement chain: entry -> stmt1 -> stmt2 -> exit") {
    CodeGraph cfg = build_cfg(parse("void f(){int a=1; a++;}"));
    REQUIRE(cfg.node_count() == 4);
    auto pairs = cfg.edge_pairs();
    CHECK(pairs == std::vector<std::pair<int, int>>{{kCfgEntry, 2}, {2, 3}, {3, kCfgExit}});
  }

  TEST_CASE("if/else: branch out-degree 2, arms converge") {
    const std::string code = "void f(int c){int x; if(c) x=1; else x=2; x++;}";
    CodeGraph cfg = build_cfg(parse(code));
    auto keys = vftest::node_keys(cfg, code);
    auto at = [&](const std::string& k) {
      return static_cast<int>(std::find(keys.begin(), keys.end(), k) - keys.begin());
    };
    const int branch = at("if(c) x=1; else x=2;");
    REQUIRE(branch < static_cast<int>(keys.size()));
    CHECK(cfg.out_degrees()[branch] == 2);
    std::set<int> into_join;
    for (const auto& e : cfg.edges)
      if (e.dst == at("x++;")) into_join.insert(e.src);
    CHECK(into_join == std::set<int>{at("x=1;"), at("x=2;")});
  }

  TEST_CASE("longjmp is flagged but kept straight-line") {
    CodeGraph cfg = build_cfg(parse("void f(jmp_buf b){ longjmp(b, 1); g(); }"));
    CHECK(cfg.diagnostics.size() == 1);
    CHECK(cfg.diagnostics[0].kind == ErrorKind::kUnsupportedConstruct);
  }
}

TEST_SUITE("build_dfg") {
  TEST_CASE("use reached by a single definition") {
    const std::string code = "void f() {\nint a=1;\nint b=a;\n}";
    auto flow = analyze_dataflow(parse(code));
    CHECK(def_use_by_line(flow, code) == std::set<std::pair<std::string, std::string>>{{"a@2", "a@3"}});
  }

  TEST_CASE("redefinition kills the earlier definition") {
    const std::string code = "void f() {\nint a=1;\na=2;\nint b=a;\n}";
    auto flow = analyze_dataflow(parse(code));
    CHECK(def_use_by_line(flow, code) == std::set<std::pair<std::string, std::string>>{{"a@3", "a@4"}});
  }

  TEST_CASE("both branch definitions reach the join") {
    const std::string code = "int f(int c) {\nint x;\nif (c)\nx = 1;\nelse\nx = 2;\nreturn x;\n}";
    auto flow = analyze_dataflow(parse(code));
    auto edges = def_use_by_line(flow, code);
    CHECK(edges.count({"x@4", "x@7"}) == 1);
    CHECK(edges.count({"x@6", "x@7"}) == 1);
    CHECK(edges.count({"c@1", "c@3"}) == 1);
  }

  TEST_CASE("loop-carried definition reaches the loop test") {
    const std::string code = "int f(int n) {\nint i = 0;\nwhile (i < n)\ni++;\nreturn i;\n}";
    auto flow = analyze_dataflow(parse(code));
    auto edges = def_use_by_line(flow, code);
    CHECK(edges.count({"i@2", "i@3"}) == 1);
    CHECK(edges.count({"i@4", "i@3"}) == 1);
    CHECK(edges.count({"i@4", "i@4"}) == 1);
    CHECK(edges.count({"i@4", "i@5"}) == 1);
  }

  TEST_CASE("matches the brute-force path enumerator on the corpus") {
    for (const auto& fn : vftest::load_cfg_corpus()) {
      CAPTURE(fn.name);
      auto flow = analyze_dataflow(parse(fn.code));
      const auto oracle = vftest::enumerate_def_use(flow);
      std::set<std::pair<int, int>> got;
      for (const auto& e : flow.graph.edges) got.insert({e.src, e.dst});
      CHECK(got == oracle);
    }
  }

  TEST_CASE("matches the brute-force path enumerator on generated functions") {
    harness::SyntheticOptions opt;
    opt.count = 60;
    opt.seed = 11;
    const auto data = harness::separability_dataset(opt);
    for (harness::Split s : harness::kAllSplits) {
      for (const auto& u : data.units(s)) {
        CAPTURE(u.id);
        auto flow = analyze_dataflow(parse(u.code));
        std::set<std::pair<int, int>> got;
        for (const auto& e : flow.graph.edges) got.insert({e.src, e.dst});
        CHECK(got == vftest::enumerate_def_use(flow));
      }
    }
  }
}

TEST_SUITE("dot") {
  TEST_CASE("emit/parse preserves edge sets for AST, CFG and DFG") {
    for (const auto& fn : vftest::load_cfg_corpus()) {
      CAPTURE(fn.name);
      SyntaxTree tree = parse(fn.code);
      auto flow = analyze_dataflow(tree);
      for (const CodeGraph* g : {&flow.cfg.graph, &flow.graph}) {
        CodeGraph back = parse_dot(to_dot(*g));
        CHECK(back.edge_pairs() == g->edge_pairs());
        CHECK(back.node_count() == g->node_count());
        CHECK(back.kind == g->kind);
        CHECK(to_dot(back) == to_dot(*g));
      }
      CodeGraph ast = tree.graph();
      CHECK(parse_dot(to_dot(ast)).edge_pairs() == ast.edge_pairs());
    }
  }

  TEST_CASE("labels with quotes and backslashes survive") {
    CodeGraph g;
    g.kind = GraphKind::kDfg;
    g.add_node("variable_definition", {0, 3});
    g.add_node("odd \"label\" \\ here", {4, 9});
    g.add_edge(0, 1, "x\"y");
    CodeGraph back = parse_dot(to_dot(g));
    REQUIRE(back.node_count() == 2);
    CHECK(back.nodes[1].kind_tag == g.nodes[1].kind_tag);
    CHECK(back.nodes[1].span == g.nodes[1].span);
    CHECK(back.edges.at(0).tag == "x\"y");
  }

  TEST_CASE("malformed DOT is a FormatError") {
    try {
      (void)parse_dot("digraph CFG { n0 -> ; }");
      FAIL("expected FormatError");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kFormat);
    }
  }
}

TEST_SUITE("to_adjacency") {
  TEST_CASE("row sums equal out-degree from the edge list") {
    for (const auto& fn : vftest::load_cfg_corpus()) {
      CAPTURE(fn.name);
      CodeGraph cfg = build_cfg(parse(fn.code));
      auto adj = to_adjacency(cfg, 32);
      std::map<int, std::size_t> degree;
      for (const auto& [s, d] : cfg.edge_pairs()) degree[s]++;
      for (std::size_t r = 0; r < adj.size; ++r) {
        std::size_t row = 0;
        for (std::size_t c = 0; c < adj.size; ++c) row += adj.at(r, c);
        CHECK(row == degree[static_cast<int>(r)]);
      }
      CHECK_FALSE(adj.truncated);
      CHECK(adj.true_node_count == cfg.node_count());
    }
  }

  TEST_CASE("oversize graph is truncated and counted once") {
    std::string code = "void f(int a) {\n";
    for (int i = 0; i < 10; ++i) code += "  a = a + " + std::to_string(i) + ";\n";
    code += "}\n";
    CodeGraph cfg = build_cfg(parse(code));
    TruncationCounter counter;
    auto adj = to_adjacency(cfg, 4, &counter);
    CHECK(adj.truncated);
    CHECK(adj.size == 4);
    CHECK(counter.cfg == 1);
    CHECK(counter.total() == 1);
    // Kept ids are entry, exit, params, s1: only entry->params->s1 survive.
    std::size_t ones = std::count(adj.data.begin(), adj.data.end(), std::uint8_t{1});
    CHECK(ones == 2);
    CHECK(adj.at(0, 2) == 1);
    CHECK(adj.at(2, 3) == 1);
  }

  TEST_CASE("small graph is zero-padded") {
    CodeGraph cfg = build_cfg(parse("void f(void) {}"));
    auto adj = to_adjacency(cfg, 8);
    CHECK(adj.data.size() == 64);
    CHECK(adj.at(0, 1) == 1);
    CHECK(std::count(adj.data.begin(), adj.data.end(), std::uint8_t{1}) == 1);
  }
}
