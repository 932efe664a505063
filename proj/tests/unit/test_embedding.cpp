#include <doctest.h>

#include <cstring>
#include <random>

#include "oracles.hpp"
#include "vulnformer/embedding/embedder.hpp"
#include "vulnformer/error.hpp"
#include "vulnformer/io/container.hpp"
#include "vulnformer/numerics/ops.hpp"

using namespace vulnformer;
using namespace vulnformer::embedding;
using codegraph::SourceUnit;
using numerics::Tensor;

namespace {

using Tokens = std::vector<std::string>;

template <typename F>
void expect_error(ErrorKind kind, F&& f) {
  try {
    f();
    FAIL("expected " << error_kind_name(kind));
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

std::vector<SourceUnit> units(std::initializer_list<std::string> codes) {
  std::vector<SourceUnit> out;
  int i = 0;
  for (const auto& c : codes) out.push_back({"u" + std::to_string(i++), c});
  return out;
}

}  // namespace

TEST_SUITE("tokenizer") {
  TEST_CASE("identifier splitting") {
    CHECK(split_identifier("drc_set_unusable") == Tokens{"drc", "_", "set", "_", "unusable"});
    CHECK(split_identifier("getHTTPHeader") == Tokens{"get", "HTTP", "Header"});
    CHECK(split_identifier("camelCase") == Tokens{"camel", "Case"});
    CHECK(split_identifier("x") == Tokens{"x"});
    CHECK(split_identifier("__init") == Tokens{"_", "_", "init"});
  }

  TEST_CASE("preserved identifiers stay whole") {
    PreserveList keep{"drc_set_unusable"};
    auto t = code_tokens("drc_set_unusable(dev_ptr);", keep);
    CHECK(t == Tokens{"drc_set_unusable", "(", "dev", "_", "ptr", ")", ";"});
    auto split = code_tokens("drc_set_unusable(dev_ptr);", {});
    CHECK(split.front() == "drc");
  }

  TEST_CASE("comments are not tokens") {
    CHECK(code_tokens("a /* b c */ + // d\n e", {}) == Tokens{"a", "+", "e"});
  }

  TEST_CASE("declared names") {
    auto names = declared_names("int do_work(int n_items) { int local_sum = 0; return local_sum; }");
    CHECK(names.contains("do_work"));
    CHECK(names.contains("n_items"));
    CHECK(names.contains("local_sum"));
    CHECK(declared_names("@@@").empty());
  }

  TEST_CASE("10000 source tokens truncate to exactly 768 ids") {
    std::string code;
    for (int i = 0; i < 10000; ++i) code += "a ";
    Vocabulary vocab = Vocabulary::fit(units({"int a;"}));
    TokenSequence seq = tokenize(code, vocab);
    CHECK(seq.ids.size() == kMaxSequenceLength);
    CHECK(seq.tokens.size() == kMaxSequenceLength);
    CHECK(tokenize(code, vocab, 10).ids.size() == 10);
  }
}

TEST_SUITE("vocabulary") {
  TEST_CASE("reserved ids and frequency ordering") {
    auto corpus = units({"b b b a a c;", "a b;"});
    Vocabulary v = Vocabulary::fit(corpus, FitOptions{1, {}, false});
    CHECK(v.token(kPadId) == kPadToken);
    CHECK(v.token(kUnkId) == kUnkToken);
    // b:4, a:3, ';':2, c:1
    CHECK(v.token(2) == "b");
    CHECK(v.token(3) == "a");
    CHECK(v.token(4) == ";");
    CHECK(v.token(5) == "c");
    CHECK(v.frequency(2) == 4);
    CHECK(v.id("never_seen") == kUnkId);
    expect_error(ErrorKind::kIndexOutOfVocabulary, [&] { (void)v.token(99); });
  }

  TEST_CASE("ties break lexicographically") {
    Vocabulary v = Vocabulary::fit(units({"z y x"}), FitOptions{1, {}, false});
    CHECK(v.token(2) == "x");
    CHECK(v.token(3) == "y");
    CHECK(v.token(4) == "z");
  }

  TEST_CASE("min_count drops rare tokens but keeps preserved names") {
    FitOptions opt{2, {"rare_name"}, false};
    Vocabulary v = Vocabulary::fit(units({"a a b rare_name"}), opt);
    CHECK(v.contains("a"));
    CHECK_FALSE(v.contains("b"));
    CHECK(v.contains("rare_name"));
  }

  TEST_CASE("declared names join the preserve list") {
    Vocabulary v = Vocabulary::fit(units({"void drc_set_unusable(int x) { }"}));
    CHECK(v.preserve_list().contains("drc_set_unusable"));
    CHECK(v.contains("drc_set_unusable"));
    auto seq = tokenize("drc_set_unusable(1);", v);
    CHECK(seq.tokens.front() == "drc_set_unusable");
    CHECK(seq.ids.front() == v.id("drc_set_unusable"));
  }

  TEST_CASE("empty corpus") {
    expect_error(ErrorKind::kEmptyCorpus, [] { (void)Vocabulary::fit({}); });
  }

  TEST_CASE("json and file round trip") {
    Vocabulary v = Vocabulary::fit(units({"int main(void) { return fooBar + 1; }", "x = y;"}));
    CHECK(Vocabulary::from_json(v.to_json()) == v);
    auto path = vftest::scratch_dir("vocab") / "vocab.json";
    v.save(path);
    Vocabulary back = Vocabulary::load(path);
    CHECK(back == v);
    CHECK(back.min_count() == v.min_count());
    auto bad = v.to_json();
    bad["tokens"][0]["token"] = "oops";
    expect_error(ErrorKind::kFormat, [&] { (void)Vocabulary::from_json(bad); });
    expect_error(ErrorKind::kFormat, [] { (void)Vocabulary::from_json(nlohmann::json::object()); });
  }
}

TEST_SUITE("embedder") {
  TEST_CASE("embed: rows are table rows, PAD is zero") {
    std::mt19937_64 rng(2);
    auto t64 = vftest::random_tensor({6, 3}, rng, 1.0, false);
    Tensor table = Tensor::from_values({6, 3}, std::vector<float>(t64.values().begin(), t64.values().end()));
    TokenSequence seq{{"a", "<pad>", "b"}, {4, 0, 2}};
    EmbeddingMatrix m = embed(seq, table);
    REQUIRE(m.rows() == 3);
    REQUIRE(m.cols() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(m.values(0, c) == table(4, c));
      CHECK(m.values(1, c) == 0.0f);
      CHECK(m.values(2, c) == table(2, c));
    }
    TokenSequence bad{{"q"}, {6}};
    expect_error(ErrorKind::kIndexOutOfVocabulary, [&] { (void)embed(bad, table); });
  }

  TEST_CASE("perturbing one table row changes exactly the rows using that id") {
    std::mt19937_64 rng(4);
    auto t64 = vftest::random_tensor({8, 4}, rng, 1.0, false);
    std::vector<float> vals(t64.values().begin(), t64.values().end());
    Tensor base = Tensor::from_values({8, 4}, vals);
    for (std::size_t c = 0; c < 4; ++c) vals[5 * 4 + c] += 0.5f;
    Tensor bumped = Tensor::from_values({8, 4}, vals);
    TokenSequence seq{{}, {5, 1, 5, 3, 0, 7}};
    auto a = embed(seq, base), b = embed(seq, bumped);
    for (std::size_t r = 0; r < seq.ids.size(); ++r) {
      bool changed = false;
      for (std::size_t c = 0; c < 4; ++c) changed = changed || a.values(r, c) != b.values(r, c);
      CHECK(changed == (seq.ids[r] == 5));
    }
  }

  TEST_CASE("embed is differentiable w.r.t. the table") {
    Tensor table = Tensor::full({4, 2}, 1.0f, true);
    TokenSequence seq{{}, {3, 3, 0, 2}};
    numerics::backward(numerics::sum(embed(seq, table).values));
    std::vector<float> g(table.grad().begin(), table.grad().end());
    CHECK(g == std::vector<float>{0, 0, 0, 0, 1, 1, 2, 2});
  }

  TEST_CASE("one-hot table") {
    Tensor t = one_hot_table(7, 3);
    for (std::size_t c = 0; c < 3; ++c) CHECK(t(0, c) == 0.0f);
    for (std::size_t k = 1; k < 7; ++k)
      for (std::size_t c = 0; c < 3; ++c) CHECK(t(k, c) == (c == k % 3 ? 1.0f : 0.0f));
  }

  TEST_CASE("kind names round trip") {
    for (auto k : {EmbedderKind::kInternal, EmbedderKind::kOneHot, EmbedderKind::kIngested})
      CHECK(parse_embedder_kind(embedder_kind_name(k)) == k);
    expect_error(ErrorKind::kInvalidConfig, [] { (void)parse_embedder_kind("word2vec"); });
  }

  TEST_CASE("ingested matrices are bit-identical after a write/read") {
    auto dir = vftest::scratch_dir("ingest");
    std::mt19937_64 rng(9);
    auto t64 = vftest::random_tensor({5, 6}, rng, 3.0, false);
    EmbeddingMatrix m{Tensor::from_values({5, 6}, std::vector<float>(t64.values().begin(), t64.values().end())),
                      EmbeddingSource::kIngested};
    save_embeddings(dir / "m.dhmx", m);
    EmbeddingMatrix back = ingest_embeddings(dir / "m.dhmx", 6);
    CHECK(back.source == EmbeddingSource::kIngested);
    REQUIRE(back.values.shape() == m.values.shape());
    CHECK(std::memcmp(back.values.values().data(), m.values.values().data(), 30 * sizeof(float)) == 0);

    expect_error(ErrorKind::kShape, [&] { (void)ingest_embeddings(dir / "m.dhmx", 4); });
    expect_error(ErrorKind::kShape, [&] { (void)ingest_embeddings(dir / "m.dhmx", 0, 3); });
    io::MatrixContainer flat;
    flat.add("v", Tensor::from_values({4}, {1, 2, 3, 4}));
    flat.save(dir / "flat.dhmx");
    expect_error(ErrorKind::kShape, [&] { (void)ingest_embeddings(dir / "flat.dhmx"); });
    expect_error(ErrorKind::kIo, [&] { (void)ingest_embeddings(dir / "missing.dhmx"); });
  }
}
