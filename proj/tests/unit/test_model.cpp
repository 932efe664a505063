#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "vulnformer/codegraph/graph.hpp"
#include "vulnformer/error.hpp"
#include "vulnformer/io/container.hpp"
#include "vulnformer/io/files.hpp"
#include "vulnformer/model/checkpoint.hpp"

using namespace vulnformer;
using namespace vulnformer::model;
using numerics::Tensor;
using numerics::Tensor64;

namespace {

template <typename F>
void expect_error(ErrorKind kind, F&& f) {
  try {
    f();
    FAIL("expected " << error_kind_name(kind));
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

ModelConfig desk(std::size_t vocab = 38) {
  ModelConfig c;
  c.vocab_size = vocab;
  return c;
}

ModelConfig tiny() {
  ModelConfig c;
  c.vocab_size = 20;
  c.conformer.num_blocks = 2;
  c.conformer.num_heads = 2;
  c.conformer.model_dim = 8;
  c.conformer.ffn_dim = 16;
  c.conformer.conv_kernel = 3;
  c.fusion.max_nodes = 12;
  c.fusion.node_dim = 4;
  c.fusion.cse_dim = 8;
  c.fusion.max_length = 32;
  return c;
}

embedding::Vocabulary tiny_vocab() {
  std::vector<codegraph::SourceUnit> corpus{
      {"a", "int f(int n) { int s = 0; while (n > 0) { s = s + n; n = n - 1; } return s; }"},
      {"b", "void g(char *p) { if (p) { p[0] = 1; } }"}};
  return embedding::Vocabulary::fit(corpus, {1, {}, false});
}

std::vector<SampleFeatures> tiny_batch(const ModelConfig& config, const embedding::Vocabulary& vocab) {
  std::vector<SampleFeatures> out;
  for (const char* code : {"int f(int n) { int s = 0; while (n > 0) { s = s + n; n = n - 1; } return s; }",
                           "void g(char *p) { if (p) { p[0] = 1; } }", "int h(void) { return 3; }"}) {
    out.push_back(extract_features({"x", code}, vocab, config.fusion));
  }
  return out;
}

std::vector<const SampleFeatures*> pointers(const std::vector<SampleFeatures>& v) {
  std::vector<const SampleFeatures*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("json round trip keeps every field") {
    ModelConfig c = tiny();
    c.conformer.attention_scaling = numerics::AttentionScaling::kSoftmaxOne;
    c.conformer.position_mode = numerics::PositionMode::kAdditive;
    c.conformer.conformer_blocks = false;
    c.fusion.use_dfg = false;
    c.fusion.pooling = GraphPooling::kZeroPad;
    c.fusion.embedder = embedding::EmbedderKind::kOneHot;
    auto j = to_json(c);
    CHECK(to_json(model_config_from_json(j)) == j);
    CHECK(j["conformer"]["block_type"] == "ffn_stack");
  }

  TEST_CASE("missing keys keep defaults, bad values are rejected") {
    ModelConfig c = model_config_from_json(nlohmann::json::object());
    CHECK(to_json(c) == to_json(ModelConfig{}));
    expect_error(ErrorKind::kInvalidConfig,
                 [] { (void)model_config_from_json({{"conformer", {{"attention_scaling", "tiny"}}}}); });
  }

  TEST_CASE("validation") {
    ModelConfig c = tiny();
    c.conformer.num_heads = 3;
    expect_error(ErrorKind::kInvalidConfig, [&] { c.validate(); });
    c = tiny();
    c.conformer.conv_kernel = 4;
    expect_error(ErrorKind::kInvalidConfig, [&] { c.validate(); });
    c = tiny();
    c.fusion.max_length = 769;
    expect_error(ErrorKind::kInvalidConfig, [&] { c.validate(); });
    c = tiny();
    c.fusion.use_cse = false;
    c.fusion.use_ast = c.fusion.use_cfg = c.fusion.use_dfg = false;
    expect_error(ErrorKind::kInvalidConfig, [&] { c.validate(); });
    c = tiny();
    c.fusion.cse_dim = 7;
    expect_error(ErrorKind::kOddDimension, [&] { c.validate(); });
  }

  TEST_CASE("ablation axes flip exactly one switch") {
    const ModelConfig base = desk();
    CHECK(all_ablation_axes().size() == 7);
    for (auto axis : all_ablation_axes()) {
      CAPTURE(ablation_name(axis));
      CHECK(parse_ablation(ablation_name(axis)) == axis);
      auto diff = nlohmann::json::diff(to_json(base), to_json(apply_ablation(base, axis)));
      CHECK(diff.size() == (axis == AblationAxis::kBaseline ? 0u : 1u));
    }
    CHECK_FALSE(apply_ablation(base, AblationAxis::kWithoutCfg).fusion.use_cfg);
    CHECK(apply_ablation(base, AblationAxis::kWithoutAttentionModified).conformer.attention_scaling ==
          numerics::AttentionScaling::kStandard);
    expect_error(ErrorKind::kInvalidConfig, [] { (void)parse_ablation("w/o-everything"); });
  }
}

TEST_SUITE("parameters") {
  TEST_CASE("desk default matches the closed-form count") {
    ConformerModel m(desk());
    // 38*64 + 3*128*16 + (112*64 + 64) + 4*78528 + (64*32 + 32 + 32 + 1)
    CHECK(m.parameter_count() == 332033);
    CHECK(vftest::closed_form_parameter_count(desk()) == 332033);
  }

  TEST_CASE("every ablation matches the closed form") {
    for (auto axis : all_ablation_axes()) {
      CAPTURE(ablation_name(axis));
      ModelConfig c = apply_ablation(desk(), axis);
      CHECK(ConformerModel(c).parameter_count() == vftest::closed_form_parameter_count(c));
    }
  }

  TEST_CASE("input width shrinks by one node block per disabled graph") {
    ModelConfig c = desk();
    const std::size_t full = c.fusion.input_width();
    for (auto axis : {AblationAxis::kWithoutAst, AblationAxis::kWithoutCfg, AblationAxis::kWithoutDfg})
      CHECK(apply_ablation(c, axis).fusion.input_width() == full - c.fusion.node_dim);
    c.fusion.use_ast = c.fusion.use_cfg = c.fusion.use_dfg = false;
    CHECK(c.fusion.input_width() == c.fusion.cse_dim);
    ConformerModel m(c);
    CHECK(m.store().get("input.weight").shape() == numerics::Shape{c.fusion.cse_dim, c.conformer.model_dim});
    CHECK(m.parameter_count() == vftest::closed_form_parameter_count(c));
  }

  TEST_CASE("buffers are not parameters") {
    ConformerModel m(tiny());
    CHECK(m.store().buffers().size() == 2 * tiny().conformer.num_blocks);
    std::size_t from_entries = 0;
    for (const auto& e : m.store().parameters()) from_entries += e.tensor.size();
    CHECK(from_entries == m.parameter_count());
  }
}

TEST_SUITE("features") {
  TEST_CASE("adaptive pooling rows average their node windows") {
    Tensor p = pooling_matrix(2, 5, GraphPooling::kAdaptiveMean);
    // row 0: nodes [0, 3), row 1: nodes [2, 5)
    std::vector<float> want{1.f / 3, 1.f / 3, 1.f / 3, 0, 0, 0, 0, 1.f / 3, 1.f / 3, 1.f / 3};
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(p.values()[i] == doctest::Approx(want[i]));
    Tensor z = pooling_matrix(3, 2, GraphPooling::kZeroPad);
    std::vector<float> zw{1, 0, 0, 1, 0, 0};
    CHECK(std::vector<float>(z.values().begin(), z.values().end()) == zw);
  }

  TEST_CASE("mix equals pooling times adjacency") {
    codegraph::AdjacencyMatrix a{codegraph::GraphKind::kCfg, 3, 3, false, {0, 1, 0, 0, 0, 1, 1, 0, 0}};
    ModelConfig c = tiny();
    SampleFeatures f = features_from_parts({2, 3, 4, 5}, std::nullopt, {nullptr, &a, nullptr}, c.fusion);
    CHECK(f.length == 4);
    const auto& mix = f.graphs[1].mix;
    REQUIRE(mix.shape() == numerics::Shape{4, 3});
    Tensor p = pooling_matrix(4, 3, c.fusion.pooling);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t col = 0; col < 3; ++col) {
        float s = 0;
        for (std::size_t k = 0; k < 3; ++k) s += p(r, k) * float(a.at(k, col));
        CHECK(mix(r, col) == doctest::Approx(s));
      }
    CHECK(f.graphs[0].nodes == 0);
  }

  TEST_CASE("unparseable code still yields a usable sample") {
    auto vocab = tiny_vocab();
    SampleFeatures f = extract_features({"bad", "@@@ ### $$$"}, vocab, tiny().fusion);
    CHECK_FALSE(f.parsed);
    CHECK_FALSE(f.parse_error.empty());
    CHECK(f.length >= 1);
  }
}

TEST_SUITE("model") {
  TEST_CASE("predictions are probabilities and deterministic per seed") {
    auto vocab = tiny_vocab();
    ModelConfig c = tiny();
    c.vocab_size = vocab.size();
    auto batch = tiny_batch(c, vocab);
    auto ptrs = pointers(batch);
    ConformerModel a = ConformerModel::create(c, 11), b = ConformerModel::create(c, 11),
                   other = ConformerModel::create(c, 12);
    auto pa = a.predict(ptrs), pb = b.predict(ptrs), po = other.predict(ptrs);
    REQUIRE(pa.size() == 3);
    for (double p : pa) CHECK((p > 0.0 && p < 1.0));
    CHECK(pa == pb);
    CHECK(pa != po);
    CHECK(a.predict_one(batch[1]) == doctest::Approx(pa[1]).epsilon(1e-5));
  }

  TEST_CASE("a sample's prediction does not depend on its batch mates") {
    auto vocab = tiny_vocab();
    ModelConfig c = tiny();
    c.vocab_size = vocab.size();
    auto batch = tiny_batch(c, vocab);
    ConformerModel m = ConformerModel::create(c, 3);
    auto all = m.predict(pointers(batch));
    for (std::size_t i = 0; i < batch.size(); ++i) CHECK(m.predict_one(batch[i]) == doctest::Approx(all[i]).epsilon(1e-5));
  }

  TEST_CASE("logits backpropagate into every trainable parameter") {
    auto vocab = tiny_vocab();
    ModelConfig c = tiny();
    c.vocab_size = vocab.size();
    auto batch = tiny_batch(c, vocab);
    ConformerModel m = ConformerModel::create(c, 5);
    auto ptrs = pointers(batch);
    Tensor logits = m.forward_logits(ptrs, numerics::ForwardContext{true, 0.0, nullptr});
    CHECK(logits.shape() == numerics::Shape{3, 1});
    auto leaves = m.store().trainable();
    numerics::backward(numerics::sum(logits), std::span<Tensor>(leaves));
    std::size_t touched = 0;
    for (const auto& t : leaves)
      touched += std::any_of(t.grad().begin(), t.grad().end(), [](float g) { return g != 0.0f; });
    // PAD/UNK rows aside, nearly every tensor sees gradient
    CHECK(touched >= leaves.size() - 2);
  }

  TEST_CASE("clone is independent") {
    ConformerModel m = ConformerModel::create(tiny(), 1);
    ConformerModel copy = m.clone();
    Tensor w = copy.store().get("input.weight");
    w.mutable_values()[0] += 1.0f;
    CHECK(m.store().get("input.weight").values()[0] != w.values()[0]);
    copy.copy_values_from(m);
    CHECK(copy.store().get("input.weight").values()[0] == m.store().get("input.weight").values()[0]);
  }
}

TEST_SUITE("checkpoint") {
  TEST_CASE("save/load round trip reproduces predictions and bytes") {
    auto vocab = tiny_vocab();
    ModelConfig c = tiny();
    c.vocab_size = vocab.size();
    ConformerModel m = ConformerModel::create(c, 21);
    auto dir = vftest::scratch_dir("ckpt");
    CheckpointMeta meta{"w/o-dfg", 17, 3, 0.4, {{"seed", 21}}};
    save_checkpoint(dir / "a", m, &vocab, meta);
    Checkpoint back = load_checkpoint(dir / "a");
    CHECK(back.meta.ablation == "w/o-dfg");
    CHECK(back.meta.trained_steps == 17);
    CHECK(back.meta.threshold == doctest::Approx(0.4));
    CHECK(back.meta.extra["seed"] == 21);
    REQUIRE(back.vocab.has_value());
    CHECK(*back.vocab == vocab);
    auto batch = tiny_batch(c, vocab);
    CHECK(back.model.predict(pointers(batch)) == m.predict(pointers(batch)));
    save_checkpoint(dir / "b", back.model, &*back.vocab, back.meta);
    for (const char* f : {"model.dhmx", "config.json", "vocab.json"}) CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }

  TEST_CASE("incompatible checkpoints are named as such") {
    auto vocab = tiny_vocab();
    ModelConfig c = tiny();
    c.vocab_size = vocab.size();
    ConformerModel m = ConformerModel::create(c, 2);
    auto root = vftest::scratch_dir("ckpt_bad");
    save_checkpoint(root / "ok", m, &vocab, {});

    expect_error(ErrorKind::kIo, [&] { (void)load_checkpoint(root / "missing"); });

    std::filesystem::copy(root / "ok", root / "version");
    auto j = io::read_json(root / "version" / "config.json");
    j["version"] = 99;
    io::write_json(root / "version" / "config.json", j);
    expect_error(ErrorKind::kIncompatibleCheckpoint, [&] { (void)load_checkpoint(root / "version"); });

    std::filesystem::copy(root / "ok", root / "shape");
    j = io::read_json(root / "shape" / "config.json");
    j["model"]["conformer"]["model_dim"] = 16;
    io::write_json(root / "shape" / "config.json", j);
    expect_error(ErrorKind::kIncompatibleCheckpoint, [&] { (void)load_checkpoint(root / "shape"); });

    std::filesystem::copy(root / "ok", root / "novocab");
    std::filesystem::remove(root / "novocab" / "vocab.json");
    expect_error(ErrorKind::kIncompatibleCheckpoint, [&] { (void)load_checkpoint(root / "novocab"); });

    std::filesystem::copy(root / "ok", root / "extra");
    auto archive = io::MatrixContainer::load(root / "extra" / "model.dhmx");
    archive.add("param/stray", Tensor::zeros({2}));
    archive.save(root / "extra" / "model.dhmx");
    expect_error(ErrorKind::kIncompatibleCheckpoint, [&] { (void)load_checkpoint(root / "extra"); });
  }
}

TEST_SUITE("container") {
  TEST_CASE("f32 and f64 entries round trip bit for bit") {
    std::mt19937_64 rng(8);
    Tensor64 d = vftest::random_tensor({3, 5}, rng, 10.0, false);
    std::vector<float> fv;
    for (double v : d.values()) fv.push_back(static_cast<float>(v));
    Tensor f = Tensor::from_values({5, 3}, fv);
    io::MatrixContainer c;
    c.add(io::ContainerEntry::from_tensor("double", d));
    c.add("float", f);
    auto bytes = c.serialize();
    auto back = io::MatrixContainer::deserialize(bytes);
    REQUIRE(back.size() == 2);
    CHECK(back.named());
    CHECK(back.at("double").dtype() == io::DType::kF64);
    CHECK(back.at("float").dtype() == io::DType::kF32);
    CHECK(back.at("double").shape == d.shape());
    Tensor64 d2 = back.at("double").to_tensor64();
    CHECK(std::memcmp(d2.values().data(), d.values().data(), d.size() * sizeof(double)) == 0);
    Tensor f2 = back.at("float").to_tensor();
    CHECK(std::memcmp(f2.values().data(), f.values().data(), f.size() * sizeof(float)) == 0);
    CHECK(back.serialize() == bytes);
  }

  TEST_CASE("header layout") {
    io::MatrixContainer c;
    c.add("m", Tensor::from_values({1, 2}, {1.0f, 2.0f}));
    auto b = c.serialize();
    REQUIRE(b.size() == 4 + 2 + 2 + 4 + 2 + 1 + 1 + 1 + 8 + 8);
    CHECK(std::string(b.begin(), b.begin() + 4) == "DHMX");
    CHECK(b[4] == 1);
    CHECK(b[6] == 1);  // named
    CHECK(b[8] == 1);  // count
  }

  TEST_CASE("malformed containers") {
    io::MatrixContainer c;
    c.add("m", Tensor::from_values({2}, {1.0f, 2.0f}));
    expect_error(ErrorKind::kFormat, [&] { c.add("m", Tensor::zeros({1})); });
    auto b = c.serialize();
    auto cut = std::vector<std::uint8_t>(b.begin(), b.end() - 3);
    expect_error(ErrorKind::kFormat, [&] { (void)io::MatrixContainer::deserialize(cut); });
    b[0] = 'X';
    expect_error(ErrorKind::kFormat, [&] { (void)io::MatrixContainer::deserialize(b); });
    expect_error(ErrorKind::kFormat, [&] { (void)c.at("absent"); });
  }
}
