// Property-based acceptance run. One PASS/FAIL line per criterion; exit
// status is nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "oracles.hpp"
#include "vulnformer/codegraph/cfg.hpp"
#include "vulnformer/codegraph/dfg.hpp"
#include "vulnformer/codegraph/dot.hpp"
#include "vulnformer/codegraph/syntax.hpp"
#include "vulnformer/error.hpp"
#include "vulnformer/harness/ablation.hpp"
#include "vulnformer/harness/alpaca.hpp"
#include "vulnformer/harness/synthetic.hpp"
#include "vulnformer/harness/trainer.hpp"
#include "vulnformer/io/container.hpp"
#include "vulnformer/model/checkpoint.hpp"
#include "vulnformer/numerics/layers.hpp"

namespace fs = std::filesystem;
namespace cg = vulnformer::codegraph;
namespace hx = vulnformer::harness;
namespace mx = vulnformer::model;
namespace nx = vulnformer::numerics;
using vftest::Tensor64;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t checkpoint_hash(const fs::path& dir) {
  std::string all;
  for (const char* f : {"model.dhmx", "config.json", "vocab.json"}) all += slurp(dir / f);
  return fnv1a(all);
}

mx::ModelConfig desk(std::size_t vocab) {
  mx::ModelConfig c;
  c.vocab_size = vocab;
  return c;
}

// ---- gradient fidelity ----

nx::ConformerBlockParams<double> random_block(std::size_t d, std::size_t ff, std::size_t k, std::mt19937_64& rng) {
  using vftest::random_tensor;
  const double s = 0.4;
  nx::ConformerBlockParams<double> p;
  p.ffn1 = {random_tensor({d, ff}, rng, s), random_tensor({ff}, rng, s), random_tensor({ff, d}, rng, s),
            random_tensor({d}, rng, s)};
  p.ffn2 = {random_tensor({d, ff}, rng, s), random_tensor({ff}, rng, s), random_tensor({ff, d}, rng, s),
            random_tensor({d}, rng, s)};
  p.attn = {random_tensor({d, d}, rng, s), random_tensor({d, d}, rng, s), random_tensor({d, d}, rng, s),
            random_tensor({d, d}, rng, s)};
  p.conv.kernel = k;
  p.conv.weight = random_tensor({k * d, d}, rng, s);
  p.conv.bias = random_tensor({d}, rng, s);
  p.conv.bn_gamma = random_tensor({d}, rng, s);
  p.conv.bn_beta = random_tensor({d}, rng, s);
  p.conv.bn_running_mean = Tensor64::zeros({d});
  p.conv.bn_running_var = Tensor64::full({d}, 1.0);
  p.norm_gamma = random_tensor({d}, rng, s);
  p.norm_beta = random_tensor({d}, rng, s);
  return p;
}

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  const std::size_t d = 8;
  auto block = random_block(d, 16, 3, rng);
  Tensor64 x = vftest::random_tensor({4, d}, rng);
  Tensor64 w = vftest::random_tensor({4, d}, rng, 1.0, false);
  nx::RowSegments seg = nx::single_segment(4);
  const std::span<const std::size_t> segs(seg);
  const nx::ForwardContext train{true, 0.0, nullptr};

  struct Check {
    std::string name;
    std::vector<std::pair<std::string, Tensor64>> leaves;
    std::function<Tensor64()> loss;
  };
  std::vector<Check> checks;
  for (auto scaling : {nx::AttentionScaling::kStandard, nx::AttentionScaling::kPlusOne}) {
    nx::AttentionConfig cfg{2, d, scaling};
    checks.push_back({"attention/" + std::string(nx::scaling_name(scaling)),
                      {{"x", x}, {"wq", block.attn.wq}, {"wk", block.attn.wk}, {"wv", block.attn.wv},
                       {"wo", block.attn.wo}},
                      [&, cfg] { return vftest::probe_loss(nx::multi_head_attention(x, block.attn, cfg, segs), w); }});
  }
  checks.push_back({"conv_module",
                    {{"x", x}, {"weight", block.conv.weight}, {"bias", block.conv.bias},
                     {"bn_gamma", block.conv.bn_gamma}, {"bn_beta", block.conv.bn_beta}},
                    [&] { return vftest::probe_loss(nx::conv_module(x, block.conv, segs, train), w); }});
  checks.push_back({"ffn",
                    {{"x", x}, {"w1", block.ffn1.w1}, {"b1", block.ffn1.b1}, {"w2", block.ffn1.w2},
                     {"b2", block.ffn1.b2}},
                    [&] { return vftest::probe_loss(nx::ffn(x, block.ffn1), w); }});
  for (auto mode : {nx::PositionMode::kMultiplicative, nx::PositionMode::kAdditive}) {
    checks.push_back({"positions/" + std::string(nx::position_mode_name(mode)),
                      {{"x", x}},
                      [&, mode] { return vftest::probe_loss(nx::apply_positions(x, segs, mode), w); }});
  }
  nx::AttentionConfig cfg{2, d, nx::AttentionScaling::kPlusOne};
  checks.push_back({"conformer_block",
                    {{"x", x},
                     {"ffn1.w1", block.ffn1.w1},
                     {"ffn1.b2", block.ffn1.b2},
                     {"ffn2.w1", block.ffn2.w1},
                     {"ffn2.w2", block.ffn2.w2},
                     {"attn.wq", block.attn.wq},
                     {"attn.wk", block.attn.wk},
                     {"attn.wv", block.attn.wv},
                     {"attn.wo", block.attn.wo},
                     {"conv.weight", block.conv.weight},
                     {"conv.bn_gamma", block.conv.bn_gamma},
                     {"norm.gamma", block.norm_gamma},
                     {"norm.beta", block.norm_beta}},
                    [&] { return vftest::probe_loss(nx::conformer_block(x, block, cfg, segs, train), w); }});

  double worst = 0.0;
  std::string worst_name;
  std::size_t checked = 0;
  bool ok = true;
  for (auto& c : checks) {
    auto r = vftest::gradcheck(c.leaves, c.loss, 1e-4);
    checked += r.checked;
    ok = ok && r.ok(1e-3);
    if (r.max_rel_error >= worst) {
      worst = r.max_rel_error;
      worst_name = c.name + " " + r.worst;
    }
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 60.0, std::to_string(checks.size()) + " layers, " + std::to_string(checked) +
                                 " entries, max rel err " + fmt("%.2e", worst) + " (" + worst_name + "), " +
                                 fmt("%.1f s", secs)};
}

// ---- attention algebra ----

// Row softmax in plain loops, then times V.
std::vector<double> reference_attention(const Tensor64& q, const Tensor64& k, const Tensor64& v, double scale) {
  const std::size_t lq = q.rows(), lk = k.rows(), dk = q.cols(), dv = v.cols();
  std::vector<double> out(lq * dv, 0.0);
  for (std::size_t i = 0; i < lq; ++i) {
    std::vector<double> s(lk);
    for (std::size_t j = 0; j < lk; ++j) {
      double dot = 0;
      for (std::size_t c = 0; c < dk; ++c) dot += q(i, c) * k(j, c);
      s[j] = dot * scale;
    }
    const double mx = *std::max_element(s.begin(), s.end());
    double z = 0;
    for (double& e : s) z += (e = std::exp(e - mx));
    for (std::size_t j = 0; j < lk; ++j)
      for (std::size_t c = 0; c < dv; ++c) out[i * dv + c] += s[j] / z * v(j, c);
  }
  return out;
}

Outcome attention_algebra() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> len(1, 12);
  double worst = 0.0;
  std::size_t draws = 0;
  for (std::size_t dk : {1u, 4u, 16u, 64u}) {
    const double root = std::sqrt(static_cast<double>(dk));
    for (int t = 0; t < 100; ++t, ++draws) {
      const std::size_t l = len(rng);
      Tensor64 q = vftest::random_tensor({l, dk}, rng, 1.0, false);
      Tensor64 k = vftest::random_tensor({l, dk}, rng, 1.0, false);
      Tensor64 v = vftest::random_tensor({l, 5}, rng, 1.0, false);
      Tensor64 got = nx::attention(q, k, v, nx::AttentionScaling::kPlusOne);
      // standard scores q.k / sqrt(dk), rescaled by sqrt(dk) / (1 + sqrt(dk))
      const auto want = reference_attention(q, k, v, (1.0 / root) * (root / (1.0 + root)));
      for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got.values()[i] - want[i]));
    }
  }
  return {worst <= 1e-6, std::to_string(draws) + " draws, max abs dev " + fmt("%.2e", worst)};
}

// ---- softmax ----

Outcome softmax_properties() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> width(1, 40);
  std::uniform_real_distribution<double> shift(-500.0, 500.0);
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int r = 0; r < 1000; ++r) {
    const std::size_t n = width(rng);
    Tensor64 x = vftest::random_tensor({1, n}, rng, 8.0, false);
    const double c = shift(rng);
    std::vector<double> moved(x.values().begin(), x.values().end());
    for (double& e : moved) e += c;
    Tensor64 y = nx::softmax_rows(x);
    Tensor64 y2 = nx::softmax_rows(Tensor64::from_values({1, n}, moved));
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) {
      s += y.values()[j];
      worst_shift = std::max(worst_shift, std::abs(y.values()[j] - y2.values()[j]));
    }
    worst_sum = std::max(worst_sum, std::abs(s - 1.0));
  }
  return {worst_sum <= 1e-6 && worst_shift <= 1e-6,
          "1000 rows, |sum-1| " + fmt("%.2e", worst_sum) + ", shift dev " + fmt("%.2e", worst_shift)};
}

// ---- sinusoidal table ----

Outcome sinusoidal_table() {
  bool ok = true;
  double worst = 0.0;
  for (auto [len, d] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 2}, {16, 8}, {128, 64}, {768, 112}}) {
    Tensor64 t = nx::sinusoidal_positions<double>(len, d);
    for (std::size_t i = 0; i < d / 2; ++i) {
      // even pairs start (sin, cos) = (0, 1); odd pairs (cos, sin) = (1, 0)
      const bool even = i % 2 == 0;
      ok = ok && t(0, 2 * i) == (even ? 0.0 : 1.0) && t(0, 2 * i + 1) == (even ? 1.0 : 0.0);
    }
    for (std::size_t p = 0; p < len; ++p)
      for (std::size_t i = 0; i < d / 2; ++i) {
        const double a = static_cast<double>(p) / std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d));
        const double first = i % 2 == 0 ? std::sin(a) : std::cos(a);
        const double second = i % 2 == 0 ? std::cos(a) : std::sin(a);
        worst = std::max({worst, std::abs(t(p, 2 * i) - first), std::abs(t(p, 2 * i + 1) - second)});
        ok = ok && std::abs(t(p, 2 * i)) <= 1.0 && std::abs(t(p, 2 * i + 1)) <= 1.0;
      }
  }
  return {ok && worst <= 1e-9, "pos-0 pattern exact, range [-1,1], closed-form dev " + fmt("%.2e", worst)};
}

// ---- graph oracles ----

Outcome graph_oracles() {
  const auto corpus = vftest::load_cfg_corpus();
  std::size_t cfg_ok = 0, dfg_ok = 0, max_nodes = 0;
  for (const auto& fn : corpus) {
    auto tree = cg::parse(fn.code);
    auto flow = cg::analyze_dataflow(tree);
    max_nodes = std::max(max_nodes, flow.cfg.graph.node_count());
    if (vftest::keyed_edges(flow.cfg.graph, fn.code) == fn.edges) ++cfg_ok;
    std::set<std::pair<int, int>> got;
    for (const auto& e : flow.graph.edges) got.insert({e.src, e.dst});
    if (got == vftest::enumerate_def_use(flow)) ++dfg_ok;
  }
  const bool ok = corpus.size() >= 20 && max_nodes <= 12 && cfg_ok == corpus.size() && dfg_ok == corpus.size();
  return {ok, std::to_string(corpus.size()) + " functions (max " + std::to_string(max_nodes) + " CFG nodes), CFG " +
                  std::to_string(cfg_ok) + " exact, DFG " + std::to_string(dfg_ok) + " exact"};
}

// ---- overfit ----

Outcome overfit() {
  const auto t0 = Clock::now();
  hx::DatasetSplit d = hx::marker_dataset({20, 17, 1.0, 0.0});
  auto vocab = vulnformer::embedding::Vocabulary::fit(d.train);
  auto config = desk(vocab.size());
  auto model = mx::ConformerModel::create(config, 17);
  auto split = hx::prepare_split(d.train, vocab, config.fusion, 1);
  hx::TrainConfig t;
  t.epochs = 200;
  t.seed = 17;
  t.patience = 10;  // F1 1.0 cannot improve; stop soon after reaching it
  t.keep_best = true;
  // validating on the training split scores it in eval mode every epoch
  hx::TrainHistory h = hx::train(model, split, &split, t);
  hx::EvalReport r = hx::evaluate(model, split);
  const double secs = seconds_since(t0);
  return {split.size() == 20 && r.accuracy == 1.0 && h.best_epoch && *h.best_epoch <= 200 && secs < 300.0,
          "train ACC " + fmt("%.4f", r.accuracy) + " (eval mode) first reached at epoch " +
              (h.best_epoch ? std::to_string(*h.best_epoch) : std::string("-")) + ", " + fmt("%.1f s", secs)};
}

// ---- separability ----

Outcome separability() {
  const auto t0 = Clock::now();
  hx::DatasetSplit d = hx::separability_dataset({2000, 1});
  auto vocab = vulnformer::embedding::Vocabulary::fit(d.train);
  hx::AblationOptions o;
  o.base = desk(vocab.size());
  o.train.epochs = 5;
  o.train.patience = 3;
  o.train.seed = 1;
  o.init_seed = 1;
  o.threads = 0;
  o.axes = {mx::AblationAxis::kBaseline, mx::AblationAxis::kWithoutCfg};
  auto runs = hx::run_ablation(d, vocab, o);
  const double base = runs.at(0).report.accuracy;
  const double no_cfg = runs.at(1).report.accuracy;
  std::printf("%s", hx::ablation_markdown(runs).c_str());
  return {base >= 0.95 && runs.size() == 2,
          "test ACC " + fmt("%.4f", base) + " (w/o-cfg " + fmt("%.4f", no_cfg) + ", reported only), " +
              fmt("%.0f s", seconds_since(t0))};
}

// ---- metrics ----

Outcome metric_oracle() {
  std::mt19937_64 rng(1000);
  std::uniform_int_distribution<std::size_t> size(1, 200);
  std::uniform_real_distribution<double> u(0.0, 1.0), thr(0.01, 0.99);
  std::bernoulli_distribution coin(0.5);
  std::size_t exact = 0;
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    std::vector<hx::Prediction> p(size(rng));
    // some probabilities sit exactly on the threshold
    const double t = s % 10 == 0 ? 0.5 : thr(rng);
    for (auto& e : p) e = {s % 10 == 0 && coin(rng) ? 0.5 : u(rng), coin(rng) ? 1 : 0};
    auto r = hx::compute_metrics(p, t);
    auto o = vftest::recount(p, t);
    if (r.tp == o.tp && r.fp == o.fp && r.tn == o.tn && r.fn == o.fn) ++exact;
    worst = std::max({worst, std::abs(r.accuracy - o.accuracy), std::abs(r.precision - o.precision),
                      std::abs(r.recall - o.recall), std::abs(r.f1 - o.f1)});
  }
  return {exact == 1000 && worst <= 1e-12,
          std::to_string(exact) + "/1000 exact counts, max ratio dev " + fmt("%.2e", worst)};
}

// ---- determinism ----

Outcome determinism() {
  const auto dir = vftest::scratch_dir("acceptance_determinism");
  hx::DatasetSplit d = hx::marker_dataset({40, 5});
  std::vector<std::uint64_t> hashes;
  std::vector<std::string> histories;
  for (int run = 0; run < 2; ++run) {
    auto vocab = vulnformer::embedding::Vocabulary::fit(d.train);
    auto config = desk(vocab.size());
    auto model = mx::ConformerModel::create(config, 9);
    auto tr = hx::prepare_split(d.train, vocab, config.fusion, run == 0 ? 1 : 0);
    auto va = hx::prepare_split(d.validation, vocab, config.fusion, run == 0 ? 1 : 0);
    hx::TrainConfig t;
    t.epochs = 3;
    t.seed = 9;
    auto h = hx::train(model, tr, &va, t);
    const auto out = dir / ("run" + std::to_string(run));
    mx::save_checkpoint(out, model, &vocab, {"baseline", h.total_steps, h.epochs.size(), t.threshold, {}});
    hashes.push_back(checkpoint_hash(out));
    histories.push_back(h.to_json().dump());
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hashes[0]));
  return {hashes[0] == hashes[1] && histories[0] == histories[1],
          std::string("checkpoint fnv1a ") + hex + (hashes[0] == hashes[1] ? " twice" : " vs different") +
              ", history " + (histories[0] == histories[1] ? "identical" : "differs")};
}

// ---- round trips ----

Outcome round_trips() {
  std::mt19937_64 rng(3);
  // container
  vulnformer::io::MatrixContainer c;
  Tensor64 a = vftest::random_tensor({7, 3}, rng, 100.0, false);
  std::vector<float> fv;
  for (int i = 0; i < 24; ++i) fv.push_back(static_cast<float>(a.values()[i % 21]) * 1e-3f);
  c.add(vulnformer::io::ContainerEntry::from_tensor("f64", a));
  c.add("f32", nx::Tensor::from_values({2, 3, 4}, fv));
  const auto bytes = c.serialize();
  auto back = vulnformer::io::MatrixContainer::deserialize(bytes);
  const auto a2 = back.at("f64").to_tensor64();
  const auto f2 = back.at("f32").to_tensor();
  bool container_ok = back.serialize() == bytes &&
                      std::equal(a.values().begin(), a.values().end(), a2.values().begin()) &&
                      std::equal(fv.begin(), fv.end(), f2.values().begin()) && f2.shape() == nx::Shape{2, 3, 4};

  // checkpoint
  const auto dir = vftest::scratch_dir("acceptance_roundtrip");
  hx::DatasetSplit d = hx::marker_dataset({12, 2});
  auto vocab = vulnformer::embedding::Vocabulary::fit(d.train);
  auto model = mx::ConformerModel::create(desk(vocab.size()), 4);
  mx::save_checkpoint(dir / "a", model, &vocab, {"baseline", 0, 0, 0.5, {}});
  auto loaded = mx::load_checkpoint(dir / "a");
  mx::save_checkpoint(dir / "b", loaded.model, &*loaded.vocab, loaded.meta);
  auto split = hx::prepare_split(d.train, vocab, model.config().fusion, 1);
  bool ckpt_ok = checkpoint_hash(dir / "a") == checkpoint_hash(dir / "b") &&
                 hx::predict_probabilities(model, split) == hx::predict_probabilities(loaded.model, split);

  // DOT
  std::size_t graphs = 0, dot_ok = 0;
  for (const auto& fn : vftest::load_cfg_corpus()) {
    auto tree = cg::parse(fn.code);
    auto flow = cg::analyze_dataflow(tree);
    const cg::CodeGraph ast = tree.graph();
    for (const cg::CodeGraph* g : std::initializer_list<const cg::CodeGraph*>{&ast, &flow.cfg.graph, &flow.graph}) {
      ++graphs;
      auto parsed = cg::parse_dot(cg::to_dot(*g));
      std::set<std::tuple<int, int, std::string>> e1, e2;
      for (const auto& e : g->edges) e1.insert({e.src, e.dst, e.tag});
      for (const auto& e : parsed.edges) e2.insert({e.src, e.dst, e.tag});
      if (e1 == e2) ++dot_ok;
    }
  }
  return {container_ok && ckpt_ok && dot_ok == graphs,
          std::string("container ") + (container_ok ? "lossless" : "LOSSY") + ", checkpoint " +
              (ckpt_ok ? "lossless" : "LOSSY") + ", DOT " + std::to_string(dot_ok) + "/" + std::to_string(graphs) +
              " edge sets"};
}

// ---- Alpaca ----

Outcome alpaca_export() {
  hx::DatasetSplit d = hx::marker_dataset({60, 8});
  // mix typed, untyped and clean records
  int k = 0;
  for (hx::Split s : hx::kAllSplits)
    for (auto& u : d.units(s))
      if (u.label == cg::Label::kVulnerable) u.vulnerability_type = k++ % 2 == 0 ? "CWE-242" : "";
  std::istringstream in(hx::export_alpaca(d));
  std::string line;
  std::size_t i = 0, matched = 0;
  std::vector<const hx::SourceUnit*> units;
  for (hx::Split s : hx::kAllSplits)
    for (const auto& u : d.units(s)) units.push_back(&u);
  std::size_t typed = 0, untyped = 0, clean = 0;
  while (std::getline(in, line) && i < units.size()) {
    const auto j = nlohmann::json::parse(line);
    const auto& u = *units[i++];
    std::string want;
    if (u.label == cg::Label::kClean) {
      want = "no vulnerability detected";
      ++clean;
    } else if (!u.vulnerability_type.empty()) {
      want = "Vulnerabilities Detected: " + u.vulnerability_type;
      ++typed;
    } else {
      want = "Vulnerabilities Detected: unspecified vulnerability";
      ++untyped;
    }
    const bool ok = j.size() == 3 && j["output"] == want && j["input"] == u.code &&
                    j["instruction"] ==
                        "Find potential security issues in the following code. If it has a vulnerability, output: "
                        "Vulnerabilities Detected: type of vulnerability. otherwise output<no vulnerability detected>:";
    matched += ok;
  }
  return {matched == units.size() && i == units.size() && typed > 0 && untyped > 0 && clean > 0,
          std::to_string(matched) + "/" + std::to_string(units.size()) + " records (" + std::to_string(typed) +
              " typed, " + std::to_string(untyped) + " untyped, " + std::to_string(clean) + " clean)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient-fidelity", gradient_fidelity}, {"attention-algebra", attention_algebra},
      {"softmax", softmax_properties},          {"sinusoidal-table", sinusoidal_table},
      {"graph-oracles", graph_oracles},         {"overfit", overfit},
      {"separability", separability},           {"metric-oracle", metric_oracle},
      {"determinism", determinism},             {"round-trips", round_trips},
      {"alpaca-export", alpaca_export},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
