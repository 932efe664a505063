#include <benchmark/benchmark.h>

#include <random>

#include "vulnformer/codegraph/cfg.hpp"
#include "vulnformer/codegraph/syntax.hpp"
#include "vulnformer/harness/synthetic.hpp"
#include "vulnformer/harness/trainer.hpp"
#include "vulnformer/numerics/layers.hpp"

namespace nx = vulnformer::numerics;
namespace hx = vulnformer::harness;
namespace mx = vulnformer::model;

namespace {

nx::Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> v(r * c);
  for (float& x : v) x = dist(rng);
  return nx::Tensor::from_values({r, c}, std::move(v));
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  auto a = random_matrix(n, n, rng), b = random_matrix(n, n, rng);
  nx::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(nx::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_Attention(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  const std::size_t d = 64;
  std::mt19937_64 rng(2);
  nx::AttentionParams<float> p{random_matrix(d, d, rng), random_matrix(d, d, rng), random_matrix(d, d, rng),
                               random_matrix(d, d, rng)};
  auto x = random_matrix(len, d, rng);
  auto seg = nx::single_segment(len);
  nx::AttentionConfig cfg{4, d, nx::AttentionScaling::kPlusOne};
  nx::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(nx::multi_head_attention(x, p, cfg, std::span<const std::size_t>(seg)));
}
BENCHMARK(BM_Attention)->Arg(32)->Arg(128);

// One optimizer step of the desk model on a batch of 8 generated functions.
void BM_ConformerTrainStep(benchmark::State& state) {
  hx::DatasetSplit d = hx::separability_dataset({16, 3, 1.0, 0.0});
  auto vocab = vulnformer::embedding::Vocabulary::fit(d.train);
  mx::ModelConfig config;
  config.vocab_size = vocab.size();
  auto model = mx::ConformerModel::create(config, 1);
  auto split = hx::prepare_split(d.train, vocab, config.fusion, 1);
  std::vector<const mx::SampleFeatures*> batch;
  for (std::size_t i = 0; i < 8; ++i) batch.push_back(&split.features[i]);
  std::vector<float> targets(split.labels.begin(), split.labels.begin() + 8);
  hx::Adam opt(model.store().trainable(), 1e-3);
  for (auto _ : state) {
    model.store().zero_grad();
    auto logits = model.forward_logits(batch, nx::ForwardContext{true, 0.0, nullptr});
    auto loss = nx::bce_with_logits(logits, std::span<const float>(targets));
    nx::backward(loss);
    opt.step();
  }
}
BENCHMARK(BM_ConformerTrainStep)->Unit(benchmark::kMillisecond);

void BM_BuildCfg(benchmark::State& state) {
  hx::DatasetSplit d = hx::separability_dataset({32, 4, 1.0, 0.0});
  std::vector<vulnformer::codegraph::SyntaxTree> trees;
  for (const auto& u : d.train) trees.push_back(vulnformer::codegraph::parse(u.code));
  for (auto _ : state)
    for (const auto& t : trees) benchmark::DoNotOptimize(vulnformer::codegraph::build_cfg(t));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trees.size()));
}
BENCHMARK(BM_BuildCfg);

void BM_Parse(benchmark::State& state) {
  hx::DatasetSplit d = hx::separability_dataset({32, 5, 1.0, 0.0});
  for (auto _ : state)
    for (const auto& u : d.train) benchmark::DoNotOptimize(vulnformer::codegraph::parse(u.code));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.train.size()));
}
BENCHMARK(BM_Parse);

}  // namespace

BENCHMARK_MAIN();
