#include <benchmark/benchmark.h>

#include <random>

#include "edgemlp/edge_features.hpp"
#include "edgemlp/mlp.hpp"
#include "edgemlp/rng.hpp"
#include "edgemlp/tensor.hpp"

using namespace edgemlp;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  return rng.uniform(-1.0f, 1.0f, rows, cols);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(128, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 128 * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_Matmul)->Arg(256)->Arg(1024);

void BM_Featurize(benchmark::State& state) {
  std::mt19937_64 gen(3);
  std::vector<std::uint8_t> px(kImagePixels);
  for (auto& p : px) p = static_cast<std::uint8_t>(gen());
  std::vector<float> out(kFeatureDim);
  for (auto _ : state) {
    featurize_into(px, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Featurize);

void BM_ForwardEval(benchmark::State& state) {
  const Model m = init_model(MlpConfig::for_classes(10), 0);
  const Matrix x = random_matrix(static_cast<std::size_t>(state.range(0)), kFeatureDim, 4);
  for (auto _ : state) benchmark::DoNotOptimize(forward_eval(m, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardEval)->Arg(128)->Arg(1000);

void BM_TrainStep(benchmark::State& state) {
  Model m = init_model(MlpConfig::for_classes(10), 0);
  const Matrix x = random_matrix(128, kFeatureDim, 5);
  std::vector<std::uint8_t> labels(128);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint8_t>(i % 10);
  Rng rng(6);
  ForwardCache cache;
  for (auto _ : state) {
    const Matrix logits = forward_train(m, x, rng, cache);
    const auto loss = loss_softmax_xent(logits, labels);
    benchmark::DoNotOptimize(backward(m, cache, loss.dlogits));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_TrainStep);

}  // namespace

BENCHMARK_MAIN();
