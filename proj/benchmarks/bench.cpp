#include <benchmark/benchmark.h>

#include "sharp/sharp.hpp"

using namespace sharp;

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng = make_rng(seed, "bench");
  Tensor t(Shape{rows, cols});
  for (auto& v : t.storage()) v = uniform_open(rng);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = ad::Var::constant(uniform_matrix(256, n, 1));
  const auto b = ad::Var::constant(uniform_matrix(n, 512, 2));
  ad::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b).value().storage().data());
  state.SetItemsProcessed(state.iterations() * 256 * static_cast<std::int64_t>(n) * 512);
}
BENCHMARK(BM_Matmul)->Arg(256)->Arg(784);

void BM_TrainStep(benchmark::State& state) {
  const auto scheme = parse_scheme(state.range(0) == 0 ? "gaussian" : state.range(0) == 1 ? "gennorm:15" : "polygon:3");
  TrainConfig cfg;
  cfg.scheme = scheme;
  Model model(Architecture{784, {512, 128, 32}, 10}, scheme, 0);
  const Tensor x = uniform_matrix(256, 784, 3);
  std::vector<int> y(256);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1 + static_cast<int>(i % 10);
  auto params = model.params().all();
  Rng rng = make_rng(0, "bench-noise");
  for (auto _ : state) {
    const Tensor noise = draw_latent_noise(scheme, 256, rng);
    const auto loss = compute_loss(model, x, y, cfg, &noise);
    benchmark::DoNotOptimize(ad::gradients(loss.total, params));
  }
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Project(benchmark::State& state) {
  const Model model(Architecture{784, {512, 128, 32}, 10}, GaussianScheme{}, 0);
  const Tensor x = uniform_matrix(1000, 784, 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.project(x).storage().data());
}
BENCHMARK(BM_Project)->Unit(benchmark::kMillisecond);

void BM_Trustworthiness(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const Tensor x = uniform_matrix(m, 50, 5);
  const Tensor p = uniform_matrix(m, 2, 6);
  for (auto _ : state) benchmark::DoNotOptimize(trustworthiness(x, p, 7));
}
BENCHMARK(BM_Trustworthiness)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_DistanceConsistency(benchmark::State& state) {
  const Tensor p = uniform_matrix(5000, 2, 7);
  std::vector<int> y(5000);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1 + static_cast<int>(i % 10);
  for (auto _ : state) benchmark::DoNotOptimize(distance_consistency(p, y));
}
BENCHMARK(BM_DistanceConsistency)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
