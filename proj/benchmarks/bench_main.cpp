#include <benchmark/benchmark.h>

#include <random>

#include "urcd/measures.hpp"
#include "urcd/neural.hpp"
#include "urcd/training.hpp"

using namespace urcd;

namespace {

EmpiricalMeasure random_cloud(std::size_t k, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Point> pts(k, Point(dim));
  for (auto& p : pts) {
    for (double& v : p) v = g(rng);
  }
  return EmpiricalMeasure(std::move(pts));
}

void BM_W1Exact(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto mu = random_cloud(k, 2, 1), nu = random_cloud(k, 2, 2);
  for (auto _ : state) benchmark::DoNotOptimize(w1_exact(mu, nu).cost);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_W1Exact)->RangeMultiplier(2)->Range(8, 256)->Complexity();

void BM_W1OneD(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto mu = random_cloud(k, 1, 3), nu = random_cloud(k, 1, 4);
  for (auto _ : state) benchmark::DoNotOptimize(w1_1d(mu, nu));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_W1OneD)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_Sinkhorn(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto mu = random_cloud(k, 2, 5), nu = random_cloud(k, 2, 6);
  for (auto _ : state) benchmark::DoNotOptimize(w1_sinkhorn(mu, nu, 1e-2).cost);
}
BENCHMARK(BM_Sinkhorn)->RangeMultiplier(2)->Range(16, 128)->Unit(benchmark::kMillisecond);

void BM_MlpBackprop(benchmark::State& state) {
  Rng rng(7);
  const Mlp net({8, 64, 64, 10}, Activation::relu, rng);
  const auto batch = static_cast<Eigen::Index>(state.range(0));
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(8, batch);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(10, batch);
  for (Eigen::Index c = 0; c < batch; ++c) y(c % 10, c) = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(cross_entropy_grad(net, x, y).loss);
}
BENCHMARK(BM_MlpBackprop)->Arg(32)->Arg(128)->Arg(512);

void BM_TrainDnm(benchmark::State& state) {
  Rng rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DatasetEntry> entries;
  for (int i = 0; i < 100; ++i) {
    Point x{u(rng), u(rng)};
    entries.push_back({x, random_cloud(50, 1, 100 + i), 0});
  }
  const Dataset data = Dataset::with_leading_split(entries);
  TrainConfig cfg;
  cfg.n_atoms = static_cast<std::size_t>(state.range(0));
  cfg.epochs = 100;
  for (auto _ : state) benchmark::DoNotOptimize(train_dnm(data, cfg).log.train_accuracy);
}
BENCHMARK(BM_TrainDnm)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
