#include <benchmark/benchmark.h>

#include "fedcluster/problems.hpp"
#include "fedcluster/threshold.hpp"
#include "fedcluster/trainers.hpp"

namespace {

using namespace fedcluster;

void BM_ThresholdUpdate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RngStream rng(1, {0, 0, purpose_tag(Purpose::kData)});
  std::vector<Vector> points;
  for (int i = 0; i < n; ++i) points.push_back(rng.normal_vector(10));
  const Vector v(10, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(threshold_update(points, v, 2.0));
  }
}
BENCHMARK(BM_ThresholdUpdate)->Arg(64)->Arg(256)->Arg(1024);

void BM_ThresholdClustering(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  RngStream rng(1, {0, 0, purpose_tag(Purpose::kData)});
  std::vector<Vector> points;
  for (int i = 0; i < n; ++i) points.push_back(rng.normal_vector(10, i % 4, 1.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_threshold_clustering(points, 4, maximin_inits(points, 4), 10,
                                                      PercentileRadius{20.0}));
  }
}
BENCHMARK(BM_ThresholdClustering)->Arg(64)->Arg(256);

void BM_FederatedClusteringRound(benchmark::State& state) {
  const ProblemInstance problem = make_synthetic_regression(4, 4, 10, 9, 1);
  TrainerConfig cfg;
  cfg.eta = 0.9 / problem.params.L;
  cfg.rounds = 1;
  cfg.batch_size = 2;
  cfg.clustering_rounds = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_federated_clustering(problem, cfg));
  }
}
BENCHMARK(BM_FederatedClusteringRound);

}  // namespace

BENCHMARK_MAIN();
