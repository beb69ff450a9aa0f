#include <benchmark/benchmark.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "graphrank/comparison_graph.hpp"
#include "graphrank/estimator.hpp"
#include "graphrank/inference.hpp"
#include "graphrank/simulation.hpp"
#include "graphrank/spectral.hpp"

namespace {

using namespace graphrank;

// Four times the connectivity threshold 2 log K / K.
double sparse_p(std::size_t k) {
  const double kk = static_cast<double>(k);
  return std::min(1.0, 2.0 * std::log(kk) / kk * 4.0);
}

Topology er_topology(std::size_t k) {
  Rng rng = make_stream(1, {k});
  return generate_topology({TopologyKind::erdos_renyi, k, 1, sparse_p(k), false}, rng);
}

ComparisonGraph er_graph(std::size_t k) {
  const Topology t = er_topology(k);
  Rng rng = make_stream(2, {k});
  std::normal_distribution<double> normal;
  GraphBuilder b(k);
  for (const EdgeKey& e : t.edges) b.add(e.i, e.j, normal(rng));
  return b.build();
}

void BM_PinvRankOneShift(benchmark::State& state) {
  const Eigen::MatrixXd n = er_topology(static_cast<std::size_t>(state.range(0))).laplacian();
  for (auto _ : state) benchmark::DoNotOptimize(pinv_laplacian(n));
}

// Reference route: full eigendecomposition with the null eigenvalue dropped.
void BM_PinvEigen(benchmark::State& state) {
  const Eigen::MatrixXd n = er_topology(static_cast<std::size_t>(state.range(0))).laplacian();
  for (auto _ : state) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(n);
    Eigen::VectorXd inv = es.eigenvalues();
    for (auto& v : inv) v = v > 1e-9 ? 1.0 / v : 0.0;
    benchmark::DoNotOptimize(Eigen::MatrixXd(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose()));
  }
}

void BM_SpectralSummary(benchmark::State& state) {
  const Eigen::MatrixXd n = er_topology(static_cast<std::size_t>(state.range(0))).laplacian();
  for (auto _ : state) benchmark::DoNotOptimize(spectral_summary(n));
}

void BM_Fit(benchmark::State& state) {
  const ComparisonGraph g = er_graph(static_cast<std::size_t>(state.range(0)));
  const FitOptions opts{nullptr, VarianceDivisor::total_comparisons, false};
  for (auto _ : state) benchmark::DoNotOptimize(fit(g, Constraint::sum_zero(), opts));
}

void BM_FitAndTest(benchmark::State& state) {
  const ComparisonGraph g = er_graph(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const MeritFit f = fit(g);
    benchmark::DoNotOptimize(test_all_equal(f, g));
  }
}

}  // namespace

BENCHMARK(BM_PinvRankOneShift)->RangeMultiplier(2)->Range(32, 512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PinvEigen)->RangeMultiplier(2)->Range(32, 512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SpectralSummary)->RangeMultiplier(2)->Range(32, 512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Fit)->RangeMultiplier(2)->Range(32, 512)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FitAndTest)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
