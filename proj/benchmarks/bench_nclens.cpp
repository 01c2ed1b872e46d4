#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "nclens/ensemble.hpp"
#include "nclens/ncl.hpp"
#include "nclens/simplex_solver.hpp"
#include "nclens/stats.hpp"

using namespace nclens;

namespace {

// Noisy copies of a common signal, each with its own bias.
PredictionMatrix make_matrix(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector y(static_cast<Eigen::Index>(n));
  for (auto& v : y) v = 3.0 * g(rng);
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < m; ++j) {
    const double bias = 0.3 * g(rng);
    const double sd = 0.5 + 0.1 * static_cast<double>(j);
    for (std::size_t i = 0; i < n; ++i) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = y(static_cast<Eigen::Index>(i)) + bias + sd * g(rng);
    }
    names.push_back("m" + std::to_string(j));
  }
  return PredictionMatrix(values, y, names);
}

void BM_SimplexProjection(benchmark::State& state) {
  const auto m = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  Vector q(m);
  for (auto& v : q) v = g(rng);
  SolverProblem p;
  p.dim = static_cast<std::size_t>(m);
  p.objective = [q](const Vector& w) { return (w - q).squaredNorm(); };
  p.gradient = [q](const Vector& w) { return Vector(2.0 * (w - q)); };
  for (auto _ : state) benchmark::DoNotOptimize(solve(p));
}
BENCHMARK(BM_SimplexProjection)->Arg(5)->Arg(20)->Arg(50);

void BM_FitWeights(benchmark::State& state) {
  const auto preds = make_matrix(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 2);
  NclConfig c;
  c.lambda = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(fit_weights(preds, c));
}
BENCHMARK(BM_FitWeights)->Args({200, 6})->Args({2000, 6})->Args({2000, 20})->Unit(benchmark::kMicrosecond);

void BM_SearchLambda(benchmark::State& state) {
  const auto preds = make_matrix(500, 8, 3);
  NclConfig c;
  c.search.parallel = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(search_lambda(preds, c));
}
BENCHMARK(BM_SearchLambda)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Friedman(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix errors(state.range(0), 9);
  for (auto& v : errors.reshaped()) v = u(rng);
  for (auto _ : state) {
    const auto table = stats::rank_table(errors);
    benchmark::DoNotOptimize(stats::friedman_statistic(table));
  }
}
BENCHMARK(BM_Friedman)->Arg(20)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
