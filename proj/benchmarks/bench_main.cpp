// Microbenchmarks for the hot paths of an optimization iteration.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "cid/fdvv.hpp"
#include "cid/gp.hpp"
#include "cid/mobo.hpp"
#include "cid/pareto.hpp"
#include "cid/sim.hpp"

using namespace cid;

namespace {

std::vector<pareto::ObjectiveVector> front_points(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<pareto::ObjectiveVector> pts(n, pareto::ObjectiveVector(m));
  for (auto& p : pts)
    for (auto& v : p) v = u(rng);
  std::vector<pareto::ObjectiveVector> front;
  for (auto i : pareto::pareto_front(pts)) front.push_back(pts[i]);
  return front;
}

void BM_Hypervolume(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto pts = front_points(static_cast<std::size_t>(state.range(1)), m, 1);
  const std::vector<double> ref(m, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(pareto::hypervolume(pts, ref));
  state.counters["front"] = static_cast<double>(pts.size());
}
BENCHMARK(BM_Hypervolume)->Args({2, 200})->Args({3, 100})->Args({3, 400});

void BM_GpFit(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, 6);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < 6; ++j) x(i, j) = u(rng);
    y[i] = u(rng);
  }
  const auto spec = gp::default_kernel(6);
  for (auto _ : state) benchmark::DoNotOptimize(gp::GpModel::fit(x, y, spec));
}
BENCHMARK(BM_GpFit)->Arg(16)->Arg(48)->Arg(128);

void BM_Ehvi(benchmark::State& state) {
  const std::size_t m = 3;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(30, 6);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (int j = 0; j < 6; ++j) x(i, j) = u(rng);
  std::vector<gp::ObjectiveModel> models;
  for (std::size_t k = 0; k < m; ++k) {
    Eigen::VectorXd y(x.rows());
    for (auto& v : y) v = u(rng);
    models.push_back({gp::GpModel::fit(x, y, gp::default_kernel(6)), 0.0, 1.0});
  }
  const auto front = front_points(40, m, 4);
  const std::vector<double> ref(m, 1.2);
  const auto draws = mobo::ehvi_draws(m, static_cast<std::size_t>(state.range(0)), 5);
  const std::vector<double> candidate(6, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(mobo::ehvi_with_draws(models, candidate, front, ref, draws));
}
BENCHMARK(BM_Ehvi)->Arg(32)->Arg(128);

void BM_SimStep(benchmark::State& state) {
  const auto model = button::design_to_fdvv({});
  button::SimState s;
  double f = 0.0;
  for (auto _ : state) {
    f = f > 3.0 ? 0.0 : f + 0.01;
    s = button::step(model, s, f).state;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_SimStep);

}  // namespace

BENCHMARK_MAIN();
