#include <stdexcept>
#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "cid/fdvv.hpp"
#include "cid/policy.hpp"
#include "cid/user.hpp"

using namespace cid;
using namespace cid::user;

TEST_CASE("parameter layout") {
  PolicyArch arch;
  CHECK(arch.param_count() == (5 * 32 + 32) + (32 * 32 + 32) + (32 + 1) + 1);
  PolicyArch reduced{{1}};
  CHECK(reduced.param_count() == 9);  // eight network weights plus the log-std
  const auto p = PolicyParams::zeros(arch);
  CHECK(p.values.size() == static_cast<Eigen::Index>(arch.param_count()));
  CHECK(p.log_std() == -0.5);
}

TEST_CASE("zero weights give a zero mean") {
  const auto p = PolicyParams::zeros(PolicyArch{});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    ObsVector obs{u(rng), u(rng), u(rng), u(rng), u(rng)};
    CHECK(policy_mean(p, obs) == 0.0);
  }
}

TEST_CASE("action sampling") {
  const auto p = PolicyParams::random(PolicyArch{}, 5);
  const ObsVector obs{0.1, 0.2, 0.3, 0.0, 0.9};
  Rng a(77), b(77);
  const auto sa = policy_act(p, obs, a);
  const auto sb = policy_act(p, obs, b);
  CHECK(sa.raw == sb.raw);
  CHECK(sa.action == sb.action);
  const double sigma = std::exp(p.log_std());
  const double z = (sa.raw - sa.mean) / sigma;
  const double expected = -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(std::abs(sa.log_prob - expected) < 1e-10);
  CHECK(sa.action >= kMinAction);
  CHECK(sa.action <= kMaxAction);
  ObsVector bad = obs;
  bad[2] = std::nan("");
  CHECK_THROWS_AS(policy_act(p, bad, a), std::invalid_argument);
}

namespace {

std::vector<Trajectory> sample_batch(const PolicyParams& params, int episodes, std::uint64_t seed) {
  TaskSpec task;
  task.design.peak_force = 0.8;
  task.design.snap_ratio = 0.0;
  task.horizon = 120;
  const auto model = button::design_to_fdvv(task.design);
  std::vector<Trajectory> batch;
  for (int e = 0; e < episodes; ++e) batch.push_back(rollout(params, task, model, seed + e));
  return batch;
}

}  // namespace

TEST_CASE("policy gradient") {
  PolicyArch reduced{{1}};
  auto params = PolicyParams::random(reduced, 13);
  // Bias the output so that the sampled presses actually reach the button.
  params.values[7] = 0.9;

  SUBCASE("matches central finite differences of the surrogate") {
    const auto batch = sample_batch(params, 6, 200);
    const double b = 0.3;
    const auto g = policy_gradient(batch, params, 0.995, b);
    Eigen::VectorXd fd(g.size());
    const double h = 1e-4;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      auto up = params, down = params;
      up.values[i] += h;
      down.values[i] -= h;
      fd[i] = (surrogate_objective(batch, up, 0.995, b) - surrogate_objective(batch, down, 0.995, b)) / (2 * h);
    }
    CHECK((g - fd).norm() / fd.norm() < 1e-2);
  }
  SUBCASE("zero advantage gives an exactly zero gradient") {
    auto batch = sample_batch(params, 4, 300);
    for (auto& traj : batch) {
      for (auto& s : traj.steps) s.reward = 0.0;
    }
    const auto g = policy_gradient(batch, params, 0.995);
    CHECK(g.isZero(0.0));
  }
  SUBCASE("doubling rewards with a fixed baseline doubles the gradient") {
    auto batch = sample_batch(params, 4, 400);
    const auto g1 = policy_gradient(batch, params, 0.995, 0.0);
    for (auto& traj : batch) {
      for (auto& s : traj.steps) s.reward *= 2.0;
    }
    const auto g2 = policy_gradient(batch, params, 0.995, 0.0);
    CHECK((g2 - 2.0 * g1).norm() <= 1e-12 * g1.norm());
  }
  SUBCASE("empty batch") {
    CHECK_THROWS_AS(policy_gradient({}, params, 0.995), std::invalid_argument);
  }
}

TEST_CASE("returns to go") {
  Trajectory t;
  for (double r : {1.0, 2.0, 3.0}) t.steps.push_back({{}, 0.0, 0.0, 0.0, r});
  const auto g = returns_to_go(t, 0.5);
  REQUIRE(g.size() == 3);
  CHECK(g[2] == 3.0);
  CHECK(g[1] == 2.0 + 0.5 * 3.0);
  CHECK(g[0] == 1.0 + 0.5 * 2.0 + 0.25 * 3.0);
}
