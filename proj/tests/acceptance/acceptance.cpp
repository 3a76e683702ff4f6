// Acceptance suite: one pass/fail line per criterion, with the measured
// numbers and the wall time against its budget.
//
//   cid_acceptance            run every criterion
//   cid_acceptance 4 9        run a subset
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cid/bspline.hpp"
#include "cid/config.hpp"
#include "cid/fdvv.hpp"
#include "cid/gp.hpp"
#include "cid/mobo.hpp"
#include "cid/orchestrator.hpp"
#include "cid/pareto.hpp"
#include "cid/problems.hpp"
#include "cid/serialize.hpp"
#include "cid/signal.hpp"
#include "cid/sim.hpp"
#include "cid/user.hpp"
#include "oracles.hpp"

using namespace cid;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> check;
};

// ---------------------------------------------------------------------------
// 1. GP posterior against a dense solve.

Outcome gp_oracle() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> nd(1, 20), dd(1, 4);
  double worst_mean = 0.0, worst_var = 0.0, worst_interp = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = nd(rng), d = dd(rng);
    gp::KernelSpec spec;
    spec.family = trial % 2 ? gp::KernelFamily::kSquaredExponential : gp::KernelFamily::kMatern52;
    spec.signal_variance = 0.5 + 1.5 * u(rng);
    spec.noise_variance = 1e-4 + 1e-2 * u(rng);
    for (int j = 0; j < d; ++j) spec.lengthscales.push_back(0.1 + 0.9 * u(rng));
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = u(rng);
      y[i] = 2.0 * u(rng) - 1.0;
    }
    const auto model = gp::GpModel::fit(x, y, spec);
    for (int q = 0; q < 10; ++q) {
      std::vector<double> query(d);
      for (auto& v : query) v = u(rng);
      const auto got = model.predict(query);
      const auto want = oracle::dense_posterior(spec, x, y, query);
      worst_mean = std::max(worst_mean, std::abs(got.mean - want.mean));
      worst_var = std::max(worst_var, std::abs(got.variance - std::max(0.0, want.variance)));
    }
  }

  // Noise-free limit. The posterior mean only interpolates when every
  // eigenvalue of K dwarfs the noise: a component with eigenvalue lambda is
  // shrunk by sigma^2 / (lambda + sigma^2) even in exact arithmetic. Problems
  // are drawn at random and kept when lambda_min(K) >= 1e-3, which bounds
  // that shrinkage by 1e-7.
  int accepted = 0, drawn = 0;
  while (accepted < 100 && drawn < 100000) {
    ++drawn;
    const int n = nd(rng), d = dd(rng);
    gp::KernelSpec spec;
    spec.family = drawn % 2 ? gp::KernelFamily::kSquaredExponential : gp::KernelFamily::kMatern52;
    spec.signal_variance = 0.5 + 1.5 * u(rng);
    spec.noise_variance = 1e-10;
    for (int j = 0; j < d; ++j) spec.lengthscales.push_back(0.1 + 0.9 * u(rng));
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = u(rng);
      y[i] = 2.0 * u(rng) - 1.0;
    }
    // Row-major copy so each design point is a contiguous span.
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = x;
    const auto point = [&](int i) { return std::span<const double>(rows.data() + i * d, static_cast<std::size_t>(d)); };
    Eigen::MatrixXd k(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) k(a, b) = oracle::kernel(spec, point(a), point(b));
    if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k, Eigen::EigenvaluesOnly).eigenvalues()[0] < 1e-3) continue;
    ++accepted;
    const auto interp = gp::GpModel::fit(x, y, spec);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd xi = x.row(i).transpose();
      const auto p = interp.predict({xi.data(), static_cast<std::size_t>(d)});
      worst_interp = std::max(worst_interp, std::abs(p.mean - y[i]));
    }
  }
  return {worst_mean < 1e-8 && worst_var < 1e-8 && accepted == 100 && worst_interp < 1e-6,
          fmt::format("100 problems: max |mean err| {:.2e}, max |var err| {:.2e} (tol 1e-8); noise 1e-10 on {} "
                      "problems with lambda_min(K) >= 1e-3 ({} drawn): max interpolation err {:.2e} (tol 1e-6)",
                      worst_mean, worst_var, accepted, drawn, worst_interp)};
}

// ---------------------------------------------------------------------------
// 2. Exact hypervolume against grid inclusion.

Outcome hypervolume_correctness() {
  const std::vector<double> ref2{1.0, 1.0};
  bool hand = pareto::hypervolume({}, ref2) == 0.0 &&
              std::abs(pareto::hypervolume({{0.0, 0.0}}, ref2) - 1.0) < 1e-12 &&
              std::abs(pareto::hypervolume({{0.2, 0.8}, {0.5, 0.5}, {0.8, 0.2}}, ref2) - 0.37) < 1e-12;

  std::mt19937_64 rng(2002);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 12);
  double worst2 = 0.0, worst3 = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = trial % 2 ? 3 : 2;
    // 10^6 cells either way: 1000^2 in two objectives, 100^3 in three. A
    // 100-cell axis resolves continuous 3-D sets only to about 1e-2, so the
    // 3-D points sit on the grid lattice, where cell-centre inclusion is exact.
    const int cells = m == 2 ? 1000 : 100;
    std::vector<pareto::ObjectiveVector> pts(count(rng), pareto::ObjectiveVector(m));
    for (auto& p : pts)
      for (auto& v : p) v = m == 2 ? u(rng) : std::floor(u(rng) * cells) / cells;
    const std::vector<double> ref(m, 1.0);
    const double exact = pareto::hypervolume(pts, ref);
    const double grid = oracle::grid_hypervolume(pts, ref, cells);
    (m == 2 ? worst2 : worst3) = std::max(m == 2 ? worst2 : worst3, std::abs(exact - grid));
  }
  return {hand && worst2 < 1e-3 && worst3 < 1e-3,
          fmt::format("hand cases {}; max |exact - grid| {:.2e} (2-D), {:.2e} (3-D, lattice points), tol 1e-3",
                      hand ? "ok" : "WRONG", worst2, worst3)};
}

// ---------------------------------------------------------------------------
// 3. Pareto filter against the pairwise scan.

Outcome pareto_correctness() {
  std::mt19937_64 rng(3003);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> nd(1, 200), md(2, 4);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = nd(rng), m = md(rng);
    // Every other set is coarsely quantized to exercise ties and duplicates.
    const bool coarse = trial % 2 == 1;
    std::vector<pareto::ObjectiveVector> pts(n, pareto::ObjectiveVector(m));
    for (auto& p : pts)
      for (auto& v : p) v = coarse ? std::floor(u(rng) * 8.0) / 8.0 : u(rng);
    mismatches += pareto::pareto_front(pts) != oracle::brute_force_front(pts);
  }
  return {mismatches == 0, fmt::format("{} of 1000 sets differ from the O(n^2) filter", mismatches)};
}

// ---------------------------------------------------------------------------
// 4. Optimizer sample efficiency on synthetic problems.

CidConfig bench_config(problems::ProblemId id, int budget, std::uint64_t seed, std::vector<double> ref,
                       int scan_count) {
  CidConfig c;
  c.objectives.provider = ProviderKind::kSynthetic;
  c.objectives.problem = id;
  c.optimizer.initial_designs = 8;
  c.optimizer.scan_count = scan_count;
  c.optimizer.reference = std::move(ref);
  c.run.budget = budget;
  c.run.seed = seed;
  return c;
}

Outcome mobo_efficiency() {
  const std::vector<double> ref_s{4.0, 4.0};
  const std::vector<double> ref_z{1.1, 1.1};
  double schaffer_sum = 0.0, zdt_sum = 0.0;
  int beats_random = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto config = bench_config(problems::ProblemId::kSchaffer, 40, seed, ref_s, 512);
    const auto provider = orchestrator::make_synthetic_provider(config);
    const auto& problem = static_cast<const orchestrator::SyntheticProvider&>(*provider).problem();
    const auto result = orchestrator::run(config, *provider);
    const double hv = pareto::hypervolume(result.archive.objectives(), ref_s);
    schaffer_sum += hv / problem.true_front_hypervolume(ref_s);

    // Random search with the same number of evaluations.
    std::mt19937_64 rng(derive_seed(seed, {999}));
    std::uniform_real_distribution<double> x(problem.bounds.lower[0], problem.bounds.upper[0]);
    std::vector<pareto::ObjectiveVector> random_obs;
    for (std::size_t i = 0; i < result.state.records.size(); ++i) {
      const std::vector<double> design{x(rng)};
      random_obs.push_back(problem.evaluate(design));
    }
    beats_random += hv > pareto::hypervolume(random_obs, ref_s);
  }
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto config = bench_config(problems::ProblemId::kZdt1, 60, seed, ref_z, 8192);
    const auto provider = orchestrator::make_synthetic_provider(config);
    const auto& problem = static_cast<const orchestrator::SyntheticProvider&>(*provider).problem();
    const auto result = orchestrator::run(config, *provider);
    const double ratio =
        pareto::hypervolume(result.archive.objectives(), ref_z) / problem.true_front_hypervolume(ref_z);
    zdt_sum += ratio;
    per_seed += fmt::format("{}{:.3f}", seed == 1 ? "" : " ", ratio);
  }
  const double schaffer = schaffer_sum / 10.0, zdt = zdt_sum / 10.0;
  return {schaffer >= 0.95 && beats_random >= 9 && zdt >= 0.90,
          fmt::format("schaffer mean HV ratio {:.4f} (>= 0.95), beats random search in {}/10 (>= 9); "
                      "zdt1 d=6 mean HV ratio {:.4f} (>= 0.90) [{}]",
                      schaffer, beats_random, zdt, per_seed)};
}

// ---------------------------------------------------------------------------
// 5. Knot-count recovery with BIC.

Outcome bspline_recovery() {
  std::vector<int> candidates;
  for (int k = 0; k <= 20; ++k) candidates.push_back(k);
  int in_range = 0, accurate = 0;
  double worst_deboor = 0.0, worst_rmse = 0.0;
  std::string knots;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    std::normal_distribution<double> normal(0.0, 1.0), noise(0.0, 0.01);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto kv = button::BSpline::clamped_uniform_knots(0.0, 1.0, 3, 8);
    std::vector<double> coef(kv.size() - 4);
    for (auto& c : coef) c = normal(rng);
    const button::BSpline truth(3, kv, coef);
    std::vector<double> x(400), y(400);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = u(rng);
      y[i] = truth(x[i]) + noise(rng);
    }
    const auto fit = button::fit_bspline_bic(x, y, 3, candidates, 0.0, 1.0);
    const double rmse = std::sqrt(fit.rss / static_cast<double>(x.size()));
    in_range += fit.interior_knots >= 6 && fit.interior_knots <= 10;
    accurate += rmse < 0.02;
    worst_rmse = std::max(worst_rmse, rmse);
    knots += fmt::format("{}{}", seed == 0 ? "" : ",", fit.interior_knots);
    for (int i = 0; i < 50; ++i) {
      const double q = u(rng);
      worst_deboor = std::max(worst_deboor, std::abs(fit.spline(q) - oracle::spline_by_basis(
                                                                          fit.spline.knots(),
                                                                          fit.spline.coefficients(), 3, q)));
    }
  }
  return {in_range == 20 && accurate == 20 && worst_deboor < 1e-10,
          fmt::format("knots in [6,10] for {}/20 seeds ({}); RMSE < 0.02 for {}/20 (max {:.4f}); "
                      "max |spline - de Boor| {:.2e} (tol 1e-10)",
                      in_range, knots, accurate, worst_rmse, worst_deboor)};
}

// ---------------------------------------------------------------------------
// 6. Press dynamics.

Outcome simulator_physics() {
  // Linear spring, 1 N/mm, critical damping, constant 1 N.
  const double k = 1.0, mass = 0.005;
  const double c = 2.0 * std::sqrt(1000.0 * k * mass) / 1000.0;
  button::FdvvModel spring;
  const button::BSpline line(1, {0.0, 0.0, 3.0, 3.0}, {0.0, 3.0 * k});
  spring.velocity_levels = {10.0, 300.0};
  spring.fd_curves = {line, line};
  spring.travel = 3.0;
  spring.activation_disp = 2.5;
  spring.release_disp = 1.75;
  spring.damping = c;
  const int steps = 200;
  const auto trace = button::simulate_profile(spring, std::vector<double>(steps, 1.0));
  const auto accel = [&](double x, double v) { return 1000.0 * (1.0 - k * x - c * v) / mass; };
  const auto rk4 = oracle::rk4_trajectory(accel, 1e-5, steps * 100, 100);
  double err_cf = 0.0, err_rk = 0.0, rk_vs_cf = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double d = trace.samples[trace.samples.size() - steps + i].disp_mm;
    const double cf = 1000.0 * oracle::critically_damped_step(1000.0 * k, mass, 1.0, (i + 1) * 1e-3);
    err_cf = std::max(err_cf, std::abs(d - cf));
    err_rk = std::max(err_rk, std::abs(d - rk4[i]));
    rk_vs_cf = std::max(rk_vs_cf, std::abs(rk4[i] - cf));
  }
  const bool spring_ok = err_cf < 0.02 && err_rk < 0.02 && rk_vs_cf < 1e-6;

  // Event alternation under fuzzed profiles.
  std::mt19937_64 rng(6006);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> hold(5, 60);
  int broken = 0, with_events = 0;
  std::size_t total_events = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    button::ButtonDesignParams p;
    p.travel = 0.5 + 4.5 * u(rng);
    p.activation_fraction = 0.25 + 0.6 * u(rng);
    p.peak_force = 0.5 + 3.9 * u(rng);
    p.snap_ratio = 0.8 * u(rng);
    p.velocity_stiffening = u(rng);
    p.damping = 0.0005 + 0.0045 * u(rng);
    const auto model = button::design_to_fdvv(p);
    std::vector<double> profile;
    while (profile.size() < 500) {
      const double f = 6.0 * u(rng);
      for (int h = hold(rng); h > 0 && profile.size() < 500; --h) profile.push_back(f);
    }
    std::vector<button::SimEvent> events;
    button::simulate_profile(model, profile, button::kControlDt, {}, &events);
    for (std::size_t i = 0; i < events.size(); ++i) {
      broken += events[i].kind != (i % 2 == 0 ? button::EventKind::kActivation : button::EventKind::kRelease);
    }
    with_events += !events.empty();
    total_events += events.size();
  }

  // Bit-identical repeats, for the raw simulator and for seeded rollouts.
  const auto model = button::design_to_fdvv({});
  std::vector<double> profile(400);
  for (auto& f : profile) f = 6.0 * u(rng);
  bool identical = button::simulate_profile(model, profile).samples == button::simulate_profile(model, profile).samples;
  const auto params = user::PolicyParams::random(user::PolicyArch{}, 3);
  user::TaskSpec task;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto a = user::rollout(params, task, model, s);
    const auto b = user::rollout(params, task, model, s);
    identical = identical && a.steps.size() == b.steps.size() && a.discounted_return == b.discounted_return;
    for (std::size_t t = 0; identical && t < a.steps.size(); ++t) {
      identical = a.steps[t].raw_action == b.steps[t].raw_action && a.steps[t].obs == b.steps[t].obs;
    }
  }
  return {spring_ok && broken == 0 && with_events > 0 && identical,
          fmt::format("spring max err vs closed form {:.2e} mm, vs RK4 {:.2e} mm (tol 0.02 mm = 2%); "
                      "{} events over {} of 1000 profiles, {} out of order; repeats {}",
                      err_cf, err_rk, total_events, with_events, broken,
                      identical ? "bit-identical" : "DIFFER")};
}

// ---------------------------------------------------------------------------
// 7. Drive compensation.

Outcome compensation() {
  std::mt19937_64 rng(7007);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::vector<double> h{0.7, 0.3};
  double worst = 0.0;
  int max_iters = 0;
  bool monotone = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> target(256);
    for (auto& v : target) v = normal(rng);
    const auto r = button::compensate_drive(target, h, 50, 1e-4);
    const auto y = oracle::convolve(r.drive, h);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - target[i]) * (y[i] - target[i]);
    worst = std::max(worst, std::sqrt(s / static_cast<double>(y.size())));
    max_iters = std::max(max_iters, r.iterations);
    for (std::size_t i = 1; i < r.residual_history.size(); ++i) {
      monotone = monotone && r.residual_history[i] <= r.residual_history[i - 1];
    }
  }
  return {worst < 1e-3 && max_iters <= 50 && monotone,
          fmt::format("max residual RMSE {:.2e} (tol 1e-3) after at most {} iterations (<= 50); residual {}",
                      worst, max_iters, monotone ? "nonincreasing" : "INCREASED")};
}

// ---------------------------------------------------------------------------
// 8. Policy gradient.

Outcome gradient_check() {
  const user::PolicyArch reduced{{1}};
  user::TaskSpec task;
  task.design.peak_force = 0.8;
  task.design.snap_ratio = 0.0;
  task.horizon = 150;
  const auto model = button::design_to_fdvv(task.design);
  double worst = 0.0;
  bool zero_exact = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto params = user::PolicyParams::random(reduced, 100 + seed);
    params.values[7] = 0.9;  // output bias: press hard enough to reach the button
    std::vector<user::Trajectory> batch;
    for (std::uint64_t e = 0; e < 6; ++e) batch.push_back(user::rollout(params, task, model, derive_seed(seed, {e})));
    // The batch (and so every random draw) is shared by both sides of each difference.
    const double b = 0.25;
    const auto g = user::policy_gradient(batch, params, 0.995, b);
    Eigen::VectorXd fd(g.size());
    const double h = 1e-4;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      auto up = params, down = params;
      up.values[i] += h;
      down.values[i] -= h;
      fd[i] = (user::surrogate_objective(batch, up, 0.995, b) - user::surrogate_objective(batch, down, 0.995, b)) /
              (2.0 * h);
    }
    worst = std::max(worst, (g - fd).norm() / fd.norm());

    for (auto& traj : batch)
      for (auto& s : traj.steps) s.reward = 0.0;
    zero_exact = zero_exact && user::policy_gradient(batch, params, 0.995).isZero(0.0);
  }
  return {worst < 1e-2 && zero_exact,
          fmt::format("max relative error vs central differences {:.2e} (tol 1e-2) over 10 batches; "
                      "zero-advantage gradient {}",
                      worst, zero_exact ? "exactly zero" : "NONZERO")};
}

// ---------------------------------------------------------------------------
// 9. Meta-adaptation.

Outcome meta_adaptation() {
  const CidConfig config;  // 300 meta-iterations, K = 8
  const auto meta = orchestrator::train_user_model(config);
  const auto tasks = orchestrator::task_distribution(config);
  user::MetaPolicy random_init = meta;
  random_init.init_params = user::PolicyParams::random(meta.init_params.arch, 424242);

  // Held-out designs come from a stream the training never touched.
  Rng held_out(derive_seed(config.run.seed, {77}));
  const int eval_episodes = 20;
  double meta_sum = 0.0, random_sum = 0.0;
  for (int d = 0; d < 10; ++d) {
    const auto task = tasks.sample(held_out);
    const auto model = button::design_to_fdvv(task.design);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto adapt_seed = derive_seed(s, {1, static_cast<std::uint64_t>(d)});
      const auto eval_seed = derive_seed(s, {2, static_cast<std::uint64_t>(d)});
      meta_sum += user::mean_return(user::adapt(meta, task, model, adapt_seed), task, model, eval_episodes,
                                    eval_seed, meta.rollout);
      random_sum += user::mean_return(user::adapt(random_init, task, model, adapt_seed), task, model,
                                      eval_episodes, eval_seed, meta.rollout);
    }
  }
  const double meta_mean = meta_sum / 100.0, random_mean = random_sum / 100.0;

  // Per design: mean return before and after adaptation, same evaluation
  // seeds on both sides, averaged over 10 adaptation seeds.
  int improved = 0;
  double mean_gain = 0.0;
  for (int d = 0; d < 20; ++d) {
    const auto task = tasks.sample(held_out);
    const auto model = button::design_to_fdvv(task.design);
    double before = 0.0, after = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto eval_seed = derive_seed(s, {4, static_cast<std::uint64_t>(d)});
      before += user::mean_return(meta.init_params, task, model, eval_episodes, eval_seed, meta.rollout);
      after += user::mean_return(user::adapt(meta, task, model, derive_seed(s, {3, static_cast<std::uint64_t>(d)})),
                                 task, model, eval_episodes, eval_seed, meta.rollout);
    }
    improved += after > before;
    mean_gain += (after - before) / 10.0 / 20.0;
  }
  return {meta_mean > random_mean && improved >= 16,
          fmt::format("post-adaptation return meta {:.3f} vs random init {:.3f}; adaptation improved the "
                      "mean return on {}/20 designs (>= 16), mean gain {:+.2e}",
                      meta_mean, random_mean, improved, mean_gain)};
}

// ---------------------------------------------------------------------------
// 10. End-to-end loop with the simulated button.

Outcome end_to_end() {
  CidConfig config;
  config.run.budget = 20;
  config.run.seed = 11;
  const auto meta = orchestrator::train_user_model(config);
  const orchestrator::SimulatedButtonProvider provider(config, meta);
  const auto names = io::design_names(config);
  const auto objectives = io::objective_names(config);

  bool nondominated = true, monotone = true;
  int checkpoints = 0;
  orchestrator::RunOptions watch;
  watch.persist = [&](const orchestrator::RunState& s) {
    ++checkpoints;
    const auto archive = s.archive();
    const auto objs = archive.objectives();
    nondominated = nondominated && archive.is_consistent() && oracle::brute_force_front(objs).size() == objs.size();
    for (std::size_t i = 1; i < s.hv_history.size(); ++i) {
      monotone = monotone && s.hv_history[i] >= s.hv_history[i - 1];
    }
  };
  const auto full = orchestrator::run(config, provider, std::nullopt, watch);

  orchestrator::RunOptions stop;
  stop.stop_after_iterations = 10;
  const auto partial = orchestrator::run(config, provider, std::nullopt, stop);
  const auto reloaded = io::run_state_from_json(io::run_state_to_json(partial.state));
  const auto resumed = orchestrator::run(config, provider, reloaded);
  const bool resume_identical = io::run_state_to_json(resumed.state) == io::run_state_to_json(full.state);

  const auto again = orchestrator::run(config, provider);
  const auto csv = io::front_csv(full.state, names, objectives);
  const bool csv_identical = csv == io::front_csv(again.state, names, objectives) &&
                             csv == io::front_csv(resumed.state, names, objectives);

  const bool count_ok = full.state.records.size() == static_cast<std::size_t>(config.optimizer.initial_designs + 20);
  return {nondominated && monotone && resume_identical && csv_identical && count_ok && checkpoints > 0,
          fmt::format("{} records, archive of {}; nondominated at all {} checkpoints: {}; HV monotone: {}; "
                      "resumed-after-10 state {}; front CSV across runs {}",
                      full.state.records.size(), full.archive.size(), checkpoints, nondominated ? "yes" : "NO",
                      monotone ? "yes" : "NO", resume_identical ? "byte-identical" : "DIFFERS",
                      csv_identical ? "byte-identical" : "DIFFERS")};
}

// ---------------------------------------------------------------------------
// 11. Capture-and-refit round trip.

// Eight presses per speed, each started a fraction of a sample later, so the
// 1 kHz samples land at different displacements along the stroke. 150 mm/s
// still leaves a 0.5 mm stroke a few milliseconds of samples.
std::vector<std::vector<button::FdTrace>> capture(const button::FdvvModel& source) {
  std::vector<std::vector<button::FdTrace>> groups;
  for (double speed : {10.0, 50.0, 150.0}) {
    std::vector<button::FdTrace> presses;
    for (int r = 0; r < 8; ++r) {
      button::PressScript script;
      script.speed = speed;
      script.lead_s = r * button::kControlDt / 8.0;
      presses.push_back(button::synthesize_press(source, script));
    }
    groups.push_back(std::move(presses));
  }
  return groups;
}

Outcome fdvv_round_trip() {
  // Designs drawn uniformly from the default design space.
  const DesignSpace space;
  const auto lo = space.lower.to_array(), hi = space.upper.to_array();
  std::mt19937_64 rng(11011);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_rel_rmse = 0.0, worst_activation = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::array<double, button::ButtonDesignParams::kDim> x{};
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = lo[j] + (hi[j] - lo[j]) * u(rng);
    const auto p = button::ButtonDesignParams::from_array(x);
    const auto source = button::design_to_fdvv(p);
    const auto fitted = button::fit_fdvv(capture(source));
    worst_activation = std::max(worst_activation, std::abs(fitted.activation_disp - source.activation_disp));
    for (std::size_t k = 0; k < fitted.velocity_levels.size(); ++k) {
      const double v = fitted.velocity_levels[k];
      double s = 0.0;
      const int n = 400;
      for (int i = 0; i <= n; ++i) {
        const double d = std::min(source.travel, source.travel * i / n);
        const double e = fitted.fd_curves[k](d) - button::force_at(source, d, v);
        s += e * e;
      }
      worst_rel_rmse = std::max(worst_rel_rmse, std::sqrt(s / (n + 1)) / p.peak_force);
    }
  }
  return {worst_rel_rmse < 0.05 && worst_activation < 0.1,
          fmt::format("20 designs, presses at 10/50/150 mm/s: max FD-curve RMSE {:.2f}% of peak force (< 5%); "
                      "max activation error {:.4f} mm (< 0.1)",
                      100.0 * worst_rel_rmse, worst_activation)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "GP oracle equivalence", 10.0, gp_oracle},
      {2, "hypervolume correctness", 60.0, hypervolume_correctness},
      {3, "Pareto correctness", 30.0, pareto_correctness},
      {4, "MOBO sample efficiency", 300.0, mobo_efficiency},
      {5, "B-spline/BIC recovery", 30.0, bspline_recovery},
      {6, "simulator physics", 60.0, simulator_physics},
      {7, "drive compensation", 10.0, compensation},
      {8, "policy-gradient correctness", 60.0, gradient_check},
      {9, "meta-adaptation efficacy", 1800.0, meta_adaptation},
      {10, "end-to-end CID", 1800.0, end_to_end},
      {11, "FDVV round trip", 60.0, fdvv_round_trip},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = out.pass && in_time;
    failed += !pass;
    std::cout << fmt::format("[{}] {:>2}. {}: {} | {:.1f} s (budget {:.0f} s){}\n", pass ? "PASS" : "FAIL", c.id,
                             c.name, out.detail, secs, c.budget_s, in_time ? "" : " OVER BUDGET")
              << std::flush;
  }
  std::cout << fmt::format("{} criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
