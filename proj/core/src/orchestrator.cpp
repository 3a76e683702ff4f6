#include "cid/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "cid/error.hpp"
#include "cid/log.hpp"
#include "cid/rng.hpp"

namespace cid::orchestrator {

// ---------------------------------------------------------------------------
// Providers

SyntheticProvider::SyntheticProvider(problems::SyntheticProblem problem)
    : problem_(std::move(problem)) {}

mobo::Bounds SyntheticProvider::bounds() const { return problem_.bounds; }

std::vector<std::string> SyntheticProvider::design_names() const {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < problem_.dim(); ++j) names.push_back(fmt::format("x{}", j + 1));
  return names;
}

std::vector<std::string> SyntheticProvider::objective_names() const { return {"f1", "f2"}; }

pareto::ObjectiveVector SyntheticProvider::worst_case() const {
  // Both problems attain their maxima at box corners.
  pareto::ObjectiveVector worst(problems::SyntheticProblem::objectives(),
                                -std::numeric_limits<double>::infinity());
  const std::size_t d = problem_.dim();
  const std::size_t corners = d <= 16 ? std::size_t{1} << d : 0;
  for (std::size_t mask = 0; mask < corners; ++mask) {
    std::vector<double> x(d);
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = (mask >> j) & 1U ? problem_.bounds.upper[j] : problem_.bounds.lower[j];
    }
    const auto f = problem_.evaluate(x);
    for (std::size_t k = 0; k < f.size(); ++k) worst[k] = std::max(worst[k], f[k]);
  }
  return worst;
}

Evaluation SyntheticProvider::evaluate(std::span<const double> design, std::uint64_t) const {
  if (!problem_.bounds.contains(design)) {
    throw std::invalid_argument(fmt::format("{}: design outside bounds", problem_name(problem_.id)));
  }
  return {problem_.evaluate(design), {}};
}

SimulatedButtonProvider::SimulatedButtonProvider(const CidConfig& config, user::MetaPolicy meta)
    : space_(config.design_space),
      kinds_(config.objectives.kinds),
      meta_(std::move(meta)),
      episodes_(config.user_model.episodes),
      horizon_(config.user_model.horizon),
      dwell_limit_(config.user_model.dwell_limit) {
  meta_.validate();
}

mobo::Bounds SimulatedButtonProvider::bounds() const { return space_.bounds(); }

std::vector<std::string> SimulatedButtonProvider::design_names() const {
  return {button::ButtonDesignParams::kNames.begin(), button::ButtonDesignParams::kNames.end()};
}

std::vector<std::string> SimulatedButtonProvider::objective_names() const {
  std::vector<std::string> names;
  for (auto k : kinds_) names.emplace_back(objective_name(k));
  return names;
}

pareto::ObjectiveVector SimulatedButtonProvider::worst_case() const {
  const double duration = horizon_ * meta_.rollout.dt;
  pareto::ObjectiveVector worst;
  for (auto k : kinds_) {
    switch (k) {
      case ObjectiveKind::kCompletionTime: worst.push_back(duration); break;
      case ObjectiveKind::kErrorRate: worst.push_back(1.0); break;
      case ObjectiveKind::kEffort: worst.push_back(user::kMaxAction * user::kMaxAction * duration); break;
    }
  }
  return worst;
}

Evaluation SimulatedButtonProvider::evaluate(std::span<const double> design,
                                             std::uint64_t seed) const {
  if (!space_.bounds().contains(design)) {
    throw std::invalid_argument("simulated_button: design outside the configured design space");
  }
  return evaluate_design(button::ButtonDesignParams::from_array(design), meta_, kinds_, episodes_,
                         horizon_, dwell_limit_, seed);
}

Evaluation evaluate_design(const button::ButtonDesignParams& design, const user::MetaPolicy& meta,
                           std::span<const ObjectiveKind> objectives, int episodes, int horizon,
                           int dwell_limit, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate_design: episodes must be >= 1");
  design.validate();
  const button::FdvvModel model = button::design_to_fdvv(design);
  const user::TaskSpec task{design, horizon, dwell_limit};
  const user::PolicyParams adapted =
      user::adapt(meta, task, model, derive_seed(seed, SeedPurpose::kAdaptation));

  Evaluation out;
  double completion = 0.0, effort = 0.0;
  int failures = 0;
  for (int e = 0; e < episodes; ++e) {
    const user::Trajectory traj =
        user::rollout(adapted, task, model,
                      derive_seed(seed, SeedPurpose::kEvaluation, static_cast<std::uint64_t>(e)),
                      meta.rollout);
    completion += traj.completion_time;
    effort += traj.effort;
    if (!traj.success()) ++failures;
    out.episodes.push_back({traj.discounted_return, traj.success(), traj.time_to_activation});
  }
  for (auto k : objectives) {
    switch (k) {
      case ObjectiveKind::kCompletionTime: out.objectives.push_back(completion / episodes); break;
      case ObjectiveKind::kErrorRate:
        out.objectives.push_back(static_cast<double>(failures) / episodes);
        break;
      case ObjectiveKind::kEffort: out.objectives.push_back(effort / episodes); break;
    }
  }
  return out;
}

user::TaskDistribution task_distribution(const CidConfig& config) {
  user::TaskDistribution tasks;
  tasks.lower = config.design_space.lower;
  tasks.upper = config.design_space.upper;
  tasks.horizon = config.user_model.horizon;
  tasks.dwell_limit_steps = config.user_model.dwell_limit;
  return tasks;
}

user::MetaTrainOptions meta_train_options(const CidConfig& config) {
  const auto& u = config.user_model;
  user::MetaTrainOptions opts;
  opts.tasks_per_iteration = u.tasks_per_iteration;
  opts.post_adaptation_rollouts = u.post_adaptation_rollouts;
  opts.inner_lr = u.inner_lr;
  opts.adapt_episodes = u.adapt_episodes;
  opts.arch.hidden = u.hidden;
  opts.rollout.gamma = u.gamma;
  opts.rollout.sensory_delay_steps = u.sensory_delay;
  opts.rollout.batch_size = u.batch_size;
  opts.rollout.sim.mass_kg = config.simulator.mass_kg;
  opts.rollout.sim.substeps = config.simulator.substeps;
  return opts;
}

user::MetaPolicy train_user_model(const CidConfig& config,
                                  const std::function<void(int, double)>& on_iteration) {
  user::MetaTrainOptions opts = meta_train_options(config);
  opts.on_iteration = on_iteration;
  return user::meta_train(task_distribution(config), config.user_model.meta_iterations,
                          config.user_model.meta_lr,
                          derive_seed(config.run.seed, SeedPurpose::kMetaTraining), opts);
}

std::unique_ptr<ObjectiveProvider> make_synthetic_provider(const CidConfig& config) {
  return std::make_unique<SyntheticProvider>(problems::make_problem(
      config.objectives.problem, static_cast<std::size_t>(config.objectives.problem_dim)));
}

// ---------------------------------------------------------------------------
// Run state

pareto::ParetoArchive RunState::archive() const {
  std::vector<pareto::ArchiveEntry> entries;
  entries.reserve(records.size());
  for (const auto& r : records) entries.push_back({r.design, r.objectives, r.id});
  return pareto::ParetoArchive::from_entries(entries);
}

bool RunState::initial_design_complete() const {
  return records.size() >= static_cast<std::size_t>(config.optimizer.initial_designs);
}

std::size_t RunState::total_evaluations() const {
  return static_cast<std::size_t>(config.optimizer.initial_designs + config.run.budget);
}

bool RunState::budget_exhausted() const { return records.size() >= total_evaluations(); }

RunState initial_state(const CidConfig& config) {
  config.validate();
  RunState s;
  s.config = config;
  s.fingerprint = config_fingerprint(config);
  return s;
}

namespace {

mobo::Bounds provider_bounds(const ObjectiveProvider& provider) {
  mobo::Bounds b = provider.bounds();
  b.validate();
  return b;
}

double archive_hypervolume(const RunState& state) {
  return pareto::hypervolume(state.archive().objectives(), state.reference);
}

EvaluationRecord evaluate_record(const RunState& state, const ObjectiveProvider& provider,
                                 std::vector<double> design) {
  EvaluationRecord rec;
  rec.id = state.seed_cursor;
  rec.iteration = static_cast<int>(state.records.size());
  rec.evaluation_seed = derive_seed(state.config.run.seed, SeedPurpose::kEvaluation, state.seed_cursor);
  rec.design = std::move(design);
  try {
    Evaluation ev = provider.evaluate(rec.design, rec.evaluation_seed);
    for (double v : ev.objectives) {
      if (!std::isfinite(v)) throw NumericalError("non-finite objective value");
    }
    rec.objectives = std::move(ev.objectives);
    rec.episodes = std::move(ev.episodes);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
    rec.objectives = provider.worst_case();
    rec.episodes.clear();
    log::error(fmt::format("evaluation {} failed: {}", rec.id, e.what()));
  }
  return rec;
}

void append_record(RunState& state, EvaluationRecord rec) {
  log::info(fmt::format("record {}: objectives [{}]{}", rec.id, fmt::join(rec.objectives, ", "),
                        rec.failed ? " (failed)" : ""));
  state.records.push_back(std::move(rec));
  ++state.seed_cursor;
}

}  // namespace

std::vector<double> automatic_reference(const std::vector<pareto::ObjectiveVector>& observations,
                                        double margin) {
  if (observations.empty()) throw std::invalid_argument("automatic_reference: no observations");
  const std::size_t m = observations.front().size();
  std::vector<double> lo(m, std::numeric_limits<double>::infinity());
  std::vector<double> hi(m, -std::numeric_limits<double>::infinity());
  for (const auto& y : observations) {
    if (y.size() != m) throw std::invalid_argument("automatic_reference: ragged observations");
    for (std::size_t k = 0; k < m; ++k) {
      lo[k] = std::min(lo[k], y[k]);
      hi[k] = std::max(hi[k], y[k]);
    }
  }
  std::vector<double> ref(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double range = hi[k] - lo[k];
    ref[k] = hi[k] + margin * (range > 0.0 ? range : std::max(1.0, std::abs(hi[k])));
  }
  return ref;
}

void refit_models(RunState& state, bool reoptimize) {
  const std::size_t n = state.records.size();
  if (n == 0) throw StateError("refit_models: no records");
  const std::size_t m = state.records.front().objectives.size();
  const mobo::Bounds bounds = [&] {
    if (state.config.objectives.provider == ProviderKind::kSynthetic) {
      return make_synthetic_provider(state.config)->bounds();
    }
    return state.config.design_space.bounds();
  }();
  const std::size_t d = bounds.dim();

  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = bounds.to_unit(state.records[i].design);
    for (std::size_t j = 0; j < d; ++j) {
      inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u[j];
    }
  }

  const bool search = reoptimize || state.kernels.size() != m;
  if (search) state.kernels.assign(m, gp::default_kernel(d, state.config.optimizer.kernel));
  const std::uint64_t hyper_seed =
      derive_seed(state.config.run.seed, SeedPurpose::kHyperparameters, n - 1);

  state.models.clear();
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = state.records[i].objectives[k];
    const gp::Standardization st = gp::standardize(y);
    Eigen::VectorXd t(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) t[static_cast<Eigen::Index>(i)] = (y[i] - st.offset) / st.scale;

    auto optimize = [&] {
      gp::HyperSearchOptions opts;
      opts.family = state.config.optimizer.kernel;
      state.kernels[k] = gp::optimize_hyperparams(inputs, t, state.config.optimizer.restarts,
                                                  derive_seed(hyper_seed, {k}), opts)
                             .best;
    };
    if (search && n >= 2) optimize();

    std::optional<gp::GpModel> model;
    try {
      model = gp::GpModel::fit(inputs, t, state.kernels[k]);
    } catch (const NumericalError&) {
      if (search || n < 2) throw;
      log::info(fmt::format("objective {}: stored kernel no longer factorizes, re-optimizing", k));
      optimize();
      model = gp::GpModel::fit(inputs, t, state.kernels[k]);
    }
    state.models.push_back({std::move(*model), st.offset, st.scale});
  }
}

void initial_design_step(RunState& state, const ObjectiveProvider& provider) {
  if (state.initial_design_complete()) throw StateError("initial design already complete");
  const mobo::Bounds bounds = provider_bounds(provider);
  const HaltonSequence halton(bounds.dim(),
                              derive_seed(state.config.run.seed, SeedPurpose::kDesignOfExperiments));
  const auto index = static_cast<std::uint64_t>(state.records.size());
  append_record(state, evaluate_record(state, provider, bounds.from_unit(halton.point(index))));

  if (state.initial_design_complete()) {
    std::vector<pareto::ObjectiveVector> ys;
    for (const auto& r : state.records) ys.push_back(r.objectives);
    state.reference = state.config.optimizer.reference.empty()
                          ? automatic_reference(ys, state.config.optimizer.reference_margin)
                          : state.config.optimizer.reference;
    refit_models(state, true);
    state.hv_history.push_back(archive_hypervolume(state));
    log::info(fmt::format("initial design complete; reference [{}], hypervolume {}",
                          fmt::join(state.reference, ", "), state.hv_history.back()));
  }
}

void cid_step(RunState& state, const ObjectiveProvider& provider) {
  if (!state.initial_design_complete()) throw StateError("cid_step: initial design incomplete");
  if (state.budget_exhausted()) {
    throw StateError(fmt::format("cid_step: budget of {} iterations exhausted", state.config.run.budget));
  }
  if (state.models.size() != state.reference.size()) refit_models(state, false);

  const pareto::ParetoArchive archive = state.archive();
  mobo::ProposalRequest req;
  req.models = state.models;
  req.bounds = provider_bounds(provider);
  req.archive = &archive;
  for (const auto& r : state.records) req.evaluated.push_back(r.design);
  req.ref = state.reference;
  req.scan_count = static_cast<std::size_t>(state.config.optimizer.scan_count);
  req.sample_count = static_cast<std::size_t>(state.config.optimizer.mc_samples);
  req.seed = derive_seed(state.config.run.seed, SeedPurpose::kAcquisition, state.seed_cursor);
  const mobo::Proposal proposal = mobo::propose_next(req);
  if (proposal.perturbed) {
    log::info(fmt::format("proposal {} duplicated an evaluated design and was perturbed",
                          state.seed_cursor));
  }

  EvaluationRecord rec = evaluate_record(state, provider, proposal.design);
  rec.acquisition_seed = req.seed;
  rec.perturbed = proposal.perturbed;
  rec.exploration_fallback = proposal.exploration_fallback;
  append_record(state, std::move(rec));
  ++state.iteration;

  refit_models(state, state.iteration % state.config.optimizer.refit_interval == 0);
  state.hv_history.push_back(archive_hypervolume(state));
  log::debug(fmt::format("iteration {}: ehvi {}, hypervolume {}", state.iteration, proposal.ehvi,
                         state.hv_history.back()));
}

RunResult run(const CidConfig& config, const ObjectiveProvider& provider,
              std::optional<RunState> resume, const RunOptions& options) {
  RunState state;
  if (resume) {
    const std::string expected = config_fingerprint(config);
    if (resume->fingerprint != expected) {
      throw std::invalid_argument(fmt::format(
          "resume state fingerprint {} does not match configuration fingerprint {}",
          resume->fingerprint, expected));
    }
    state = std::move(*resume);
    state.config = config;
    if (state.initial_design_complete() && state.models.size() != state.reference.size()) {
      refit_models(state, false);
    }
  } else {
    state = initial_state(config);
  }

  auto persist = [&] {
    if (options.persist) options.persist(state);
  };
  auto stop = [&] {
    return options.stop_after_iterations && state.iteration >= *options.stop_after_iterations;
  };

  while (!state.initial_design_complete()) {
    initial_design_step(state, provider);
    persist();
  }
  while (!state.budget_exhausted() && !stop()) {
    cid_step(state, provider);
    persist();
  }

  RunResult result;
  result.archive = state.archive();
  result.complete = state.budget_exhausted();
  result.state = std::move(state);
  return result;
}

}  // namespace cid::orchestrator
