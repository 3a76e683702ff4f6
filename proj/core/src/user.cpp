#include "cid/user.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace cid::user {

Trajectory rollout_with(const Controller& controller, const TaskSpec& task,
                        const button::FdvvModel& model, std::uint64_t seed,
                        const RolloutConfig& config) {
  if (task.horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
  if (config.sensory_delay_steps < 0) throw std::invalid_argument("rollout: negative sensory delay");

  Rng rng(seed);
  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(task.horizon));
  button::SimState state;
  double felt_force = 0.0;
  std::vector<char> activated_history;
  activated_history.reserve(static_cast<std::size_t>(task.horizon));
  int activation_step = -1;
  double discount = 1.0;

  for (int t = 0; t < task.horizon; ++t) {
    const int cue_index = t - config.sensory_delay_steps;
    const double cue = cue_index >= 0 && activated_history[static_cast<std::size_t>(cue_index)] ? 1.0 : 0.0;
    ObsVector obs{state.displacement / model.travel, state.velocity / 100.0,
                  felt_force / button::kMaxRenderableForce, cue,
                  1.0 - static_cast<double>(t) / task.horizon};

    const ActionSample a = controller(obs, rng);
    const button::StepOutput out = button::step(model, state, a.action, config.dt, config.sim);
    state = out.state;
    felt_force = out.button_force;

    double reward = -config.step_penalty - config.effort_coefficient * a.action * a.action;
    traj.effort += a.action * a.action * config.dt;
    bool done = false;
    for (const auto& e : out.events) {
      if (e.kind == button::EventKind::kActivation && activation_step < 0) {
        activation_step = t;
        traj.time_to_activation = (t + 1) * config.dt;
      } else if (e.kind == button::EventKind::kRelease && activation_step >= 0) {
        done = true;
        traj.outcome = Outcome::kSuccess;
        reward += config.success_reward;
        traj.completion_time = (t + 1) * config.dt;
        break;
      }
    }
    if (!done && state.activated && activation_step >= 0 && t - activation_step >= task.dwell_limit_steps) {
      done = true;
      traj.outcome = Outcome::kDwellExceeded;
      reward -= config.failure_penalty;
    }
    if (!done && t + 1 == task.horizon) {
      done = true;
      traj.outcome = Outcome::kTimeout;
      reward -= config.failure_penalty;
    }
    activated_history.push_back(state.activated ? 1 : 0);
    traj.steps.push_back({obs, a.action, a.raw, a.log_prob, reward});
    traj.discounted_return += discount * reward;
    discount *= config.gamma;
    if (done) break;
  }
  if (!traj.success()) traj.completion_time = task.horizon * config.dt;
  return traj;
}

Trajectory rollout(const PolicyParams& params, const TaskSpec& task, const button::FdvvModel& model,
                   std::uint64_t seed, const RolloutConfig& config) {
  return rollout_with([&](const ObsVector& obs, Rng& rng) { return policy_act(params, obs, rng); },
                      task, model, seed, config);
}

std::vector<double> returns_to_go(const Trajectory& traj, double gamma) {
  std::vector<double> g(traj.steps.size());
  double acc = 0.0;
  for (std::size_t i = traj.steps.size(); i-- > 0;) {
    acc = traj.steps[i].reward + gamma * acc;
    g[i] = acc;
  }
  return g;
}

namespace {

double batch_baseline(const std::vector<Trajectory>& batch, double gamma) {
  double b = 0.0;
  for (const auto& t : batch) {
    const auto g = returns_to_go(t, gamma);
    b += g.empty() ? 0.0 : g.front();
  }
  return b / static_cast<double>(batch.size());
}

std::size_t total_steps(const std::vector<Trajectory>& batch) {
  std::size_t n = 0;
  for (const auto& t : batch) n += t.steps.size();
  return n;
}

}  // namespace

Eigen::VectorXd policy_gradient(const std::vector<Trajectory>& batch, const PolicyParams& params,
                                double gamma, std::optional<double> baseline) {
  if (batch.empty()) throw std::invalid_argument("policy_gradient: empty batch");
  const double b = baseline.value_or(batch_baseline(batch, gamma));
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.values.size());
  const std::size_t n = total_steps(batch);
  if (n == 0) return grad;
  for (const auto& traj : batch) {
    const auto g = returns_to_go(traj, gamma);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const double adv = g[t] - b;
      if (adv == 0.0) continue;
      accumulate_log_prob_gradient(params, traj.steps[t].obs, traj.steps[t].raw_action, adv, grad);
    }
  }
  grad /= static_cast<double>(n);
  return grad;
}

double surrogate_objective(const std::vector<Trajectory>& batch, const PolicyParams& params,
                           double gamma, std::optional<double> baseline) {
  if (batch.empty()) throw std::invalid_argument("surrogate_objective: empty batch");
  const double b = baseline.value_or(batch_baseline(batch, gamma));
  const std::size_t n = total_steps(batch);
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (const auto& traj : batch) {
    const auto g = returns_to_go(traj, gamma);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& s = traj.steps[t];
      acc += gaussian_log_prob(s.raw_action, policy_mean(params, s.obs), params.log_std()) * (g[t] - b);
    }
  }
  return acc / static_cast<double>(n);
}

void MetaPolicy::validate() const {
  if (!(inner_lr > 0.0) || !std::isfinite(inner_lr)) {
    throw std::invalid_argument("MetaPolicy: inner_lr must be positive");
  }
  if (adapt_episodes < 0) throw std::invalid_argument("MetaPolicy: adapt_episodes must be >= 0");
  if (init_params.values.size() != static_cast<Eigen::Index>(init_params.arch.param_count())) {
    throw std::invalid_argument("MetaPolicy: parameter count does not match the architecture");
  }
  if (!init_params.values.allFinite()) throw std::invalid_argument("MetaPolicy: non-finite parameters");
  if (rollout.batch_size < 1) throw std::invalid_argument("MetaPolicy: batch size must be >= 1");
}

PolicyParams adapt(const MetaPolicy& meta, const TaskSpec& task, const button::FdvvModel& model,
                   std::uint64_t seed) {
  if (meta.adapt_episodes < 0 || !(meta.inner_lr >= 0.0) || !std::isfinite(meta.inner_lr) ||
      meta.rollout.batch_size < 1) {
    throw std::invalid_argument(fmt::format("adapt: invalid settings (K = {}, inner_lr = {}, batch size {})",
                                            meta.adapt_episodes, meta.inner_lr, meta.rollout.batch_size));
  }
  PolicyParams params = meta.init_params;
  int remaining = meta.adapt_episodes;
  std::uint64_t batch_index = 0;
  while (remaining > 0) {
    const int n = std::min(remaining, meta.rollout.batch_size);
    std::vector<Trajectory> batch;
    batch.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      batch.push_back(rollout(params, task, model,
                              derive_seed(seed, {batch_index, static_cast<std::uint64_t>(i)}),
                              meta.rollout));
    }
    params.values += meta.inner_lr * policy_gradient(batch, params, meta.rollout.gamma);
    remaining -= n;
    ++batch_index;
  }
  return params;
}

TaskSpec TaskDistribution::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto lo = lower.to_array();
  const auto hi = upper.to_array();
  std::array<double, button::ButtonDesignParams::kDim> v{};
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
  TaskSpec task;
  task.design = button::ButtonDesignParams::from_array(v);
  task.horizon = horizon;
  task.dwell_limit_steps = dwell_limit_steps;
  return task;
}

MetaPolicy meta_train(const TaskDistribution& tasks, int iterations, double meta_lr,
                      std::uint64_t seed, const MetaTrainOptions& options) {
  if (iterations < 0) throw std::invalid_argument("meta_train: iterations must be >= 0");
  MetaPolicy meta;
  meta.init_params =
      PolicyParams::random(options.arch, derive_seed(seed, SeedPurpose::kPolicyInit));
  meta.inner_lr = options.inner_lr;
  meta.adapt_episodes = options.adapt_episodes;
  meta.rollout = options.rollout;
  meta.validate();

  // The inner loop during meta-training is a single batch.
  MetaPolicy inner = meta;
  inner.adapt_episodes = options.rollout.batch_size;

  const Eigen::Index p = meta.init_params.values.size();
  Eigen::VectorXd m1 = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(p);

  for (int it = 0; it < iterations; ++it) {
    const auto iter = static_cast<std::uint64_t>(it);
    Rng task_rng(derive_seed(seed, SeedPurpose::kTaskSampling, iter));
    inner.init_params = meta.init_params;
    Eigen::VectorXd meta_grad = Eigen::VectorXd::Zero(p);
    double post_return = 0.0;
    for (int k = 0; k < options.tasks_per_iteration; ++k) {
      const auto task_index = static_cast<std::uint64_t>(k);
      const TaskSpec task = tasks.sample(task_rng);
      const button::FdvvModel model = button::design_to_fdvv(task.design);
      const std::uint64_t task_seed =
          derive_seed(seed, {static_cast<std::uint64_t>(SeedPurpose::kMetaTraining), iter, task_index});
      const PolicyParams adapted = adapt(inner, task, model, derive_seed(task_seed, {0}));
      std::vector<Trajectory> post;
      for (int r = 0; r < options.post_adaptation_rollouts; ++r) {
        post.push_back(rollout(adapted, task, model,
                               derive_seed(task_seed, {1, static_cast<std::uint64_t>(r)}),
                               options.rollout));
        post_return += post.back().discounted_return;
      }
      meta_grad += policy_gradient(post, adapted, options.rollout.gamma);
    }
    meta_grad /= static_cast<double>(options.tasks_per_iteration);
    post_return /= static_cast<double>(options.tasks_per_iteration * options.post_adaptation_rollouts);

    // Adam ascent.
    const double t = it + 1.0;
    m1 = options.beta1 * m1 + (1.0 - options.beta1) * meta_grad;
    m2 = options.beta2 * m2 + (1.0 - options.beta2) * meta_grad.cwiseProduct(meta_grad);
    const Eigen::VectorXd m1_hat = m1 / (1.0 - std::pow(options.beta1, t));
    const Eigen::VectorXd m2_hat = m2 / (1.0 - std::pow(options.beta2, t));
    meta.init_params.values.array() +=
        meta_lr * m1_hat.array() / (m2_hat.array().sqrt() + options.epsilon);

    if (options.on_iteration) options.on_iteration(it, post_return);
  }
  return meta;
}

double mean_return(const PolicyParams& params, const TaskSpec& task, const button::FdvvModel& model,
                   int episodes, std::uint64_t seed, const RolloutConfig& config) {
  if (episodes < 1) throw std::invalid_argument("mean_return: episodes must be >= 1");
  double acc = 0.0;
  for (int e = 0; e < episodes; ++e) {
    acc += rollout(params, task, model, derive_seed(seed, {static_cast<std::uint64_t>(e)}), config)
               .discounted_return;
  }
  return acc / episodes;
}

}  // namespace cid::user
