#pragma once

// Simulated user: rollouts against the button simulator, REINFORCE gradients,
// few-episode adaptation and first-order meta-training of the initialization.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cid/fdvv.hpp"
#include "cid/policy.hpp"
#include "cid/sim.hpp"

namespace cid::user {

struct TaskSpec {
  button::ButtonDesignParams design;
  int horizon = 1000;            // steps at 1 kHz
  int dwell_limit_steps = 400;   // max steps held past activation before failing
};

struct RolloutConfig {
  double gamma = 0.995;
  int sensory_delay_steps = 50;
  double dt = button::kControlDt;
  button::SimConfig sim;
  double success_reward = 10.0;
  double step_penalty = 0.01;
  double effort_coefficient = 1e-4;
  double failure_penalty = 5.0;
  int batch_size = 4;

  bool operator==(const RolloutConfig&) const = default;
};

enum class Outcome { kSuccess, kTimeout, kDwellExceeded };

struct TrajectoryStep {
  ObsVector obs;
  double action;
  double raw_action;
  double log_prob;
  double reward;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  Outcome outcome = Outcome::kTimeout;
  double discounted_return = 0.0;
  double time_to_activation = -1.0;  // s, negative when never activated
  double completion_time = 0.0;      // s; the horizon duration unless successful
  double effort = 0.0;               // integral of squared commanded force, N^2 s

  bool success() const noexcept { return outcome == Outcome::kSuccess; }
};

using Controller = std::function<ActionSample(const ObsVector&, Rng&)>;

/// Step the simulator under `controller`. Reward per step is
/// -step_penalty - effort_coefficient a^2, plus success_reward on the first
/// release after an activation (which ends the episode) or -failure_penalty on
/// timeout or when the button is held past the dwell limit.
Trajectory rollout_with(const Controller& controller, const TaskSpec& task,
                        const button::FdvvModel& model, std::uint64_t seed,
                        const RolloutConfig& config = {});

Trajectory rollout(const PolicyParams& params, const TaskSpec& task,
                   const button::FdvvModel& model, std::uint64_t seed,
                   const RolloutConfig& config = {});

/// Discounted return-to-go for every step.
std::vector<double> returns_to_go(const Trajectory& traj, double gamma);

/// REINFORCE with a constant baseline: mean over all steps of
/// grad log pi(a_t|s_t) (G_t - b). `baseline` defaults to the batch mean of
/// the episode returns.
Eigen::VectorXd policy_gradient(const std::vector<Trajectory>& batch, const PolicyParams& params,
                                double gamma, std::optional<double> baseline = std::nullopt);

/// The scalar whose gradient policy_gradient returns, with the batch held fixed.
double surrogate_objective(const std::vector<Trajectory>& batch, const PolicyParams& params,
                           double gamma, std::optional<double> baseline = std::nullopt);

struct MetaPolicy {
  PolicyParams init_params;
  double inner_lr = 0.05;
  int adapt_episodes = 8;
  RolloutConfig rollout;

  void validate() const;
};

/// Start from init_params and apply one ascent step per batch of up to
/// `batch_size` episodes until adapt_episodes have been run. Throws
/// std::invalid_argument for a negative K or inner_lr, or a batch size below 1.
PolicyParams adapt(const MetaPolicy& meta, const TaskSpec& task, const button::FdvvModel& model,
                   std::uint64_t seed);

/// Uniform distribution over a box of button designs.
struct TaskDistribution {
  button::ButtonDesignParams lower{0.5, 0.25, 0.5, 0.0, 0.0, 0.0005};
  button::ButtonDesignParams upper{5.0, 0.85, 4.4, 0.8, 1.0, 0.005};
  int horizon = 1000;
  int dwell_limit_steps = 400;

  TaskSpec sample(Rng& rng) const;
};

struct MetaTrainOptions {
  int tasks_per_iteration = 8;
  int post_adaptation_rollouts = 4;
  double inner_lr = 0.05;
  int adapt_episodes = 8;
  PolicyArch arch;
  RolloutConfig rollout;
  // Adam moments for the outer update.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::function<void(int iteration, double mean_post_return)> on_iteration;
};

/// First-order meta-training. Each iteration samples tasks, adapts with one
/// inner batch, collects post-adaptation rollouts and moves init_params along
/// the mean post-adaptation policy gradient taken at the adapted parameters.
MetaPolicy meta_train(const TaskDistribution& tasks, int iterations, double meta_lr,
                      std::uint64_t seed, const MetaTrainOptions& options = {});

/// Mean discounted return of `episodes` rollouts with seeds derived from `seed`.
double mean_return(const PolicyParams& params, const TaskSpec& task, const button::FdvvModel& model,
                   int episodes, std::uint64_t seed, const RolloutConfig& config = {});

}  // namespace cid::user
