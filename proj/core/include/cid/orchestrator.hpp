#pragma once

// The closed design loop: propose a design, evaluate it (simulated button plus
// adapted user model, or a synthetic test function), refit the per-objective
// surrogates and grow the Pareto archive until the budget is spent.
//
// Seed tree (all children of the master seed, indexed by record number i):
//   derive_seed(master, kDesignOfExperiments)     Halton shift of the initial design
//   derive_seed(master, kEvaluation, i)           evaluation of record i
//   derive_seed(master, kAcquisition, i)          proposal producing record i
//   derive_seed(master, kHyperparameters, i)      surrogate refit after record i
//   derive_seed(master, kMetaTraining)            meta-training of the user model
// Inside an evaluation, adaptation uses derive_seed(s, kAdaptation) and
// episode e uses derive_seed(s, kEvaluation, e).

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cid/config.hpp"
#include "cid/gp.hpp"
#include "cid/mobo.hpp"
#include "cid/pareto.hpp"
#include "cid/user.hpp"

namespace cid::orchestrator {

struct EpisodeSummary {
  double discounted_return = 0.0;
  bool success = false;
  double time_to_activation = -1.0;  // s, negative when never activated

  bool operator==(const EpisodeSummary&) const = default;
};

struct Evaluation {
  pareto::ObjectiveVector objectives;
  std::vector<EpisodeSummary> episodes;
};

struct EvaluationRecord {
  std::uint64_t id = 0;  // equals the iteration index
  int iteration = 0;
  std::vector<double> design;
  pareto::ObjectiveVector objectives;
  std::uint64_t evaluation_seed = 0;
  std::uint64_t acquisition_seed = 0;  // 0 for initial-design records
  std::vector<EpisodeSummary> episodes;
  bool failed = false;  // evaluation raised; objectives are the worst case
  bool perturbed = false;
  bool exploration_fallback = false;
  std::string error;

  bool operator==(const EvaluationRecord&) const = default;
};

/// Turns a design into objective values (all minimized).
class ObjectiveProvider {
 public:
  virtual ~ObjectiveProvider() = default;

  virtual mobo::Bounds bounds() const = 0;
  virtual std::vector<std::string> design_names() const = 0;
  virtual std::vector<std::string> objective_names() const = 0;
  /// Objectives recorded for a failed evaluation.
  virtual pareto::ObjectiveVector worst_case() const = 0;
  /// Throws std::invalid_argument for a design outside bounds().
  virtual Evaluation evaluate(std::span<const double> design, std::uint64_t seed) const = 0;
};

/// Synthetic test function; bypasses the simulator and the user model.
class SyntheticProvider final : public ObjectiveProvider {
 public:
  explicit SyntheticProvider(problems::SyntheticProblem problem);

  mobo::Bounds bounds() const override;
  std::vector<std::string> design_names() const override;
  std::vector<std::string> objective_names() const override;
  pareto::ObjectiveVector worst_case() const override;
  Evaluation evaluate(std::span<const double> design, std::uint64_t seed) const override;

  const problems::SyntheticProblem& problem() const noexcept { return problem_; }

 private:
  problems::SyntheticProblem problem_;
};

/// Renders the design with design_to_fdvv, adapts the meta-policy to it and
/// measures the configured objectives over evaluation rollouts.
class SimulatedButtonProvider final : public ObjectiveProvider {
 public:
  SimulatedButtonProvider(const CidConfig& config, user::MetaPolicy meta);

  mobo::Bounds bounds() const override;
  std::vector<std::string> design_names() const override;
  std::vector<std::string> objective_names() const override;
  pareto::ObjectiveVector worst_case() const override;
  Evaluation evaluate(std::span<const double> design, std::uint64_t seed) const override;

  const user::MetaPolicy& meta() const noexcept { return meta_; }

 private:
  DesignSpace space_;
  std::vector<ObjectiveKind> kinds_;
  user::MetaPolicy meta_;
  int episodes_;
  int horizon_;
  int dwell_limit_;
};

/// Adapt-and-evaluate a single design:
///   completion_time_s  mean time to the successful release (horizon if none)
///   error_rate         fraction of failed episodes
///   effort             mean integrated squared commanded force, N^2 s
/// Throws std::invalid_argument for an invalid design or episodes < 1.
Evaluation evaluate_design(const button::ButtonDesignParams& design, const user::MetaPolicy& meta,
                           std::span<const ObjectiveKind> objectives, int episodes, int horizon,
                           int dwell_limit, std::uint64_t seed);

/// Meta-policy settings and task distribution implied by a configuration.
user::TaskDistribution task_distribution(const CidConfig& config);
user::MetaTrainOptions meta_train_options(const CidConfig& config);
user::MetaPolicy train_user_model(const CidConfig& config,
                                  const std::function<void(int, double)>& on_iteration = {});

std::unique_ptr<ObjectiveProvider> make_synthetic_provider(const CidConfig& config);

struct RunState {
  CidConfig config;
  std::string fingerprint;
  std::vector<EvaluationRecord> records;
  std::vector<gp::KernelSpec> kernels;  // one per objective, empty before the first fit
  std::vector<double> reference;        // frozen after the initial design
  int iteration = 0;                    // completed optimizer steps
  std::uint64_t seed_cursor = 0;        // index of the next record's seeds
  std::vector<double> hv_history;       // archive hypervolume after each step (index 0: initial design)

  // Derived from the fields above; rebuilt on load.
  std::vector<gp::ObjectiveModel> models;

  pareto::ParetoArchive archive() const;
  bool initial_design_complete() const;
  bool budget_exhausted() const;
  std::size_t total_evaluations() const;
};

/// Fresh state for `config` with no records.
RunState initial_state(const CidConfig& config);

/// Refit every per-objective surrogate from the records. Hyperparameters are
/// re-optimized when `reoptimize` is set or no kernels are stored yet;
/// otherwise the stored kernels are reused.
void refit_models(RunState& state, bool reoptimize);

/// Componentwise max of `observations` plus `margin` times the observed range
/// (or times max(1, |max|) when the range is zero).
std::vector<double> automatic_reference(const std::vector<pareto::ObjectiveVector>& observations,
                                        double margin);

/// Evaluate the next initial-design point. Throws cid::StateError once the
/// initial design is complete.
void initial_design_step(RunState& state, const ObjectiveProvider& provider);

/// One optimizer iteration: propose, evaluate, append, refit, extend the HV
/// history. Throws cid::StateError when the budget is exhausted or the
/// initial design is incomplete.
void cid_step(RunState& state, const ObjectiveProvider& provider);

struct RunOptions {
  std::optional<int> stop_after_iterations;  // interrupt once this many steps are done
  std::function<void(const RunState&)> persist;  // called after every new record
};

struct RunResult {
  RunState state;
  pareto::ParetoArchive archive;
  bool complete = false;
};

/// Run (or resume) the loop until the budget is spent or the stop point is
/// reached. A resume state must carry the fingerprint of `config`; otherwise
/// std::invalid_argument is thrown.
RunResult run(const CidConfig& config, const ObjectiveProvider& provider,
              std::optional<RunState> resume = std::nullopt, const RunOptions& options = {});

}  // namespace cid::orchestrator
