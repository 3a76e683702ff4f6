#pragma once

// Run configuration and its sectioned key-value text form.
//
//   [design_space]  per-parameter bounds, e.g. travel_min / travel_max
//   [objectives]    list, provider, problem, problem_dim
//   [optimizer]     initial design, acquisition and surrogate settings
//   [user_model]    meta-training, adaptation and rollout settings
//   [simulator]     press dynamics settings
//   [run]           budget and master seed
//
// Every key has a default, so an empty document is a valid configuration.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cid/fdvv.hpp"
#include "cid/gp.hpp"
#include "cid/mobo.hpp"
#include "cid/problems.hpp"

namespace cid {

enum class ObjectiveKind { kCompletionTime, kErrorRate, kEffort };
enum class ProviderKind { kSimulatedButton, kSynthetic };

std::string_view objective_name(ObjectiveKind kind) noexcept;
std::string_view provider_name(ProviderKind kind) noexcept;

struct DesignSpace {
  button::ButtonDesignParams lower{0.5, 0.25, 0.5, 0.0, 0.0, 0.0005};
  button::ButtonDesignParams upper{5.0, 0.85, 4.4, 0.8, 1.0, 0.005};

  mobo::Bounds bounds() const;
  bool operator==(const DesignSpace&) const = default;
};

struct ObjectiveSettings {
  std::vector<ObjectiveKind> kinds{ObjectiveKind::kCompletionTime, ObjectiveKind::kErrorRate,
                                   ObjectiveKind::kEffort};
  ProviderKind provider = ProviderKind::kSimulatedButton;
  problems::ProblemId problem = problems::ProblemId::kSchaffer;
  int problem_dim = 0;  // 0 selects the problem's default dimension

  bool operator==(const ObjectiveSettings&) const = default;
};

struct OptimizerSettings {
  int initial_designs = 8;
  int scan_count = 512;
  int mc_samples = 128;
  int restarts = 8;
  int refit_interval = 5;
  double reference_margin = 0.1;  // fraction of the observed range added to the max
  std::vector<double> reference;  // explicit reference point; empty selects automatic
  gp::KernelFamily kernel = gp::KernelFamily::kMatern52;

  bool operator==(const OptimizerSettings&) const = default;
};

struct UserModelSettings {
  int meta_iterations = 300;
  double meta_lr = 0.01;
  int tasks_per_iteration = 8;
  int post_adaptation_rollouts = 4;
  double inner_lr = 0.05;
  int adapt_episodes = 8;
  int batch_size = 4;
  int episodes = 20;  // evaluation rollouts per design
  int horizon = 1000;
  int dwell_limit = 400;
  int sensory_delay = 50;
  double gamma = 0.995;
  std::vector<int> hidden{32, 32};

  bool operator==(const UserModelSettings&) const = default;
};

struct SimulatorSettings {
  double mass_kg = 0.005;
  int substeps = 4;

  bool operator==(const SimulatorSettings&) const = default;
};

struct RunSettings {
  int budget = 40;
  std::uint64_t seed = 1;

  bool operator==(const RunSettings&) const = default;
};

struct CidConfig {
  DesignSpace design_space;
  ObjectiveSettings objectives;
  OptimizerSettings optimizer;
  UserModelSettings user_model;
  SimulatorSettings simulator;
  RunSettings run;

  /// Throws cid::ConfigError naming the offending `section.key`.
  void validate() const;

  std::size_t objective_count() const;

  bool operator==(const CidConfig&) const = default;
};

/// Parse a configuration document, filling defaults. Throws cid::ConfigError
/// for syntax errors (located by line), unknown sections or keys, malformed
/// values and range violations (located by `section.key`).
CidConfig parse_config(std::string_view text);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const CidConfig& config);

/// Hex digest of the canonical text form, used to match persisted runs.
std::string config_fingerprint(const CidConfig& config);

}  // namespace cid
