#pragma once

// Gaussian policy over a commanded press force with an MLP mean head.

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cid/rng.hpp"

namespace cid::user {

inline constexpr std::size_t kObsDim = 5;
inline constexpr double kMinAction = 0.0;  // N
inline constexpr double kMaxAction = 6.0;  // N

/// displacement / travel, velocity / 100 mm/s, felt force / 4.4 N,
/// delayed activation cue, remaining fraction of the horizon.
using ObsVector = std::array<double, kObsDim>;

struct PolicyArch {
  std::vector<int> hidden{32, 32};

  /// Network weights and biases plus the trailing global log-std.
  std::size_t param_count() const;
  bool operator==(const PolicyArch&) const = default;
};

/// Flat parameter layout: for each layer, a row-major (out x in) weight block
/// followed by the bias; the last entry is the log standard deviation.
struct PolicyParams {
  PolicyArch arch;
  Eigen::VectorXd values;

  static PolicyParams zeros(const PolicyArch& arch, double log_std = -0.5);
  /// Scaled-uniform (Glorot) hidden weights, small output layer, zero biases.
  static PolicyParams random(const PolicyArch& arch, std::uint64_t seed, double log_std = -0.5);

  double log_std() const { return values[values.size() - 1]; }
  bool operator==(const PolicyParams& o) const { return arch == o.arch && values == o.values; }
};

struct ActionSample {
  double action = 0.0;  // clamped to [kMinAction, kMaxAction]
  double raw = 0.0;     // pre-clamp Gaussian draw
  double mean = 0.0;
  double log_prob = 0.0;  // of `raw`
};

double policy_mean(const PolicyParams& params, const ObsVector& obs);

double gaussian_log_prob(double x, double mean, double log_std);

/// Draw an action. Throws std::invalid_argument for non-finite observations.
ActionSample policy_act(const PolicyParams& params, const ObsVector& obs, Rng& rng);

/// grad += weight * d/dtheta log pi(raw | obs).
void accumulate_log_prob_gradient(const PolicyParams& params, const ObsVector& obs, double raw,
                                  double weight, Eigen::Ref<Eigen::VectorXd> grad);

}  // namespace cid::user
