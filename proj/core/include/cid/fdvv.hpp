#pragma once

// Force-displacement-velocity-vibration (FDVV) button model.
//
// A button is characterized by one force-displacement curve per sampled
// press velocity plus a vibration transient fired at the activation point.
// Forces are in N, displacements in mm, velocities in mm/s.

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "cid/bspline.hpp"
#include "cid/trace.hpp"

namespace cid::button {

inline constexpr double kMaxRenderableForce = 4.4;  // N
inline constexpr double kMinVibrationHz = 50.0;
inline constexpr double kMaxVibrationHz = 20000.0;

struct Vibration {
  double frequency_hz = 125.0;
  double amplitude = 0.0;
  double decay_per_s = 200.0;

  /// Exponentially decaying sinusoid, sampled `k` steps of `dt` after onset.
  double sample(int k, double dt) const;
  /// Steps until the envelope falls below 1% of its onset value.
  int duration_steps(double dt) const;

  bool operator==(const Vibration&) const = default;
};

struct FdvvModel {
  std::vector<double> velocity_levels;  // ascending, mm/s
  std::vector<BSpline> fd_curves;       // force vs displacement, one per level
  double travel = 0.0;
  double activation_disp = 0.0;
  double release_disp = 0.0;
  Vibration vibration;
  double max_force = kMaxRenderableForce;
  double damping = 0.002;  // N s/mm

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;

  bool operator==(const FdvvModel&) const = default;
};

/// The six-dimensional design space explored by the optimizer.
struct ButtonDesignParams {
  double travel = 2.0;               // mm, [0.5, 5]
  double activation_fraction = 0.5;  // (0.2, 0.9)
  double peak_force = 1.5;           // N, (0.3, 4.4]
  double snap_ratio = 0.3;           // [0, 0.8]
  double velocity_stiffening = 0.2;  // fractional force increase per 100 mm/s, [0, 1]
  double damping = 0.002;            // N s/mm, > 0

  static constexpr std::size_t kDim = 6;
  static constexpr std::array<std::string_view, kDim> kNames{
      "travel", "activation_fraction", "peak_force", "snap_ratio", "velocity_stiffening", "damping"};

  std::array<double, kDim> to_array() const;
  static ButtonDesignParams from_array(std::span<const double> v);

  /// Throws std::invalid_argument naming the first out-of-bounds field.
  void validate() const;

  bool operator==(const ButtonDesignParams&) const = default;
};

/// Press speeds at which design_to_fdvv samples the FD curves.
inline constexpr std::array<double, 3> kDesignVelocityLevels{10.0, 100.0, 300.0};
inline constexpr int kDesignInteriorKnots = 40;
inline constexpr double kReleaseRatio = 0.7;

/// Unscaled tactile profile: linear rise to the peak at the activation point,
/// drop to peak (1 - snap) over a quarter of the remaining travel, then a
/// linear rise back to the peak at bottom-out.
double canonical_profile(const ButtonDesignParams& params, double displacement);

/// Render a design. Each velocity level v scales the profile by
/// (1 + velocity_stiffening v / 100); curves are cubic splines whose control
/// points sample the scaled profile at the Greville abscissae, clipped to the
/// renderable force ceiling. The control polygon bounds the curve, so curves
/// stay monotone when the profile is and never exceed the ceiling.
FdvvModel design_to_fdvv(const ButtonDesignParams& params);

/// Force of the two curves bracketing |velocity|, linearly interpolated
/// (clamped to the outermost curve beyond the sampled range), then clamped to
/// [0, max_force]. Throws std::invalid_argument for displacement outside
/// [0, travel].
double force_at(const FdvvModel& model, double displacement, double velocity);

struct FdvvFitOptions {
  int degree = 3;
  std::vector<int> knot_candidates = {0, 2, 4, 6, 8, 10, 12, 14, 16, 20, 24, 28, 32, 40};
  double damping = 0.002;             // not observable from FD traces
  double release_ratio = kReleaseRatio;
  double fallback_activation_fraction = 0.6;  // used when neither a tactile peak nor a click shows
  double min_level_separation = 0.05;         // relative gap between velocity levels
  double min_speed_fraction = 0.5;  // loading samples slower than this share of the level are dropped
  double max_force = kMaxRenderableForce;
};

/// Median absolute press velocity of a group, over samples moving faster than
/// 10% of the group's peak speed.
double group_velocity(const std::vector<FdTrace>& group);

/// Fit a model from traces grouped by press speed (at least two groups,
/// each with at least one already-filtered trace).
FdvvModel fit_fdvv(const std::vector<std::vector<FdTrace>>& groups,
                   const FdvvFitOptions& options = {});

}  // namespace cid::button
