#pragma once

#include <span>
#include <vector>

#include "cid/trace.hpp"

namespace cid::button {

/// Second-order Butterworth low-pass section (bilinear transform, prewarped).
struct Biquad {
  double b0, b1, b2, a1, a2;
};

Biquad butterworth_lowpass(double cutoff_hz, double sample_rate_hz);

/// Forward-backward (zero-phase) application of `section` with steady-state
/// initial conditions and odd-reflection padding at both ends.
std::vector<double> filtfilt(const Biquad& section, std::span<const double> x);

/// Zero-phase low-pass of the force and displacement channels. The vibration
/// channel and timestamps are left untouched; displacement stays >= 0.
/// Requires at least 8 samples and 0 < cutoff < sample_rate / 2.
FdTrace low_pass_filter(const FdTrace& trace, double cutoff_hz);

/// Causal convolution truncated to x.size() samples.
std::vector<double> convolve_causal(std::span<const double> x, std::span<const double> h);

struct CompensationResult {
  std::vector<double> drive;
  double residual_rmse = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;  // RMSE after each iteration
};

/// Iteratively pre-distort `target` so that conv(drive, h) reproduces it.
///
/// The drive starts at target / sum(h) (target / h[0] when the taps sum to
/// zero) and is refined by drive += mu (target - conv(drive, h)) with
/// mu = 0.5 / |h|_1. Iteration 1 is the initial guess. A step that would
/// raise the residual is retried with half the gain, so the residual history
/// never increases. Stops at residual RMSE <= tol or after max_iters.
CompensationResult compensate_drive(std::span<const double> target,
                                    std::span<const double> impulse_response, int max_iters,
                                    double tol);

}  // namespace cid::button
