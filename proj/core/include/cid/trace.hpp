#pragma once

#include <vector>

namespace cid::button {

struct TraceSample {
  double t_s = 0.0;
  double disp_mm = 0.0;
  double force_n = 0.0;
  double vib = 0.0;  // dimensionless acceleration proxy

  bool operator==(const TraceSample&) const = default;
};

/// Force/displacement/vibration capture of one press.
struct FdTrace {
  std::vector<TraceSample> samples;
  double sample_rate = 1000.0;  // Hz

  /// Throws std::invalid_argument if time is not strictly increasing, the rate
  /// is not positive, or a displacement is negative.
  void validate() const;
};

}  // namespace cid::button
