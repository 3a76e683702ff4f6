#pragma once

// Synthetic bi-objective test problems used to benchmark the optimizer in
// isolation from the button simulator and the user model.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cid/mobo.hpp"
#include "cid/pareto.hpp"

namespace cid::problems {

enum class ProblemId { kSchaffer, kZdt1 };

std::string_view problem_name(ProblemId id) noexcept;
std::optional<ProblemId> parse_problem(std::string_view name) noexcept;

struct SyntheticProblem {
  ProblemId id = ProblemId::kSchaffer;
  mobo::Bounds bounds;

  std::size_t dim() const noexcept { return bounds.dim(); }
  static constexpr std::size_t objectives() noexcept { return 2; }

  /// Throws std::invalid_argument on a dimension mismatch.
  pareto::ObjectiveVector evaluate(std::span<const double> x) const;

  /// `resolution` points sampled evenly along the analytic Pareto front.
  std::vector<pareto::ObjectiveVector> true_front(std::size_t resolution) const;

  /// Area dominated by the analytic front inside the box bounded by `ref`,
  /// integrated numerically to about 1e-9 relative accuracy.
  double true_front_hypervolume(std::span<const double> ref) const;
};

/// Schaffer N.1: f1 = x^2, f2 = (x - 2)^2 on x in [-1, 3]; `dim` must be 1.
/// ZDT1 on [0, 1]^dim with dim >= 2.
SyntheticProblem make_problem(ProblemId id, std::size_t dim = 0);

inline constexpr double kSchafferLower = -1.0;
inline constexpr double kSchafferUpper = 3.0;
inline constexpr std::size_t kZdt1DefaultDim = 6;

}  // namespace cid::problems
