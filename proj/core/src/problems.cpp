#include "cid/problems.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace cid::problems {

std::string_view problem_name(ProblemId id) noexcept {
  switch (id) {
    case ProblemId::kSchaffer: return "schaffer";
    case ProblemId::kZdt1: return "zdt1";
  }
  return "unknown";
}

std::optional<ProblemId> parse_problem(std::string_view name) noexcept {
  if (name == "schaffer") return ProblemId::kSchaffer;
  if (name == "zdt1") return ProblemId::kZdt1;
  return std::nullopt;
}

SyntheticProblem make_problem(ProblemId id, std::size_t dim) {
  SyntheticProblem p;
  p.id = id;
  switch (id) {
    case ProblemId::kSchaffer:
      if (dim != 0 && dim != 1) throw std::invalid_argument("schaffer: dimension must be 1");
      p.bounds = {{kSchafferLower}, {kSchafferUpper}};
      break;
    case ProblemId::kZdt1:
      if (dim == 0) dim = kZdt1DefaultDim;
      if (dim < 2) throw std::invalid_argument("zdt1: dimension must be >= 2");
      p.bounds = {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
      break;
  }
  return p;
}

pareto::ObjectiveVector SyntheticProblem::evaluate(std::span<const double> x) const {
  if (x.size() != dim()) {
    throw std::invalid_argument(fmt::format("{}: expected {} design variables, got {}",
                                            problem_name(id), dim(), x.size()));
  }
  switch (id) {
    case ProblemId::kSchaffer:
      return {x[0] * x[0], (x[0] - 2.0) * (x[0] - 2.0)};
    case ProblemId::kZdt1: {
      double tail = 0.0;
      for (std::size_t j = 1; j < x.size(); ++j) tail += x[j];
      const double g = 1.0 + 9.0 * tail / static_cast<double>(x.size() - 1);
      const double f1 = x[0];
      return {f1, g * (1.0 - std::sqrt(f1 / g))};
    }
  }
  throw std::logic_error("unreachable problem id");
}

std::vector<pareto::ObjectiveVector> SyntheticProblem::true_front(std::size_t resolution) const {
  if (resolution < 2) throw std::invalid_argument("true_front: resolution must be >= 2");
  std::vector<pareto::ObjectiveVector> front;
  front.reserve(resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    const double s = static_cast<double>(i) / static_cast<double>(resolution - 1);
    switch (id) {
      case ProblemId::kSchaffer: {
        // The Pareto set is x in [0, 2].
        const double x = 2.0 * s;
        front.push_back({x * x, (x - 2.0) * (x - 2.0)});
        break;
      }
      case ProblemId::kZdt1:
        front.push_back({s, 1.0 - std::sqrt(s)});
        break;
    }
  }
  return front;
}

double SyntheticProblem::true_front_hypervolume(std::span<const double> ref) const {
  if (ref.size() != objectives()) throw std::invalid_argument("true_front_hypervolume: reference must have 2 entries");
  // Both fronts start at f1 = 0. G(f1) is the best f2 attainable with an f1
  // no larger than the argument; it is 0 past the end of the front.
  const auto attainable_f2 = [this](double f1) {
    switch (id) {
      case ProblemId::kSchaffer: return f1 < 4.0 ? (std::sqrt(f1) - 2.0) * (std::sqrt(f1) - 2.0) : 0.0;
      case ProblemId::kZdt1: return f1 < 1.0 ? 1.0 - std::sqrt(f1) : 0.0;
    }
    return 0.0;
  };
  if (ref[0] <= 0.0 || ref[1] <= 0.0) return 0.0;
  // Midpoint rule; the sqrt cusp at 0 limits convergence to O(h^1.5).
  const int panels = 1 << 21;
  const double h = ref[0] / panels;
  double area = 0.0;
  for (int i = 0; i < panels; ++i) area += std::max(0.0, ref[1] - attainable_f2((i + 0.5) * h));
  return area * h;
}

}  // namespace cid::problems
