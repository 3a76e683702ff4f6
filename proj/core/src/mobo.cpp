#include "cid/mobo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include <fmt/format.h>

#include "cid/rng.hpp"

namespace cid::mobo {

void Bounds::validate() const {
  if (lower.size() != upper.size()) {
    throw std::invalid_argument("bounds: lower and upper have different lengths");
  }
  if (lower.empty()) throw std::invalid_argument("bounds: zero-dimensional design space");
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (!std::isfinite(lower[j]) || !std::isfinite(upper[j])) {
      throw std::invalid_argument(fmt::format("bounds: dimension {} is not finite", j));
    }
    if (lower[j] > upper[j]) {
      throw std::invalid_argument(
          fmt::format("bounds: dimension {} is empty ({} > {})", j, lower[j], upper[j]));
    }
  }
}

std::vector<double> Bounds::to_unit(std::span<const double> x) const {
  std::vector<double> u(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double w = upper[j] - lower[j];
    u[j] = w > 0.0 ? (x[j] - lower[j]) / w : 0.0;
  }
  return u;
}

std::vector<double> Bounds::from_unit(std::span<const double> u) const {
  std::vector<double> x(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    x[j] = std::clamp(lower[j] + u[j] * (upper[j] - lower[j]), lower[j], upper[j]);
  }
  return x;
}

bool Bounds::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!(x[j] >= lower[j] && x[j] <= upper[j])) return false;
  }
  return true;
}

Eigen::MatrixXd ehvi_draws(std::size_t objectives, std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(objectives));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = normal(rng);
  }
  return z;
}

namespace {

void validate_ref(std::span<const double> ref, std::size_t m,
                  const std::vector<pareto::ObjectiveVector>& front) {
  if (ref.size() != m || m < 2) {
    throw std::invalid_argument(
        fmt::format("ehvi: reference point has {} entries, expected {} (>= 2)", ref.size(), m));
  }
  for (double r : ref) {
    if (!std::isfinite(r)) throw std::invalid_argument("ehvi: non-finite reference point");
  }
  for (const auto& p : front) {
    if (p.size() != m) throw std::invalid_argument("ehvi: archive objective length mismatch");
  }
}

// Archive staircase in 2-D, sorted by the first objective, restricted to the
// reference box.
struct Front2d {
  std::vector<std::pair<double, double>> pts;

  Front2d(const std::vector<pareto::ObjectiveVector>& front, std::span<const double> ref) {
    for (const auto& p : front) {
      if (p[0] < ref[0] && p[1] < ref[1]) pts.emplace_back(p[0], p[1]);
    }
    std::sort(pts.begin(), pts.end());
  }

  double improvement(double y0, double y1, double r0, double r1) const {
    if (!(y0 < r0 && y1 < r1)) return 0.0;
    // Sweep the archive clipped to [y, ref]; clipping keeps the sort order.
    double covered = 0.0;
    double best = r1;
    for (const auto& [a, b] : pts) {
      if (a <= y0 && b <= y1) return 0.0;
      const double x = std::max(a, y0);
      const double y = std::max(b, y1);
      if (x >= r0) break;
      if (y < best) {
        covered += (r0 - x) * (best - y);
        best = y;
      }
    }
    return std::max(0.0, (r0 - y0) * (r1 - y1) - covered);
  }
};

double ehvi_impl(std::span<const gp::ObjectiveModel> models, std::span<const double> unit_candidate,
                 const std::vector<pareto::ObjectiveVector>& front, std::span<const double> ref,
                 const Eigen::MatrixXd& draws, const Front2d* front2d) {
  const std::size_t m = models.size();
  std::vector<double> mean(m), sd(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto p = models[j].predict(unit_candidate);
    mean[j] = p.mean;
    sd[j] = std::sqrt(std::max(0.0, p.variance));
  }
  const Eigen::Index s = draws.rows();
  double total = 0.0;
  std::vector<double> y(m);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < m; ++j) y[j] = mean[j] + sd[j] * draws(i, static_cast<Eigen::Index>(j));
    total += front2d != nullptr ? front2d->improvement(y[0], y[1], ref[0], ref[1])
                                : pareto::hypervolume_improvement(front, y, ref);
  }
  return total / static_cast<double>(s);
}

void check_models(std::span<const gp::ObjectiveModel> models, std::size_t dim) {
  if (models.empty()) throw std::invalid_argument("ehvi: no objective models");
  for (const auto& mdl : models) {
    if (mdl.gp.dim() != dim) {
      throw std::invalid_argument(fmt::format(
          "ehvi: model dimension {} differs from candidate dimension {}", mdl.gp.dim(), dim));
    }
  }
}

}  // namespace

double ehvi_with_draws(std::span<const gp::ObjectiveModel> models,
                       std::span<const double> unit_candidate,
                       const std::vector<pareto::ObjectiveVector>& front,
                       std::span<const double> ref, const Eigen::MatrixXd& draws) {
  check_models(models, unit_candidate.size());
  validate_ref(ref, models.size(), front);
  if (draws.rows() < 1 || static_cast<std::size_t>(draws.cols()) != models.size()) {
    throw std::invalid_argument("ehvi: draw matrix shape does not match the models");
  }
  if (models.size() == 2) {
    Front2d f2(front, ref);
    return ehvi_impl(models, unit_candidate, front, ref, draws, &f2);
  }
  return ehvi_impl(models, unit_candidate, front, ref, draws, nullptr);
}

double ehvi(std::span<const gp::ObjectiveModel> models, std::span<const double> unit_candidate,
            const std::vector<pareto::ObjectiveVector>& front, std::span<const double> ref,
            std::size_t sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw std::invalid_argument("ehvi: sample_count must be >= 1");
  return ehvi_with_draws(models, unit_candidate, front, ref,
                         ehvi_draws(models.size(), sample_count, seed));
}

std::uint64_t acquisition_draw_seed(std::uint64_t seed) noexcept { return derive_seed(seed, {1}); }

std::vector<std::vector<double>> scan_candidates(const Bounds& bounds, std::size_t scan_count,
                                                 std::uint64_t seed) {
  bounds.validate();
  HaltonSequence halton(bounds.dim(), derive_seed(seed, {2}));
  std::vector<std::vector<double>> out;
  out.reserve(scan_count);
  for (std::size_t i = 0; i < scan_count; ++i) out.push_back(bounds.from_unit(halton.point(i)));
  return out;
}

Proposal propose_next(const ProposalRequest& req) {
  req.bounds.validate();
  if (req.scan_count < 1) throw std::invalid_argument("propose_next: scan_count must be >= 1");
  if (req.sample_count < 1) throw std::invalid_argument("propose_next: sample_count must be >= 1");
  const std::size_t d = req.bounds.dim();
  check_models(req.models, d);

  std::vector<std::vector<double>> candidates = scan_candidates(req.bounds, req.scan_count, req.seed);
  const std::size_t n_scan = candidates.size();

  Rng perturb_rng(derive_seed(req.seed, {3}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<pareto::ObjectiveVector> front;
  if (req.archive != nullptr) {
    front = req.archive->objectives();
    for (const auto& e : req.archive->entries()) {
      std::vector<double> u = req.bounds.to_unit(e.design);
      for (double& v : u) v = std::clamp(v + kPerturbationScale * normal(perturb_rng), 0.0, 1.0);
      candidates.push_back(req.bounds.from_unit(u));
    }
  }

  const Eigen::MatrixXd draws =
      ehvi_draws(req.models.size(), req.sample_count, acquisition_draw_seed(req.seed));
  validate_ref(req.ref, req.models.size(), front);

  Proposal best;
  best.ehvi = -1.0;
  std::optional<Front2d> f2;
  if (req.models.size() == 2) f2.emplace(front, req.ref);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto u = req.bounds.to_unit(candidates[i]);
    const double score = ehvi_impl(req.models, u, front, req.ref, draws, f2 ? &*f2 : nullptr);
    if (score > best.ehvi) {
      best.ehvi = score;
      best.candidate_index = i;
    }
  }

  if (best.ehvi <= 0.0) {
    best.exploration_fallback = true;
    best.ehvi = 0.0;
    double best_var = -1.0;
    for (std::size_t i = 0; i < n_scan; ++i) {
      const auto u = req.bounds.to_unit(candidates[i]);
      double var = 0.0;
      for (const auto& mdl : req.models) var += mdl.gp.predict(u).variance;
      if (var > best_var) {
        best_var = var;
        best.candidate_index = i;
      }
    }
  }
  best.design = candidates[best.candidate_index];

  const bool duplicate = std::any_of(req.evaluated.begin(), req.evaluated.end(), [&](const auto& x) {
    if (x.size() != d) return false;
    for (std::size_t j = 0; j < d; ++j) {
      if (std::abs(x[j] - best.design[j]) > kDuplicateTolerance) return false;
    }
    return true;
  });
  if (duplicate) {
    Rng dup_rng(derive_seed(req.seed, {4}));
    std::normal_distribution<double> dup_normal(0.0, 1.0);
    std::vector<double> u = req.bounds.to_unit(best.design);
    for (double& v : u) v = std::clamp(v + kPerturbationScale * dup_normal(dup_rng), 0.0, 1.0);
    best.design = req.bounds.from_unit(u);
    best.perturbed = true;
  }
  return best;
}

}  // namespace cid::mobo
