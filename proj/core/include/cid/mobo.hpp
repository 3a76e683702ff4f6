#pragma once

// Acquisition: Monte-Carlo expected hypervolume improvement over independent
// per-objective GP posteriors, maximized by a seeded low-discrepancy scan.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cid/gp.hpp"
#include "cid/pareto.hpp"

namespace cid::mobo {

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dim() const noexcept { return lower.size(); }
  /// Throws std::invalid_argument when lengths differ, a bound is not finite,
  /// or lower > upper anywhere.
  void validate() const;
  std::vector<double> to_unit(std::span<const double> x) const;
  std::vector<double> from_unit(std::span<const double> u) const;
  bool contains(std::span<const double> x) const;
};

/// Standard normal draws shared by every candidate of one acquisition pass
/// (common random numbers), laid out samples x objectives.
Eigen::MatrixXd ehvi_draws(std::size_t objectives, std::size_t samples, std::uint64_t seed);

/// MC estimate of E[max(0, HV(front + {Y}) - HV(front))] with Y drawn from
/// the posteriors at `unit_candidate`. Throws std::invalid_argument on a
/// malformed reference point or when the models disagree on dimension.
double ehvi(std::span<const gp::ObjectiveModel> models, std::span<const double> unit_candidate,
            const std::vector<pareto::ObjectiveVector>& front, std::span<const double> ref,
            std::size_t sample_count, std::uint64_t seed);

double ehvi_with_draws(std::span<const gp::ObjectiveModel> models,
                       std::span<const double> unit_candidate,
                       const std::vector<pareto::ObjectiveVector>& front,
                       std::span<const double> ref, const Eigen::MatrixXd& draws);

struct ProposalRequest {
  std::span<const gp::ObjectiveModel> models;
  Bounds bounds;
  const pareto::ParetoArchive* archive = nullptr;
  std::vector<std::vector<double>> evaluated;  // every design observed so far
  std::vector<double> ref;
  std::size_t scan_count = 512;
  std::size_t sample_count = 128;
  std::uint64_t seed = 0;
};

struct Proposal {
  std::vector<double> design;
  double ehvi = 0.0;
  std::size_t candidate_index = 0;  // into scan + perturbation list
  bool exploration_fallback = false;
  bool perturbed = false;  // nudged away from an already-evaluated design
};

/// The scanned candidates (design units) used by propose_next for this seed.
std::vector<std::vector<double>> scan_candidates(const Bounds& bounds, std::size_t scan_count,
                                                 std::uint64_t seed);

/// Seed used for the EHVI draws of a propose_next call with `seed`.
std::uint64_t acquisition_draw_seed(std::uint64_t seed) noexcept;

/// Fraction of the unit range used as the standard deviation of archive
/// perturbations.
inline constexpr double kPerturbationScale = 0.05;
inline constexpr double kDuplicateTolerance = 1e-9;

/// Scores scan_count Halton candidates plus one Gaussian perturbation of each
/// archive design and returns the EHVI argmax (lowest index on ties). When
/// every score is zero it returns the scanned candidate with the largest
/// summed posterior variance instead.
Proposal propose_next(const ProposalRequest& request);

}  // namespace cid::mobo
