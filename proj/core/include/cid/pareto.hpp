#pragma once

// Pareto bookkeeping. All objectives are minimized.

#include <cstdint>
#include <span>
#include <vector>

namespace cid::pareto {

using ObjectiveVector = std::vector<double>;

/// a <= b componentwise and a < b in at least one component.
bool dominates(std::span<const double> a, std::span<const double> b);

/// a <= b componentwise.
bool weakly_dominates(std::span<const double> a, std::span<const double> b);

/// Indices (ascending) of the nondominated members of `points`. Exact
/// duplicates are all kept.
std::vector<std::size_t> pareto_front(const std::vector<ObjectiveVector>& points);

struct HypervolumeResult {
  double value = 0.0;
  double std_error = 0.0;  // nonzero only for the Monte-Carlo path
  bool exact = true;
};

inline constexpr std::size_t kMonteCarloHvSamples = 1'000'000;

/// Lebesgue measure of the union of boxes [p, ref]. Points not strictly
/// better than `ref` in every objective contribute nothing.
///
/// m = 2 uses a sorted sweep, m = 3 slices along the last objective, and
/// m >= 4 falls back to seeded Monte-Carlo over the bounding box.
HypervolumeResult hypervolume_detailed(const std::vector<ObjectiveVector>& points,
                                       std::span<const double> ref, std::uint64_t seed = 0,
                                       std::size_t mc_samples = kMonteCarloHvSamples);

double hypervolume(const std::vector<ObjectiveVector>& points, std::span<const double> ref);

/// HV(points + {y}) - HV(points), computed as the volume of [y, ref] minus the
/// hypervolume of the points clipped to that box.
double hypervolume_improvement(const std::vector<ObjectiveVector>& points,
                               std::span<const double> y, std::span<const double> ref);

struct ArchiveEntry {
  std::vector<double> design;
  ObjectiveVector objectives;
  std::uint64_t record_id = 0;
};

/// Mutually nondominated set of evaluated designs.
class ParetoArchive {
 public:
  ParetoArchive() = default;

  /// Build from arbitrary records, keeping only the nondominated ones.
  static ParetoArchive from_entries(const std::vector<ArchiveEntry>& entries);

  /// Returns true when the entry joined the archive. Entries it dominates are
  /// evicted. Record ids must be unique.
  bool insert(ArchiveEntry entry);

  const std::vector<ArchiveEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::vector<ObjectiveVector> objectives() const;

  /// True if no entry dominates another and record ids are unique.
  bool is_consistent() const;

 private:
  std::vector<ArchiveEntry> entries_;
};

}  // namespace cid::pareto
