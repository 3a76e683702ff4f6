#include "cid/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include <fmt/format.h>

#include "cid/rng.hpp"

namespace cid::pareto {

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(
        fmt::format("objective vectors have lengths {} and {}", a.size(), b.size()));
  }
}

// Points strictly inside the reference box, in the same order.
std::vector<const ObjectiveVector*> contributing(const std::vector<ObjectiveVector>& points,
                                                 std::span<const double> ref) {
  std::vector<const ObjectiveVector*> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    require_same_length(p, ref);
    bool inside = true;
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!(p[j] < ref[j])) {
        inside = false;
        break;
      }
    }
    if (inside) out.push_back(&p);
  }
  return out;
}

double sweep_2d(std::vector<std::pair<double, double>> pts, double r0, double r1) {
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  double best = r1;
  for (const auto& [x, y] : pts) {
    if (y < best) {
      area += (r0 - x) * (best - y);
      best = y;
    }
  }
  return area;
}

double exact_3d(std::vector<const ObjectiveVector*> pts, std::span<const double> ref) {
  std::sort(pts.begin(), pts.end(),
            [](const ObjectiveVector* a, const ObjectiveVector* b) { return (*a)[2] < (*b)[2]; });
  double volume = 0.0;
  std::vector<std::pair<double, double>> slice;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    slice.emplace_back((*pts[i])[0], (*pts[i])[1]);
    const double z = (*pts[i])[2];
    const double z_next = i + 1 < pts.size() ? (*pts[i + 1])[2] : ref[2];
    if (z_next > z) volume += sweep_2d(slice, ref[0], ref[1]) * (z_next - z);
  }
  return volume;
}

}  // namespace

bool dominates(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b);
  bool strict = false;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] > b[j]) return false;
    if (a[j] < b[j]) strict = true;
  }
  return strict;
}

bool weakly_dominates(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b);
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] > b[j]) return false;
  }
  return true;
}

std::vector<std::size_t> pareto_front(const std::vector<ObjectiveVector>& points) {
  if (points.empty()) throw std::invalid_argument("pareto_front: empty input");
  const std::size_t m = points.front().size();
  for (const auto& p : points) {
    if (p.size() != m) throw std::invalid_argument("pareto_front: non-uniform vector lengths");
  }
  // Any dominator of p precedes p lexicographically, so a single pass over the
  // sorted order that checks against the kept set is sufficient.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    bool dominated = false;
    for (std::size_t k : kept) {
      if (dominates(points[k], points[idx])) {
        dominated = true;
        break;
      }
    }
    if (!dominated) kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

HypervolumeResult hypervolume_detailed(const std::vector<ObjectiveVector>& points,
                                       std::span<const double> ref, std::uint64_t seed,
                                       std::size_t mc_samples) {
  const std::size_t m = ref.size();
  if (m < 2) throw std::invalid_argument("hypervolume: need at least 2 objectives");
  for (double r : ref) {
    if (!std::isfinite(r)) throw std::invalid_argument("hypervolume: non-finite reference point");
  }
  auto pts = contributing(points, ref);
  if (pts.empty()) return {};

  if (m == 2) {
    std::vector<std::pair<double, double>> xy;
    xy.reserve(pts.size());
    for (const auto* p : pts) xy.emplace_back((*p)[0], (*p)[1]);
    return {sweep_2d(std::move(xy), ref[0], ref[1]), 0.0, true};
  }
  if (m == 3) return {exact_3d(std::move(pts), ref), 0.0, true};

  std::vector<double> lo(ref.begin(), ref.end());
  for (const auto* p : pts) {
    for (std::size_t j = 0; j < m; ++j) lo[j] = std::min(lo[j], (*p)[j]);
  }
  double box = 1.0;
  for (std::size_t j = 0; j < m; ++j) box *= ref[j] - lo[j];

  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> s(m);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < mc_samples; ++k) {
    for (std::size_t j = 0; j < m; ++j) s[j] = lo[j] + (ref[j] - lo[j]) * unit(rng);
    for (const auto* p : pts) {
      if (weakly_dominates(*p, s)) {
        ++hits;
        break;
      }
    }
  }
  const double n = static_cast<double>(mc_samples);
  const double frac = static_cast<double>(hits) / n;
  return {box * frac, box * std::sqrt(frac * (1.0 - frac) / n), false};
}

double hypervolume(const std::vector<ObjectiveVector>& points, std::span<const double> ref) {
  return hypervolume_detailed(points, ref).value;
}

double hypervolume_improvement(const std::vector<ObjectiveVector>& points,
                               std::span<const double> y, std::span<const double> ref) {
  require_same_length(y, ref);
  double box = 1.0;
  for (std::size_t j = 0; j < ref.size(); ++j) {
    if (!(y[j] < ref[j])) return 0.0;
    box *= ref[j] - y[j];
  }
  std::vector<ObjectiveVector> clipped;
  clipped.reserve(points.size());
  for (const auto& p : points) {
    require_same_length(p, ref);
    if (weakly_dominates(p, y)) return 0.0;
    ObjectiveVector c(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) c[j] = std::max(p[j], y[j]);
    clipped.push_back(std::move(c));
  }
  const double covered = hypervolume(clipped, ref);
  return std::max(0.0, box - covered);
}

ParetoArchive ParetoArchive::from_entries(const std::vector<ArchiveEntry>& entries) {
  ParetoArchive archive;
  if (entries.empty()) return archive;
  std::vector<ObjectiveVector> objs;
  objs.reserve(entries.size());
  for (const auto& e : entries) objs.push_back(e.objectives);
  for (std::size_t idx : pareto_front(objs)) archive.entries_.push_back(entries[idx]);
  return archive;
}

bool ParetoArchive::insert(ArchiveEntry entry) {
  for (const auto& e : entries_) {
    if (e.record_id == entry.record_id) {
      throw std::invalid_argument(fmt::format("archive: duplicate record id {}", entry.record_id));
    }
    if (dominates(e.objectives, entry.objectives)) return false;
  }
  std::erase_if(entries_,
                [&](const ArchiveEntry& e) { return dominates(entry.objectives, e.objectives); });
  entries_.push_back(std::move(entry));
  return true;
}

std::vector<ObjectiveVector> ParetoArchive::objectives() const {
  std::vector<ObjectiveVector> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.objectives);
  return out;
}

bool ParetoArchive::is_consistent() const {
  std::set<std::uint64_t> ids;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!ids.insert(entries_[i].record_id).second) return false;
    for (std::size_t j = 0; j < entries_.size(); ++j) {
      if (i != j && dominates(entries_[i].objectives, entries_[j].objectives)) return false;
    }
  }
  return true;
}

}  // namespace cid::pareto
