#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cid {

using Rng = std::mt19937_64;

/// Purposes of the per-run seed tree. Every stochastic component draws from
/// its own branch so that it can be replayed independently of the others.
enum class SeedPurpose : std::uint64_t {
  kDesignOfExperiments = 1,
  kAcquisition = 2,
  kAdaptation = 3,
  kEvaluation = 4,
  kHyperparameters = 5,
  kMetaTraining = 6,
  kPolicyInit = 7,
  kTaskSampling = 8,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Hash a master seed and a path of indices into a child seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

inline std::uint64_t derive_seed(std::uint64_t master, SeedPurpose purpose,
                                 std::uint64_t index = 0) noexcept {
  return derive_seed(master, {static_cast<std::uint64_t>(purpose), index});
}

/// Halton sequence in [0,1)^dim with a seeded Cranley-Patterson rotation.
/// Supports dim <= 16.
class HaltonSequence {
 public:
  HaltonSequence(std::size_t dim, std::uint64_t seed);

  std::vector<double> point(std::uint64_t index) const;
  std::size_t dim() const noexcept { return shift_.size(); }

 private:
  std::vector<double> shift_;
};

double radical_inverse(std::uint64_t index, std::uint32_t base) noexcept;

}  // namespace cid
