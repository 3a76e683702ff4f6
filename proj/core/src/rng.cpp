#include "cid/rng.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace cid {

namespace {
constexpr std::array<std::uint32_t, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19,
                                                23, 29, 31, 37, 41, 43, 47, 53};
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t s = splitmix64(master ^ 0x6a09e667f3bcc908ULL);
  for (std::uint64_t p : path) {
    s = splitmix64(s ^ splitmix64(p + 0x3c6ef372fe94f82bULL));
  }
  return s;
}

double radical_inverse(std::uint64_t index, std::uint32_t base) noexcept {
  double inv_base = 1.0 / base;
  double f = inv_base;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv_base;
  }
  return r;
}

HaltonSequence::HaltonSequence(std::size_t dim, std::uint64_t seed) {
  if (dim == 0 || dim > kPrimes.size()) {
    throw std::invalid_argument("HaltonSequence: dimension must be in [1, 16]");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  shift_.resize(dim);
  for (auto& s : shift_) s = u(rng);
}

std::vector<double> HaltonSequence::point(std::uint64_t index) const {
  std::vector<double> p(shift_.size());
  for (std::size_t j = 0; j < shift_.size(); ++j) {
    double v = radical_inverse(index + 1, kPrimes[j]) + shift_[j];
    p[j] = v - std::floor(v);
  }
  return p;
}

}  // namespace cid
