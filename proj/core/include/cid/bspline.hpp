#pragma once

#include <span>
#include <utility>
#include <vector>

namespace cid::button {

/// Clamped B-spline curve y(x) on [knots.front(), knots.back()].
class BSpline {
 public:
  BSpline() = default;
  /// Throws std::invalid_argument unless the knot vector is nondecreasing,
  /// clamped (end knots repeated degree+1 times) and
  /// coefficients.size() == knots.size() - degree - 1.
  BSpline(int degree, std::vector<double> knots, std::vector<double> coefficients);

  /// Clamped knot vector on [lo, hi] with `interior` uniformly spaced interior knots.
  static std::vector<double> clamped_uniform_knots(double lo, double hi, int degree, int interior);

  /// de Boor evaluation; x is clamped into the domain.
  double operator()(double x) const;

  int degree() const noexcept { return degree_; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  int interior_knot_count() const noexcept {
    return static_cast<int>(knots_.size()) - 2 * (degree_ + 1);
  }
  double domain_lo() const noexcept { return knots_.front(); }
  double domain_hi() const noexcept { return knots_.back(); }

  /// Index of the knot span containing x (degree <= span < #coefficients).
  std::size_t find_span(double x) const;

  /// Nonzero basis functions N_{span-degree..span}(x).
  std::vector<double> basis(std::size_t span, double x) const;

  bool operator==(const BSpline&) const = default;

 private:
  int degree_ = 3;
  std::vector<double> knots_;
  std::vector<double> coefficients_;
};

/// Least-squares fit on uniformly placed clamped knots over [lo, hi].
BSpline fit_bspline_lsq(std::span<const double> x, std::span<const double> y, int degree,
                        int interior_knots, double lo, double hi);

struct BicFit {
  BSpline spline;
  int interior_knots = 0;
  double bic = 0.0;
  double rss = 0.0;
};

/// Fit one spline per candidate interior-knot count and keep the minimum of
/// BIC = n ln(RSS/n) + k ln n, k = coefficient count. Candidates with k >= n,
/// or with a knot span holding fewer than kMinSamplesPerSpan samples, are
/// skipped; ties go to fewer knots. The domain defaults to [min x, max x].
///
/// RSS is floored at n (1e-12 max(1, |y|_inf))^2 so that exact fits compare
/// by their parameter penalty alone.
inline constexpr int kMinSamplesPerSpan = 2;

BicFit fit_bspline_bic(std::span<const double> x, std::span<const double> y, int degree,
                       std::span<const int> knot_counts);
BicFit fit_bspline_bic(std::span<const double> x, std::span<const double> y, int degree,
                       std::span<const int> knot_counts, double lo, double hi);

}  // namespace cid::button
