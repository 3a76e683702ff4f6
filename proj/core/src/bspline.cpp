#include "cid/bspline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace cid::button {

BSpline::BSpline(int degree, std::vector<double> knots, std::vector<double> coefficients)
    : degree_(degree), knots_(std::move(knots)), coefficients_(std::move(coefficients)) {
  if (degree_ < 0) throw std::invalid_argument("BSpline: negative degree");
  const std::size_t p1 = static_cast<std::size_t>(degree_) + 1;
  if (knots_.size() < 2 * p1) throw std::invalid_argument("BSpline: too few knots");
  if (coefficients_.size() != knots_.size() - p1) {
    throw std::invalid_argument(fmt::format("BSpline: {} coefficients for {} knots of degree {}",
                                            coefficients_.size(), knots_.size(), degree_));
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (knots_[i] < knots_[i - 1]) throw std::invalid_argument("BSpline: knots must be nondecreasing");
  }
  for (std::size_t i = 1; i < p1; ++i) {
    if (knots_[i] != knots_[0] || knots_[knots_.size() - 1 - i] != knots_.back()) {
      throw std::invalid_argument("BSpline: end knots must be clamped");
    }
  }
  if (!(knots_.back() > knots_.front())) throw std::invalid_argument("BSpline: empty domain");
}

std::vector<double> BSpline::clamped_uniform_knots(double lo, double hi, int degree, int interior) {
  if (!(hi > lo) || degree < 0 || interior < 0) {
    throw std::invalid_argument("clamped_uniform_knots: invalid domain, degree or knot count");
  }
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(interior + 2 * (degree + 1)));
  for (int i = 0; i <= degree; ++i) t.push_back(lo);
  for (int i = 1; i <= interior; ++i) t.push_back(lo + (hi - lo) * i / (interior + 1));
  for (int i = 0; i <= degree; ++i) t.push_back(hi);
  return t;
}

std::size_t BSpline::find_span(double x) const {
  const std::size_t n = coefficients_.size();
  const std::size_t p = static_cast<std::size_t>(degree_);
  if (x >= knots_[n]) return n - 1;
  if (x <= knots_[p]) return p;
  // Largest k with knots[k] <= x.
  auto it = std::upper_bound(knots_.begin() + static_cast<std::ptrdiff_t>(p),
                             knots_.begin() + static_cast<std::ptrdiff_t>(n) + 1, x);
  return static_cast<std::size_t>(it - knots_.begin()) - 1;
}

std::vector<double> BSpline::basis(std::size_t span, double x) const {
  const std::size_t p = static_cast<std::size_t>(degree_);
  std::vector<double> n(p + 1, 0.0), left(p + 1), right(p + 1);
  n[0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double tmp = denom != 0.0 ? n[r] / denom : 0.0;
      n[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    n[j] = saved;
  }
  return n;
}

double BSpline::operator()(double x) const {
  x = std::clamp(x, domain_lo(), domain_hi());
  const std::size_t k = find_span(x);
  const std::size_t p = static_cast<std::size_t>(degree_);
  std::array<double, 8> small{};
  std::vector<double> large;
  double* d = small.data();
  if (p + 1 > small.size()) {
    large.resize(p + 1);
    d = large.data();
  }
  for (std::size_t j = 0; j <= p; ++j) d[j] = coefficients_[j + k - p];
  for (std::size_t r = 1; r <= p; ++r) {
    for (std::size_t j = p; j >= r; --j) {
      const double lo = knots_[j + k - p];
      const double hi = knots_[j + 1 + k - r];
      const double alpha = hi > lo ? (x - lo) / (hi - lo) : 0.0;
      d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
    }
  }
  return d[p];
}

BSpline fit_bspline_lsq(std::span<const double> x, std::span<const double> y, int degree,
                        int interior_knots, double lo, double hi) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_bspline_lsq: x and y lengths differ");
  std::vector<double> knots = BSpline::clamped_uniform_knots(lo, hi, degree, interior_knots);
  const std::size_t k = knots.size() - static_cast<std::size_t>(degree) - 1;
  if (x.size() <= k) throw std::invalid_argument("fit_bspline_lsq: underdetermined fit");

  BSpline shape(degree, knots, std::vector<double>(k, 0.0));
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()),
                                                 static_cast<Eigen::Index>(k));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = std::clamp(x[i], lo, hi);
    const std::size_t span = shape.find_span(xi);
    const auto n = shape.basis(span, xi);
    for (std::size_t j = 0; j < n.size(); ++j) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(span - degree + j)) = n[j];
    }
    rhs[static_cast<Eigen::Index>(i)] = y[i];
  }
  const Eigen::VectorXd c = design.colPivHouseholderQr().solve(rhs);
  return BSpline(degree, std::move(knots), std::vector<double>(c.data(), c.data() + c.size()));
}

namespace {

// Uniform interior knots split [lo, hi] into m + 1 equal spans. With fewer
// than two samples in a span the fit nearly interpolates there, and on
// noise-free data that buys spurious oscillation at no RSS cost.
bool every_span_is_sampled(std::span<const double> x, int interior_knots, double lo, double hi) {
  const auto spans = static_cast<std::size_t>(interior_knots) + 1;
  std::vector<int> seen(spans, 0);
  for (double v : x) {
    const double u = (std::clamp(v, lo, hi) - lo) / (hi - lo);
    ++seen[std::min(spans - 1, static_cast<std::size_t>(u * static_cast<double>(spans)))];
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c >= kMinSamplesPerSpan; });
}

}  // namespace

BicFit fit_bspline_bic(std::span<const double> x, std::span<const double> y, int degree,
                       std::span<const int> knot_counts) {
  if (x.empty()) throw std::invalid_argument("fit_bspline_bic: no points");
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  return fit_bspline_bic(x, y, degree, knot_counts, *lo_it, *hi_it);
}

BicFit fit_bspline_bic(std::span<const double> x, std::span<const double> y, int degree,
                       std::span<const int> knot_counts, double lo, double hi) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_bspline_bic: x and y lengths differ");
  if (x.empty()) throw std::invalid_argument("fit_bspline_bic: no points");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw std::invalid_argument("fit_bspline_bic: x must span a finite, nonempty interval");
  }
  const double n = static_cast<double>(x.size());
  double ymax = 1.0;
  for (double v : y) ymax = std::max(ymax, std::abs(v));
  const double rss_floor = n * (1e-12 * ymax) * (1e-12 * ymax);

  std::vector<int> counts(knot_counts.begin(), knot_counts.end());
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());

  BicFit best;
  bool found = false;
  for (int m : counts) {
    if (m < 0) continue;
    const std::size_t k = static_cast<std::size_t>(m + degree + 1);
    if (k >= x.size()) continue;
    if (!every_span_is_sampled(x, m, lo, hi)) continue;
    BSpline s = fit_bspline_lsq(x, y, degree, m, lo, hi);
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - s(x[i]);
      rss += r * r;
    }
    const double bic = n * std::log(std::max(rss, rss_floor) / n) + static_cast<double>(k) * std::log(n);
    if (!found || bic < best.bic - 1e-9 * std::max(1.0, std::abs(best.bic))) {
      best = {std::move(s), m, bic, rss};
      found = true;
    }
  }
  if (!found) {
    throw std::invalid_argument(
        "fit_bspline_bic: every knot-count candidate has at least as many coefficients as points");
  }
  return best;
}

}  // namespace cid::button
