#include <stdexcept>
#include <cmath>
#include <numeric>
#include <random>

#include <doctest.h>

#include "cid/bspline.hpp"
#include "oracles.hpp"

using namespace cid;
using button::BSpline;

namespace {

BSpline random_spline(std::mt19937_64& rng, int degree, int interior) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto knots = BSpline::clamped_uniform_knots(0.0, 1.0, degree, interior);
  std::vector<double> coef(knots.size() - degree - 1);
  for (auto& c : coef) c = normal(rng);
  return BSpline(degree, knots, coef);
}

}  // namespace

TEST_CASE("constructor rejects malformed splines") {
  CHECK_THROWS_AS(BSpline(3, {0, 0, 0, 0, 1, 1, 1, 1}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(BSpline(1, {0, 0, 1, 0.5, 1, 1}, {1, 2, 3, 4}), std::invalid_argument);
  CHECK_THROWS_AS(BSpline(2, {0, 1, 1, 1}, {1}), std::invalid_argument);
  CHECK_NOTHROW(BSpline(1, {0, 0, 1, 1}, {0, 1}));
}

TEST_CASE("clamped uniform knots") {
  const auto k = BSpline::clamped_uniform_knots(0.0, 2.0, 3, 3);
  const std::vector<double> expected{0, 0, 0, 0, 0.5, 1.0, 1.5, 2, 2, 2, 2};
  REQUIRE(k.size() == expected.size());
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == doctest::Approx(expected[i]));
}

TEST_CASE("evaluation matches the Cox-de Boor recursion") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int degree : {1, 2, 3, 5}) {
    const auto s = random_spline(rng, degree, 7);
    for (int i = 0; i < 50; ++i) {
      const double x = u(rng);
      CHECK(std::abs(s(x) - oracle::spline_by_basis(s.knots(), s.coefficients(), degree, x)) < 1e-10);
    }
    CHECK(std::abs(s(1.0) - s.coefficients().back()) < 1e-12);
    CHECK(std::abs(s(0.0) - s.coefficients().front()) < 1e-12);
  }
}

TEST_CASE("basis is a partition of unity") {
  std::mt19937_64 rng(73);
  const auto s = random_spline(rng, 3, 5);
  for (double x : {0.0, 0.1, 0.33, 0.5, 0.99, 1.0}) {
    const auto span = s.find_span(x);
    const auto b = s.basis(span, x);
    CHECK(std::accumulate(b.begin(), b.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("least squares reproduces a spline in its own space") {
  std::mt19937_64 rng(79);
  const auto truth = random_spline(rng, 3, 6);
  std::vector<double> x(200), y(200);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = u(rng);
    y[i] = truth(x[i]);
  }
  const auto fit = button::fit_bspline_lsq(x, y, 3, 6, 0.0, 1.0);
  for (std::size_t i = 0; i < truth.coefficients().size(); ++i) {
    CHECK(fit.coefficients()[i] == doctest::Approx(truth.coefficients()[i]).epsilon(1e-8));
  }
}

TEST_CASE("BIC selection") {
  const std::vector<int> candidates{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 20};
  SUBCASE("constant data selects the smallest candidate") {
    std::vector<double> x(100), y(100, 2.5);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = i / 99.0;
    const auto fit = button::fit_bspline_bic(x, y, 3, candidates);
    CHECK(fit.interior_knots == 0);
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) rss += std::pow(fit.spline(x[i]) - 2.5, 2);
    CHECK(std::sqrt(rss / x.size()) < 1e-9);
  }
  SUBCASE("recovers the knot count of a noisy known spline") {
    std::mt19937_64 rng(83);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.01);
    for (int trial = 0; trial < 5; ++trial) {
      const auto truth = random_spline(rng, 3, 8);
      std::vector<double> x(400), y(400);
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = u(rng);
        y[i] = truth(x[i]) + noise(rng);
      }
      const auto fit = button::fit_bspline_bic(x, y, 3, candidates, 0.0, 1.0);
      CHECK(fit.interior_knots >= 6);
      CHECK(fit.interior_knots <= 10);
      CHECK(std::sqrt(fit.rss / x.size()) < 0.02);
    }
  }
  SUBCASE("candidates with more coefficients than points are skipped") {
    const std::vector<double> x{0.0, 0.5, 1.0, 1.5, 2.0}, y{0, 1, 0, 1, 0};
    const auto fit = button::fit_bspline_bic(x, y, 3, candidates);
    CHECK(fit.spline.coefficients().size() < x.size());
  }
}
