#include <stdexcept>
#include <cmath>
#include <random>

#include <doctest.h>

#include "cid/fdvv.hpp"
#include "cid/sim.hpp"

using namespace cid;
using button::ButtonDesignParams;

TEST_CASE("design parameters") {
  ButtonDesignParams p;
  CHECK_NOTHROW(p.validate());
  const auto arr = p.to_array();
  CHECK(ButtonDesignParams::from_array(arr) == p);
  p.peak_force = 5.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("peak_force"), std::invalid_argument);
  p = {};
  p.activation_fraction = 0.95;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = {};
  p.damping = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("design rendering") {
  SUBCASE("geometry") {
    ButtonDesignParams p;
    p.travel = 2.0;
    p.activation_fraction = 0.6;
    const auto m = button::design_to_fdvv(p);
    CHECK(m.activation_disp == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(m.release_disp == doctest::Approx(0.84).epsilon(1e-12));
    CHECK(m.velocity_levels == std::vector<double>(button::kDesignVelocityLevels.begin(),
                                                   button::kDesignVelocityLevels.end()));
    CHECK_NOTHROW(m.validate());
  }
  SUBCASE("no snap gives monotone curves") {
    ButtonDesignParams p;
    p.snap_ratio = 0.0;
    p.velocity_stiffening = 0.7;
    const auto m = button::design_to_fdvv(p);
    for (const auto& curve : m.fd_curves) {
      double prev = curve(0.0);
      for (int i = 1; i <= 1000; ++i) {
        const double f = curve(p.travel * i / 1000.0);
        CHECK(f >= prev - 1e-12);
        prev = f;
      }
    }
  }
  SUBCASE("force ceiling") {
    ButtonDesignParams p;
    p.peak_force = 4.4;
    p.velocity_stiffening = 0.0;
    const auto m = button::design_to_fdvv(p);
    double peak = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      peak = std::max(peak, button::force_at(m, p.travel * i / 20000.0, 50.0));
    }
    CHECK(std::abs(peak - 4.4) < 1e-6);
  }
  SUBCASE("vibration follows the snap") {
    ButtonDesignParams p;
    p.snap_ratio = 0.4;
    const auto m = button::design_to_fdvv(p);
    CHECK(m.vibration.frequency_hz == doctest::Approx(125.0 + 375.0 * 0.4));
    CHECK(m.vibration.decay_per_s == doctest::Approx(200.0));
    CHECK(m.vibration.amplitude > 0.0);
  }
}

TEST_CASE("force lookup") {
  const auto m = button::design_to_fdvv({});
  const double d = 0.7;
  CHECK(button::force_at(m, d, 100.0) == doctest::Approx(m.fd_curves[1](d)).epsilon(1e-14));
  CHECK(button::force_at(m, d, -100.0) == button::force_at(m, d, 100.0));
  const double mid = 0.5 * (m.fd_curves[1](d) + m.fd_curves[2](d));
  CHECK(std::abs(button::force_at(m, d, 200.0) - mid) < 1e-10);
  CHECK(button::force_at(m, d, 1.0) == button::force_at(m, d, 10.0));
  CHECK(button::force_at(m, d, 900.0) == button::force_at(m, d, 300.0));
  CHECK(button::force_at(m, 0.0, 50.0) == 0.0);
  CHECK_THROWS_AS(button::force_at(m, m.travel + 0.1, 0.0), std::invalid_argument);
}

TEST_CASE("model validation") {
  auto m = button::design_to_fdvv({});
  m.release_disp = m.activation_disp + 0.1;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = button::design_to_fdvv({});
  m.vibration.frequency_hz = 30.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = button::design_to_fdvv({});
  m.fd_curves.pop_back();
  m.velocity_levels.pop_back();
  m.fd_curves.pop_back();
  m.velocity_levels.pop_back();
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("fitting from simulated presses") {
  ButtonDesignParams p;
  p.travel = 2.5;
  p.activation_fraction = 0.55;
  p.peak_force = 2.0;
  p.snap_ratio = 0.35;
  p.velocity_stiffening = 0.3;
  const auto source = button::design_to_fdvv(p);

  // Eight presses per speed, staggered by an eighth of a sample.
  std::vector<std::vector<button::FdTrace>> groups;
  for (double speed : {10.0, 50.0, 150.0}) {
    std::vector<button::FdTrace> presses;
    for (int r = 0; r < 8; ++r) {
      button::PressScript script;
      script.speed = speed;
      script.lead_s = r * button::kControlDt / 8.0;
      presses.push_back(button::synthesize_press(source, script));
    }
    groups.push_back(std::move(presses));
  }
  const auto fitted = button::fit_fdvv(groups);
  REQUIRE(fitted.velocity_levels.size() == 3);
  CHECK(std::abs(fitted.activation_disp - source.activation_disp) < 0.1);
  for (std::size_t k = 0; k < 3; ++k) {
    const double v = fitted.velocity_levels[k];
    double s = 0.0;
    const int n = 200;
    for (int i = 0; i <= n; ++i) {
      const double d = std::min(source.travel, source.travel * i / n);
      s += std::pow(fitted.fd_curves[k](d) - button::force_at(source, d, v), 2);
    }
    CHECK(std::sqrt(s / (n + 1)) < 0.05 * p.peak_force);
  }

  SUBCASE("indistinguishable speeds are rejected") {
    std::vector<std::vector<button::FdTrace>> same{groups[1], groups[1]};
    CHECK_THROWS_AS(button::fit_fdvv(same), std::invalid_argument);
  }
  SUBCASE("a single group is rejected") {
    std::vector<std::vector<button::FdTrace>> one{groups[0]};
    CHECK_THROWS_AS(button::fit_fdvv(one), std::invalid_argument);
  }
}
