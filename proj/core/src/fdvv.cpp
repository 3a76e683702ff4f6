#include "cid/fdvv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>

#include <fmt/format.h>

namespace cid::button {

double Vibration::sample(int k, double dt) const {
  const double t = k * dt;
  return amplitude * std::exp(-decay_per_s * t) * std::sin(2.0 * std::numbers::pi * frequency_hz * t);
}

int Vibration::duration_steps(double dt) const {
  if (amplitude == 0.0) return 0;
  return static_cast<int>(std::ceil(std::log(100.0) / decay_per_s / dt));
}

void FdvvModel::validate() const {
  if (!(travel > 0.0)) throw std::invalid_argument("FdvvModel: travel must be positive");
  if (!(release_disp > 0.0 && release_disp < activation_disp && activation_disp < travel)) {
    throw std::invalid_argument(fmt::format(
        "FdvvModel: need 0 < release_disp ({}) < activation_disp ({}) < travel ({})",
        release_disp, activation_disp, travel));
  }
  if (velocity_levels.size() < 2) throw std::invalid_argument("FdvvModel: need >= 2 velocity levels");
  if (fd_curves.size() != velocity_levels.size()) {
    throw std::invalid_argument("FdvvModel: one FD curve per velocity level required");
  }
  for (std::size_t i = 0; i < velocity_levels.size(); ++i) {
    if (!(velocity_levels[i] > 0.0) || (i > 0 && !(velocity_levels[i] > velocity_levels[i - 1]))) {
      throw std::invalid_argument("FdvvModel: velocity levels must be positive and ascending");
    }
  }
  if (!(max_force > 0.0 && max_force <= kMaxRenderableForce)) {
    throw std::invalid_argument(
        fmt::format("FdvvModel: max_force {} outside (0, {}]", max_force, kMaxRenderableForce));
  }
  const double tol = 1e-9 * std::max(1.0, travel);
  for (const auto& c : fd_curves) {
    if (c.domain_lo() > tol || c.domain_hi() < travel - tol) {
      throw std::invalid_argument("FdvvModel: FD curve domain does not cover [0, travel]");
    }
    for (double v : c.coefficients()) {
      if (!(v >= -1e-9 && v <= max_force + 1e-9)) {
        throw std::invalid_argument("FdvvModel: FD curve leaves [0, max_force]");
      }
    }
  }
  if (!(vibration.frequency_hz >= kMinVibrationHz && vibration.frequency_hz <= kMaxVibrationHz)) {
    throw std::invalid_argument(fmt::format("FdvvModel: vibration frequency {} Hz outside [{}, {}]",
                                            vibration.frequency_hz, kMinVibrationHz, kMaxVibrationHz));
  }
  if (!(vibration.amplitude >= 0.0) || !(vibration.decay_per_s > 0.0)) {
    throw std::invalid_argument("FdvvModel: vibration amplitude must be >= 0 and decay > 0");
  }
  if (!(damping >= 0.0) || !std::isfinite(damping)) {
    throw std::invalid_argument("FdvvModel: damping must be nonnegative");
  }
}

std::array<double, ButtonDesignParams::kDim> ButtonDesignParams::to_array() const {
  return {travel, activation_fraction, peak_force, snap_ratio, velocity_stiffening, damping};
}

ButtonDesignParams ButtonDesignParams::from_array(std::span<const double> v) {
  if (v.size() != kDim) {
    throw std::invalid_argument(fmt::format("design vector has {} entries, expected {}", v.size(), kDim));
  }
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

void ButtonDesignParams::validate() const {
  auto fail = [](std::string_view field, double value, std::string_view range) {
    throw std::invalid_argument(fmt::format("design parameter {} = {} outside {}", field, value, range));
  };
  if (!(travel >= 0.5 && travel <= 5.0)) fail("travel", travel, "[0.5, 5]");
  if (!(activation_fraction > 0.2 && activation_fraction < 0.9)) {
    fail("activation_fraction", activation_fraction, "(0.2, 0.9)");
  }
  if (!(peak_force > 0.3 && peak_force <= kMaxRenderableForce)) fail("peak_force", peak_force, "(0.3, 4.4]");
  if (!(snap_ratio >= 0.0 && snap_ratio <= 0.8)) fail("snap_ratio", snap_ratio, "[0, 0.8]");
  if (!(velocity_stiffening >= 0.0 && velocity_stiffening <= 1.0)) {
    fail("velocity_stiffening", velocity_stiffening, "[0, 1]");
  }
  if (!(damping > 0.0) || !std::isfinite(damping)) fail("damping", damping, "(0, inf)");
}

double canonical_profile(const ButtonDesignParams& p, double d) {
  const double a = p.activation_fraction * p.travel;
  const double drop_width = 0.25 * (p.travel - a);
  const double valley = p.peak_force * (1.0 - p.snap_ratio);
  if (d <= a) return p.peak_force * d / a;
  if (d <= a + drop_width) return p.peak_force - (p.peak_force - valley) * (d - a) / drop_width;
  const double rest = p.travel - a - drop_width;
  return valley + (p.peak_force - valley) * std::min(1.0, (d - a - drop_width) / rest);
}

FdvvModel design_to_fdvv(const ButtonDesignParams& params) {
  params.validate();
  constexpr int kDegree = 3;
  FdvvModel model;
  model.travel = params.travel;
  model.activation_disp = params.activation_fraction * params.travel;
  model.release_disp = kReleaseRatio * model.activation_disp;
  model.max_force = kMaxRenderableForce;
  model.damping = params.damping;
  model.vibration.frequency_hz = 125.0 + 375.0 * params.snap_ratio;
  model.vibration.amplitude = params.snap_ratio * params.peak_force;
  model.vibration.decay_per_s = 200.0;

  const auto knots =
      BSpline::clamped_uniform_knots(0.0, params.travel, kDegree, kDesignInteriorKnots);
  const std::size_t ncoef = knots.size() - kDegree - 1;
  std::vector<double> profile(ncoef);
  for (std::size_t i = 0; i < ncoef; ++i) {
    double greville = 0.0;
    for (int j = 1; j <= kDegree; ++j) greville += knots[i + static_cast<std::size_t>(j)];
    profile[i] = canonical_profile(params, greville / kDegree);
  }
  for (double v : kDesignVelocityLevels) {
    const double scale = 1.0 + params.velocity_stiffening * v / 100.0;
    std::vector<double> coef(ncoef);
    for (std::size_t i = 0; i < ncoef; ++i) coef[i] = std::min(scale * profile[i], model.max_force);
    model.velocity_levels.push_back(v);
    model.fd_curves.emplace_back(kDegree, knots, std::move(coef));
  }
  model.validate();
  return model;
}

double force_at(const FdvvModel& model, double displacement, double velocity) {
  if (!(displacement >= 0.0 && displacement <= model.travel)) {
    throw std::invalid_argument(fmt::format("force_at: displacement {} mm outside [0, {}]",
                                            displacement, model.travel));
  }
  const double speed = std::abs(velocity);
  const auto& levels = model.velocity_levels;
  double f;
  if (speed <= levels.front()) {
    f = model.fd_curves.front()(displacement);
  } else if (speed >= levels.back()) {
    f = model.fd_curves.back()(displacement);
  } else {
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(levels.begin(), levels.end(), speed) - levels.begin());
    const std::size_t lo = hi - 1;
    const double w = (speed - levels[lo]) / (levels[hi] - levels[lo]);
    f = (1.0 - w) * model.fd_curves[lo](displacement) + w * model.fd_curves[hi](displacement);
  }
  return std::clamp(f, 0.0, model.max_force);
}

namespace {

std::vector<double> sample_velocities(const FdTrace& trace) {
  const auto& s = trace.samples;
  std::vector<double> v(s.size(), 0.0);
  if (s.size() < 2) return v;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == s.size() ? i : i + 1;
    v[i] = (s[b].disp_mm - s[a].disp_mm) / (s[b].t_s - s[a].t_s);
  }
  return v;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

// Median displacement, over the traces of a group, of the sample preceding
// the first nonzero vibration sample.
std::optional<double> vibration_onset(const std::vector<FdTrace>& group) {
  std::vector<double> onsets;
  for (const auto& trace : group) {
    const auto& s = trace.samples;
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s[i].vib != 0.0) {
        onsets.push_back(s[i - 1].disp_mm);
        break;
      }
    }
  }
  if (onsets.empty()) return std::nullopt;
  return median(std::move(onsets));
}

Vibration fit_vibration(const std::vector<FdTrace>& group) {
  Vibration vib;
  for (const auto& trace : group) {
    const auto& s = trace.samples;
    std::size_t begin = s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i].vib != 0.0) {
        begin = i > 0 ? i - 1 : 0;
        break;
      }
    }
    if (begin == s.size()) continue;
    std::size_t end = begin + 1;
    std::size_t quiet = 0;
    for (std::size_t i = begin + 1; i < s.size(); ++i) {
      if (s[i].vib == 0.0) {
        if (++quiet >= 3) break;
      } else {
        quiet = 0;
        end = i + 1;
      }
    }
    const double dt = 1.0 / trace.sample_rate;
    const double duration = static_cast<double>(end - begin) * dt;

    int crossings = 0;
    double peak = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      peak = std::max(peak, std::abs(s[i].vib));
      if (i > begin && ((s[i].vib > 0.0) != (s[i - 1].vib > 0.0)) && s[i].vib != 0.0 &&
          s[i - 1].vib != 0.0) {
        ++crossings;
      }
    }
    vib.amplitude = peak;
    if (crossings > 0 && duration > 0.0) {
      vib.frequency_hz = std::clamp(crossings / (2.0 * duration), kMinVibrationHz, kMaxVibrationHz);
    }

    // Log-envelope regression over local maxima of |vib|.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = begin + 1; i + 1 < end; ++i) {
      const double a = std::abs(s[i].vib);
      if (a > 0.0 && a >= std::abs(s[i - 1].vib) && a >= std::abs(s[i + 1].vib)) {
        const double t = static_cast<double>(i - begin) * dt;
        const double y = std::log(a);
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
        ++n;
      }
    }
    const double denom = n * sxx - sx * sx;
    if (n >= 2 && denom > 0.0) {
      const double slope = (n * sxy - sx * sy) / denom;
      if (slope < 0.0) vib.decay_per_s = -slope;
    }
    break;
  }
  return vib;
}

}  // namespace

double group_velocity(const std::vector<FdTrace>& group) {
  std::vector<double> speeds;
  double peak = 0.0;
  for (const auto& trace : group) {
    for (double v : sample_velocities(trace)) {
      speeds.push_back(std::abs(v));
      peak = std::max(peak, std::abs(v));
    }
  }
  std::erase_if(speeds, [&](double v) { return v < 0.1 * peak; });
  return median(std::move(speeds));
}

FdvvModel fit_fdvv(const std::vector<std::vector<FdTrace>>& groups, const FdvvFitOptions& options) {
  if (groups.size() < 2) {
    throw std::invalid_argument(
        fmt::format("fit_fdvv: need traces at >= 2 press speeds, got {} group(s)", groups.size()));
  }
  struct GroupInfo {
    double level;
    std::size_t index;
  };
  std::vector<GroupInfo> info;
  double travel = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw std::invalid_argument(fmt::format("fit_fdvv: group {} is empty", g));
    for (const auto& trace : groups[g]) {
      trace.validate();
      for (const auto& s : trace.samples) travel = std::max(travel, s.disp_mm);
    }
    const double level = group_velocity(groups[g]);
    if (!(level > 0.0)) {
      throw std::invalid_argument(fmt::format("fit_fdvv: group {} shows no press motion", g));
    }
    info.push_back({level, g});
  }
  if (!(travel > 0.0)) throw std::invalid_argument("fit_fdvv: traces never leave zero displacement");
  std::sort(info.begin(), info.end(), [](const auto& a, const auto& b) { return a.level < b.level; });
  for (std::size_t i = 1; i < info.size(); ++i) {
    if (info[i].level - info[i - 1].level <= options.min_level_separation * info[i].level) {
      throw std::invalid_argument(fmt::format(
          "fit_fdvv: groups {} and {} have indistinguishable press speeds ({:.4g} vs {:.4g} mm/s)",
          info[i - 1].index, info[i].index, info[i - 1].level, info[i].level));
    }
  }

  FdvvModel model;
  model.travel = travel;
  model.max_force = options.max_force;
  model.damping = options.damping;
  for (const auto& gi : info) {
    // Only loading-stroke samples moving at roughly the group's speed
    // describe its curve: holds carry the force of a much slower level and
    // the return stroke is driven by the button, not the probe. Samples at
    // rest height are kept since every curve starts from zero preload.
    std::vector<double> x, y;
    for (const auto& trace : groups[gi.index]) {
      const auto v = sample_velocities(trace);
      for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const bool at_rest = trace.samples[i].disp_mm <= 0.0;
        if (!at_rest && v[i] < options.min_speed_fraction * gi.level) continue;
        x.push_back(trace.samples[i].disp_mm);
        y.push_back(trace.samples[i].force_n);
      }
    }
    BicFit fit = fit_bspline_bic(x, y, options.degree, options.knot_candidates, 0.0, travel);
    std::vector<double> coef = fit.spline.coefficients();
    for (double& c : coef) c = std::clamp(c, 0.0, options.max_force);
    model.velocity_levels.push_back(gi.level);
    model.fd_curves.emplace_back(fit.spline.degree(), fit.spline.knots(), std::move(coef));
  }

  // Activation point: first local force maximum of the slowest curve that is
  // followed by a drop of at least 2%.
  const BSpline& slow = model.fd_curves.front();
  constexpr int kGrid = 4000;
  std::vector<double> f(kGrid + 1);
  for (int i = 0; i <= kGrid; ++i) f[static_cast<std::size_t>(i)] = slow(travel * i / kGrid);
  // Without a tactile peak, the onset of the click vibration marks it; only
  // when neither is present does a fixed fraction of travel stand in.
  std::optional<double> activation;
  for (int i = 1; i < kGrid && !activation; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (f[k] >= f[k - 1] && f[k] > f[k + 1] && f[k] > 0.0) {
      const double after = *std::min_element(f.begin() + i + 1, f.end());
      if (after < 0.98 * f[k]) activation = travel * i / kGrid;
    }
  }
  if (!activation) activation = vibration_onset(groups[info.front().index]);
  if (!activation) activation = options.fallback_activation_fraction * travel;
  model.activation_disp = *activation;
  model.release_disp = options.release_ratio * *activation;
  model.vibration = fit_vibration(groups[info.front().index]);
  model.validate();
  return model;
}

}  // namespace cid::button
