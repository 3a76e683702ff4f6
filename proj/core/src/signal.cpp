#include "cid/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace cid::button {

void FdTrace::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw std::invalid_argument("trace: sample_rate must be positive");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.t_s) || !std::isfinite(s.disp_mm) || !std::isfinite(s.force_n) ||
        !std::isfinite(s.vib)) {
      throw std::invalid_argument(fmt::format("trace: non-finite value in sample {}", i));
    }
    if (i > 0 && !(s.t_s > samples[i - 1].t_s)) {
      throw std::invalid_argument(fmt::format("trace: time not strictly increasing at sample {}", i));
    }
    if (s.disp_mm < 0.0) {
      throw std::invalid_argument(fmt::format("trace: negative displacement at sample {}", i));
    }
  }
}

Biquad butterworth_lowpass(double cutoff_hz, double sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_rate_hz)) {
    throw std::invalid_argument(fmt::format(
        "low-pass: cutoff {} Hz must lie in (0, {}) for sample rate {} Hz", cutoff_hz,
        0.5 * sample_rate_hz, sample_rate_hz));
  }
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
  Biquad s;
  s.b0 = k2 * norm;
  s.b1 = 2.0 * s.b0;
  s.b2 = s.b0;
  s.a1 = 2.0 * (k2 - 1.0) * norm;
  s.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
  return s;
}

namespace {

// Transposed direct form II, state initialized to the DC steady state of x[0].
void filter_inplace(const Biquad& s, std::vector<double>& x) {
  if (x.empty()) return;
  double z2 = (s.b2 - s.a2) * x[0];
  double z1 = (1.0 - s.b0) * x[0];
  for (double& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

}  // namespace

std::vector<double> filtfilt(const Biquad& section, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min<std::size_t>(9, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  filter_inplace(section, ext);
  std::reverse(ext.begin(), ext.end());
  filter_inplace(section, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

FdTrace low_pass_filter(const FdTrace& trace, double cutoff_hz) {
  if (trace.samples.size() < 8) {
    throw std::invalid_argument(
        fmt::format("low_pass_filter: need at least 8 samples, got {}", trace.samples.size()));
  }
  const Biquad section = butterworth_lowpass(cutoff_hz, trace.sample_rate);
  std::vector<double> disp, force;
  disp.reserve(trace.samples.size());
  force.reserve(trace.samples.size());
  for (const auto& s : trace.samples) {
    disp.push_back(s.disp_mm);
    force.push_back(s.force_n);
  }
  disp = filtfilt(section, disp);
  force = filtfilt(section, force);
  FdTrace out = trace;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i].disp_mm = std::max(0.0, disp[i]);
    out.samples[i].force_n = force[i];
  }
  return out;
}

std::vector<double> convolve_causal(std::span<const double> x, std::span<const double> h) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double acc = 0.0;
    const std::size_t taps = std::min(h.size(), i + 1);
    for (std::size_t k = 0; k < taps; ++k) acc += h[k] * x[i - k];
    y[i] = acc;
  }
  return y;
}

namespace {

double residual(std::span<const double> target, std::span<const double> drive,
                std::span<const double> h, std::vector<double>& r) {
  const auto y = convolve_causal(drive, h);
  r.resize(target.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    r[i] = target[i] - y[i];
    ss += r[i] * r[i];
  }
  return target.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(target.size()));
}

}  // namespace

CompensationResult compensate_drive(std::span<const double> target,
                                    std::span<const double> impulse_response, int max_iters,
                                    double tol) {
  if (impulse_response.empty()) throw std::invalid_argument("compensate_drive: empty impulse response");
  if (impulse_response[0] == 0.0) {
    throw std::invalid_argument("compensate_drive: zero leading tap makes the response non-invertible");
  }
  if (max_iters < 1) throw std::invalid_argument("compensate_drive: max_iters must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("compensate_drive: tol must be >= 0");

  double l1 = 0.0, sum = 0.0;
  for (double v : impulse_response) {
    l1 += std::abs(v);
    sum += v;
  }
  const double mu = 0.5 / l1;
  const double dc = std::abs(sum) > 1e-12 * l1 ? sum : impulse_response[0];

  CompensationResult out;
  out.drive.assign(target.begin(), target.end());
  for (double& v : out.drive) v /= dc;

  std::vector<double> r;
  double rmse = residual(target, out.drive, impulse_response, r);
  out.residual_history.push_back(rmse);
  out.iterations = 1;

  std::vector<double> candidate(target.size()), rc;
  while (out.iterations < max_iters && rmse > tol) {
    double gain = mu;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, gain *= 0.5) {
      for (std::size_t i = 0; i < candidate.size(); ++i) candidate[i] = out.drive[i] + gain * r[i];
      const double rmse_c = residual(target, candidate, impulse_response, rc);
      if (rmse_c <= rmse) {
        out.drive.swap(candidate);
        r.swap(rc);
        rmse = rmse_c;
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    out.residual_history.push_back(rmse);
    if (!accepted) break;
  }
  out.residual_rmse = rmse;
  return out;
}

}  // namespace cid::button
