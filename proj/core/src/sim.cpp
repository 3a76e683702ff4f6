#include "cid/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "cid/rng.hpp"

namespace cid::button {

StepOutput step(const FdvvModel& model, const SimState& state, double applied_force, double dt,
                const SimConfig& config) {
  if (!std::isfinite(applied_force)) throw std::invalid_argument("step: applied force is not finite");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be positive");
  if (!std::isfinite(state.displacement) || !std::isfinite(state.velocity) ||
      !std::isfinite(state.time)) {
    throw std::invalid_argument("step: state is not finite");
  }
  if (!(config.mass_kg > 0.0) || config.substeps < 1) {
    throw std::invalid_argument("step: invalid simulator configuration");
  }

  StepOutput out;
  SimState& s = out.state;
  s = state;
  s.displacement = std::clamp(s.displacement, 0.0, model.travel);

  const double h = dt / config.substeps;
  // mm/s^2 per N of net force.
  const double accel_per_newton = 1000.0 / config.mass_kg;
  const double damping_gain = h * accel_per_newton * model.damping;
  bool started_vibration = false;

  for (int k = 0; k < config.substeps; ++k) {
    const double spring = force_at(model, s.displacement, s.velocity);
    double v = (s.velocity + h * accel_per_newton * (applied_force - spring)) / (1.0 + damping_gain);
    double d = s.displacement + h * v;
    if (d <= 0.0) {
      d = 0.0;
      v = 0.0;
    } else if (d >= model.travel) {
      d = model.travel;
      v = 0.0;
    }
    s.displacement = d;
    s.velocity = v;

    if (!s.activated && d >= model.activation_disp) {
      s.activated = true;
      s.vibration_elapsed = 0;
      s.pending_vibration = model.vibration.duration_steps(dt);
      started_vibration = true;
      out.events.push_back({EventKind::kActivation, 0.0, d, model.vibration});
    } else if (s.activated && d <= model.release_disp) {
      s.activated = false;
      out.events.push_back({EventKind::kRelease, 0.0, d, {}});
    }
  }
  s.time = state.time + dt;
  for (auto& e : out.events) e.time = s.time;

  if (s.pending_vibration > 0) {
    out.vibration = started_vibration ? 0.0 : model.vibration.sample(s.vibration_elapsed, dt);
    if (!started_vibration) --s.pending_vibration;
    ++s.vibration_elapsed;
  }
  out.button_force = force_at(model, s.displacement, s.velocity);
  return out;
}

FdTrace synthesize_press(const FdvvModel& model, const PressScript& script, double dt,
                         const SimConfig& config) {
  if (!(script.speed > 0.0)) throw std::invalid_argument("synthesize_press: speed must be positive");
  if (!(script.depth_fraction > 0.0 && script.depth_fraction <= 1.0)) {
    throw std::invalid_argument("synthesize_press: depth_fraction must be in (0, 1]");
  }
  if (!(script.lead_s >= 0.0)) throw std::invalid_argument("synthesize_press: lead_s must be >= 0");
  const double depth = script.depth_fraction * model.travel;
  const double t_down = depth / script.speed;
  const double t_hold = t_down + script.hold_s;
  const double t_up = t_hold + t_down;
  const double t_end = script.lead_s + t_up + script.rest_s;

  if (script.servo_substeps < 1) throw std::invalid_argument("synthesize_press: servo_substeps must be >= 1");

  // Computed-force tracking: cancel the button force and damping at the
  // measured state, then impose critically damped error dynamics. Unlike a
  // plain PD probe this follows the reference through the negative-stiffness
  // region past the tactile peak instead of snapping through it. The servo
  // runs servo_substeps times per recorded sample.
  const double wn = 2.0 * std::numbers::pi * script.tracking_bandwidth_hz;
  const double newtons_per_accel = config.mass_kg / 1000.0;  // N per mm/s^2
  const double h = dt / script.servo_substeps;

  const auto reference = [&](double t) -> std::pair<double, double> {
    t -= script.lead_s;
    if (t < 0.0) return {0.0, 0.0};
    if (t < t_down) return {script.speed * t, script.speed};
    if (t < t_hold) return {depth, 0.0};
    if (t < t_up) return {depth - script.speed * (t - t_hold), -script.speed};
    return {0.0, 0.0};
  };

  Rng rng(script.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  FdTrace trace;
  trace.sample_rate = 1.0 / dt;
  SimState state;
  const auto samples = static_cast<long>(std::ceil(t_end / dt));
  for (long i = 0; i < samples; ++i) {
    StepOutput o;
    for (int k = 0; k < script.servo_substeps; ++k) {
      auto [d_ref, v_ref] = reference(static_cast<double>(i) * dt + (k + 1) * h);
      d_ref = std::clamp(d_ref, 0.0, model.travel);
      const double accel = wn * wn * (d_ref - state.displacement) + 2.0 * wn * (v_ref - state.velocity);
      const double applied = std::max(0.0, force_at(model, state.displacement, state.velocity) +
                                               model.damping * state.velocity + newtons_per_accel * accel);
      o = step(model, state, applied, h, config);
      state = o.state;
    }
    // Keep the time base exact rather than accumulated from substeps.
    state.time = static_cast<double>(i + 1) * dt;
    double force = o.button_force;
    if (script.force_noise_sd > 0.0) force += script.force_noise_sd * noise(rng);
    trace.samples.push_back({state.time, state.displacement, force, o.vibration});
  }
  return trace;
}

FdTrace simulate_profile(const FdvvModel& model, const std::vector<double>& applied_forces,
                         double dt, const SimConfig& config, std::vector<SimEvent>* events) {
  FdTrace trace;
  trace.sample_rate = 1.0 / dt;
  SimState state;
  for (double f : applied_forces) {
    StepOutput o = step(model, state, f, dt, config);
    state = o.state;
    if (events != nullptr) events->insert(events->end(), o.events.begin(), o.events.end());
    trace.samples.push_back({state.time, state.displacement, o.button_force, o.vibration});
  }
  return trace;
}

}  // namespace cid::button
