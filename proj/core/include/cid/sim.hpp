#pragma once

// Press dynamics of a rendered button: a point mass (finger + cap) driven by
// the applied force against the FD curve force and viscous damping.

#include <cstdint>
#include <vector>

#include "cid/fdvv.hpp"
#include "cid/trace.hpp"

namespace cid::button {

inline constexpr double kControlDt = 0.001;  // 1 kHz

struct SimConfig {
  double mass_kg = 0.005;
  // Integration substeps per control step; keeps stiff curves stable at 1 kHz.
  int substeps = 4;

  bool operator==(const SimConfig&) const = default;
};

struct SimState {
  double displacement = 0.0;  // mm, within [0, travel]
  double velocity = 0.0;      // mm/s, positive when pressing down
  bool activated = false;
  double time = 0.0;            // s
  int vibration_elapsed = 0;    // steps since the current vibration onset
  int pending_vibration = 0;    // remaining vibration samples

  bool operator==(const SimState&) const = default;
};

enum class EventKind { kActivation, kRelease };

struct SimEvent {
  EventKind kind;
  double time;          // end of the step in which the crossing happened
  double displacement;  // at the crossing substep
  Vibration onset;      // waveform started by an Activation event
};

struct StepOutput {
  SimState state;
  std::vector<SimEvent> events;
  double button_force = 0.0;  // FD force at the new state, N
  double vibration = 0.0;     // vibration sample emitted this step
};

/// Advance one control step. Each substep of dt/substeps integrates
///   m a = applied - force_at(d, v) - damping v
/// semi-implicitly (damping treated implicitly, position updated with the new
/// velocity), clamps displacement to [0, travel] with the velocity zeroed at
/// the bounds, and checks the activation/release hysteresis.
StepOutput step(const FdvvModel& model, const SimState& state, double applied_force,
                double dt = kControlDt, const SimConfig& config = {});

struct PressScript {
  double speed = 20.0;          // mm/s
  double depth_fraction = 1.0;  // of travel
  double hold_s = 0.02;
  double rest_s = 0.01;
  // Idle time before the stroke starts. Fractions of dt move the samples
  // along the stroke, so repeated presses cover different displacements.
  double lead_s = 0.0;
  double tracking_bandwidth_hz = 300.0;  // natural frequency of the probe's tracking error
  int servo_substeps = 10;               // probe servo updates per recorded sample
  double force_noise_sd = 0.0;  // N, added to the recorded force channel
  std::uint64_t seed = 0;
};

/// Drive the simulator through a constant-speed press and release with a
/// model-based tracking controller (cancels the button force at the measured
/// state, critically damped on the remaining error) and record the resulting
/// trace. The force channel holds the FD force felt by the probe.
FdTrace synthesize_press(const FdvvModel& model, const PressScript& script,
                         double dt = kControlDt, const SimConfig& config = {});

/// Run an open-loop applied-force profile (one value per control step).
FdTrace simulate_profile(const FdvvModel& model, const std::vector<double>& applied_forces,
                         double dt = kControlDt, const SimConfig& config = {},
                         std::vector<SimEvent>* events = nullptr);

}  // namespace cid::button
