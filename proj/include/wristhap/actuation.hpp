#pragma once

// Tension-mode model of the three geared DC motors. Strings are massless and
// inextensible; a slack string is a string at exactly zero tension.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "wristhap/geometry.hpp"
#include "wristhap/statics.hpp"

namespace wristhap {

struct MotorParams {
  double spool_radius = 0.01;  // m
  double slew = 200.0;         // N/s
  double t_max = 20.0;         // N

  bool is_valid() const {
    return std::isfinite(spool_radius) && std::isfinite(slew) && std::isfinite(t_max) &&
           spool_radius > 0.0 && slew > 0.0 && t_max > 0.0;
  }
};

/// Spool angle surrogate: a tension change dT winds dT / k of string, with k in N/m.
inline constexpr double kStringTakeUpStiffness = 2000.0;

struct MotorState {
  double commanded_tension = 0.0;  // N
  double actual_tension = 0.0;     // N
  double spool_angle = 0.0;        // rad
  bool saturated = false;

  bool operator==(const MotorState&) const = default;
};

struct DeviceState {
  std::array<MotorState, kStrings> motors{};
  Pose pose = Pose::identity();
  double time = 0.0;  // s

  Tensions actual_tensions() const {
    return {{motors[0].actual_tension, motors[1].actual_tension, motors[2].actual_tension}};
  }
};

inline MotorState step_motor(const MotorState& s, double cmd, double dt, const MotorParams& p) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (!std::isfinite(cmd)) throw std::invalid_argument("tension command must be finite");

  const double max_step = p.slew * dt;
  const double target = std::clamp(cmd, 0.0, p.t_max);
  const double delta = target - s.actual_tension;

  MotorState next = s;
  next.commanded_tension = cmd;
  next.actual_tension = std::abs(delta) > max_step
                            ? s.actual_tension + std::copysign(max_step, delta)
                            : target;
  next.actual_tension = std::clamp(next.actual_tension, 0.0, p.t_max);
  next.saturated = std::abs(cmd - s.actual_tension) > max_step || cmd < 0.0 || cmd > p.t_max;
  next.spool_angle = s.spool_angle + (next.actual_tension - s.actual_tension) /
                                         (kStringTakeUpStiffness * p.spool_radius);
  return next;
}

struct DeviceStep {
  DeviceState state;
  TorqueCommand applied;
};

inline DeviceStep simulate_device(const DeviceState& d, const Tensions& cmds, double dt,
                                  const MomentMatrix& m, const MotorParams& p) {
  DeviceStep out{d, {}};
  for (int i = 0; i < kStrings; ++i)
    out.state.motors[i] = step_motor(d.motors[i], cmds.t[i], dt, p);
  out.state.time = d.time + dt;
  out.applied = forward_torque(m, out.state.actual_tensions());
  return out;
}

}  // namespace wristhap
