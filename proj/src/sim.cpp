#include "gazerace/sim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gazerace/errors.hpp"

namespace gazerace {

double Vec3::norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }

void SimParams::validate() const {
  if (!(std::isfinite(dt) && dt > 0.0)) throw ConfigError("sim dt must be > 0");
  if (dt_us() < 1) throw ConfigError("sim dt must be at least 1 microsecond");
  if (!(std::isfinite(tau_v) && tau_v >= 0.0)) throw ConfigError("sim tau_v must be >= 0");
  if (!(std::isfinite(v_max) && v_max > 0.0)) throw ConfigError("sim v_max must be > 0");
  if (!(std::isfinite(landing_v) && landing_v > 0.0)) throw ConfigError("sim landing_v must be > 0");
  if (!(std::isfinite(takeoff_v) && takeoff_v > 0.0)) throw ConfigError("sim takeoff_v must be > 0");
  if (!(std::isfinite(landed_z) && landed_z >= 0.0)) throw ConfigError("sim landed_z must be >= 0");
  if (!(std::isfinite(max_frame_gap) && max_frame_gap >= dt))
    throw ConfigError("sim max_frame_gap must be >= dt");
}

std::int64_t SimParams::dt_us() const noexcept { return std::llround(dt * 1e6); }

double wrap_angle(double a) noexcept {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (a > -std::numbers::pi && a <= std::numbers::pi) return a;
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

DroneState step(const DroneState& state, const VelocitySetpoint& setpoint, const SimParams& params) {
  DroneState next = state;
  const double c = std::cos(state.yaw);
  const double s = std::sin(state.yaw);
  const Vec3 target{c * setpoint.pitch_v - s * setpoint.roll_v,
                    s * setpoint.pitch_v + c * setpoint.roll_v, setpoint.climb_v};

  if (params.tau_v == 0.0) {
    next.velocity = target;
  } else {
    // Explicit Euler on the first-order lag; the gain saturates at 1 when dt > tau.
    const double gain = std::min(1.0, params.dt / params.tau_v);
    next.velocity = state.velocity + gain * (target - state.velocity);
  }

  const double speed = next.velocity.norm();
  if (speed > params.v_max) next.velocity = (params.v_max / speed) * next.velocity;

  next.position = state.position + params.dt * next.velocity;
  if (next.position.z < 0.0) {
    next.position.z = 0.0;
    if (next.velocity.z < 0.0) next.velocity.z = 0.0;
  }
  next.yaw = wrap_angle(state.yaw + setpoint.yaw_rate * params.dt);
  return next;
}

void RaceTrack::validate() const {
  if (gates.empty()) throw ConfigError("track has no gates");
  for (std::size_t i = 0; i < gates.size(); ++i) {
    const auto& g = gates[i];
    if (!(std::isfinite(g.size) && g.size > 0.0)) {
      throw ConfigError("gate " + std::to_string(i) + " size must be > 0");
    }
    if (i > 0 && g.center == gates[i - 1].center) {
      throw ConfigError("gates " + std::to_string(i - 1) + " and " + std::to_string(i) +
                        " share a center");
    }
  }
}

RaceTrack default_track() {
  constexpr double kPi = std::numbers::pi;
  RaceTrack t;
  t.start = {0.0, 0.0, 0.0};
  t.start_yaw = 0.0;
  t.gates = {
      {{5.0, 0.0, 1.5}, 0.0, 1.4},
      {{14.0, 0.0, 2.5}, 0.0, 1.4},
      {{18.0, 5.0, 2.5}, kPi / 2, 1.4},
      {{14.0, 10.0, 1.5}, kPi, 1.4},
      {{10.0, 7.0, 1.5}, -kPi / 2, 1.4},
      {{7.0, 4.0, 1.5}, kPi, 1.4},
      {{4.0, 2.0, 1.5}, -kPi / 2, 1.4},
  };
  return t;
}

bool check_gate_crossing(const DroneState& prev, const DroneState& next, const Gate& gate) noexcept {
  const Vec3 normal{std::cos(gate.normal_yaw), std::sin(gate.normal_yaw), 0.0};
  const double s0 = normal.dot(prev.position - gate.center);
  const double s1 = normal.dot(next.position - gate.center);
  if (!(s0 < 0.0 && s1 >= 0.0)) return false;

  const double t = s0 / (s0 - s1);
  const Vec3 hit = prev.position + t * (next.position - prev.position);
  const Vec3 rel = hit - gate.center;
  const Vec3 lateral{-normal.y, normal.x, 0.0};
  const double half = gate.size / 2.0;
  return std::abs(lateral.dot(rel)) <= half && std::abs(rel.z) <= half;
}

Vehicle::Vehicle(DroneState initial, SimParams params) : state_(initial), params_(params) {
  params_.validate();
  state_.airborne = false;
  state_.velocity = {};
}

bool Vehicle::apply(const FlightCommand& cmd) {
  if (std::holds_alternative<command::Arm>(cmd)) {
    if (phase_ != FlightPhase::Disarmed) return false;
    armed_ = true;
    return true;
  }
  if (const auto* to = std::get_if<command::TakeOff>(&cmd)) {
    if (!armed_ || phase_ != FlightPhase::Disarmed || !(to->altitude > 0.0)) return false;
    phase_ = FlightPhase::TakingOff;
    target_alt_ = std::max(to->altitude, state_.position.z);
    state_.airborne = true;
    setpoint_ = {};
    return true;
  }
  if (std::holds_alternative<command::Land>(cmd)) {
    if (phase_ != FlightPhase::Flying && phase_ != FlightPhase::TakingOff) return false;
    phase_ = FlightPhase::Landing;
    setpoint_ = {};
    return true;
  }
  if (std::holds_alternative<command::Disarm>(cmd)) {
    if (phase_ != FlightPhase::Disarmed) return false;
    armed_ = false;
    return true;
  }
  const auto& sv = std::get<command::SetVelocity>(cmd);
  if (phase_ != FlightPhase::Flying) return false;
  setpoint_ = sv.setpoint;
  return true;
}

std::optional<SimEvent> Vehicle::tick() {
  const double dt = params_.dt;
  switch (phase_) {
    case FlightPhase::Disarmed:
      state_.velocity = {};
      return std::nullopt;

    case FlightPhase::TakingOff: {
      state_.velocity = {0.0, 0.0, params_.takeoff_v};
      state_.position.z += params_.takeoff_v * dt;
      if (state_.position.z >= target_alt_) {
        state_.position.z = target_alt_;
        state_.velocity = {};
        phase_ = FlightPhase::Flying;
        return SimEvent::ReachedTakeoffAltitude;
      }
      return std::nullopt;
    }

    case FlightPhase::Flying:
      state_ = step(state_, setpoint_, params_);
      return std::nullopt;

    case FlightPhase::Landing: {
      state_.velocity = {0.0, 0.0, -params_.landing_v};
      state_.position.z -= params_.landing_v * dt;
      if (state_.position.z <= params_.landed_z) {
        state_.position.z = 0.0;
        state_.velocity = {};
        state_.airborne = false;
        phase_ = FlightPhase::Disarmed;
        armed_ = false;
        return SimEvent::Landed;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace gazerace
