#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gazerace/controller.hpp"

namespace gazerace {

/// World frame: x forward at yaw 0, y to the right of it, z up. Yaw grows
/// clockwise seen from above, so heading (cos yaw, sin yaw) and body-right
/// (-sin yaw, cos yaw).
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
  double norm() const noexcept;
  double dot(Vec3 o) const noexcept { return x * o.x + y * o.y + z * o.z; }
};

struct DroneState {
  Vec3 position;
  Vec3 velocity;
  double yaw = 0.0;
  bool airborne = false;

  friend bool operator==(const DroneState&, const DroneState&) = default;
};

struct SimParams {
  double dt = 0.02;          // s per tick
  double tau_v = 0.3;        // s, velocity response time constant
  double v_max = 6.5;        // m/s, hard clamp on |velocity|
  double landing_v = 0.5;    // m/s descent during Land
  double takeoff_v = 1.0;    // m/s climb during TakeOff
  double landed_z = 0.01;    // m, touchdown threshold
  double max_frame_gap = 10.0;  // s, largest input gap the simulator catches up on

  void validate() const;
  std::int64_t dt_us() const noexcept;
};

/// Wraps to (-pi, pi].
double wrap_angle(double a) noexcept;

/// Position-hold kinematics for one tick of commanded flight.
DroneState step(const DroneState& state, const VelocitySetpoint& setpoint, const SimParams& params);

struct Gate {
  Vec3 center;
  double normal_yaw = 0.0;  // pass direction: (cos, sin, 0)
  double size = 1.4;        // square side, m

  friend bool operator==(const Gate&, const Gate&) = default;
};

struct RaceTrack {
  std::vector<Gate> gates;
  Vec3 start;
  double start_yaw = 0.0;

  void validate() const;
  friend bool operator==(const RaceTrack&, const RaceTrack&) = default;
};

/// The built-in seven-gate loop (also shipped as data/default_track.json).
RaceTrack default_track();

/// True when prev->next crosses the gate plane along its normal and the
/// crossing point lies inside the square aperture.
bool check_gate_crossing(const DroneState& prev, const DroneState& next, const Gate& gate) noexcept;

/// Simulated autopilot: consumes FlightCommands, advances one tick at a
/// time, and reports takeoff/landing completion.
class Vehicle {
 public:
  Vehicle(DroneState initial, SimParams params);

  /// Returns false when the command is not accepted in the current phase.
  bool apply(const FlightCommand& cmd);
  std::optional<SimEvent> tick();

  const DroneState& state() const noexcept { return state_; }
  FlightPhase phase() const noexcept { return phase_; }
  bool armed() const noexcept { return armed_; }
  const VelocitySetpoint& setpoint() const noexcept { return setpoint_; }
  const SimParams& params() const noexcept { return params_; }

 private:
  DroneState state_;
  SimParams params_;
  FlightPhase phase_ = FlightPhase::Disarmed;
  bool armed_ = false;
  double target_alt_ = 0.0;
  VelocitySetpoint setpoint_;
};

}  // namespace gazerace
