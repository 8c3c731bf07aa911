#pragma once

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "gazerace/classifier.hpp"

namespace gazerace {

/// Body-frame rate command: forward, right, clockwise-from-above yaw, up.
struct VelocitySetpoint {
  double pitch_v = 0.0;
  double roll_v = 0.0;
  double yaw_rate = 0.0;
  double climb_v = 0.0;

  bool is_zero() const noexcept {
    return pitch_v == 0.0 && roll_v == 0.0 && yaw_rate == 0.0 && climb_v == 0.0;
  }
  friend bool operator==(const VelocitySetpoint&, const VelocitySetpoint&) = default;
};

namespace command {
struct Arm {
  friend bool operator==(const Arm&, const Arm&) = default;
};
struct TakeOff {
  double altitude = 0.0;
  friend bool operator==(const TakeOff&, const TakeOff&) = default;
};
struct Land {
  friend bool operator==(const Land&, const Land&) = default;
};
struct Disarm {
  friend bool operator==(const Disarm&, const Disarm&) = default;
};
struct SetVelocity {
  VelocitySetpoint setpoint;
  friend bool operator==(const SetVelocity&, const SetVelocity&) = default;
};
}  // namespace command

using FlightCommand = std::variant<command::Arm, command::TakeOff, command::Land,
                                   command::Disarm, command::SetVelocity>;

std::string_view command_name(const FlightCommand& cmd) noexcept;

enum class FlightPhase { Disarmed, TakingOff, Flying, Landing };

std::string_view to_string(FlightPhase p) noexcept;
std::optional<FlightPhase> parse_phase(std::string_view name) noexcept;

struct ControllerState {
  FlightPhase phase = FlightPhase::Disarmed;
  bool raise_latched = false;
  /// Action whose setpoint is currently in force while Flying.
  std::optional<Action> commanded;

  friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

struct ControllerConfig {
  double v_xy = 1.0;        // m/s
  double v_z = 0.5;         // m/s
  double yaw_rate = 0.8;    // rad/s
  double takeoff_alt = 1.5; // m

  void validate() const;
};

struct ControllerOutput {
  ControllerState state;
  std::vector<FlightCommand> commands;
};

/// Setpoint for a non-Raise action; Center (and Raise) map to all zeros.
VelocitySetpoint setpoint_for(Action action, const ControllerConfig& cfg) noexcept;

/// One step of the gaze control loop. Raise toggles arm/takeoff and land on
/// its rising edge only. Motion actions take effect only while Flying; a new
/// SetVelocity is issued whenever the action in force changes.
ControllerOutput map_action(const ControllerState& state, Action action, bool changed,
                            const ControllerConfig& cfg);

enum class SimEvent { ReachedTakeoffAltitude, Landed };

std::string_view to_string(SimEvent e) noexcept;

/// Landed yields Disarm. Throws IllegalTransition when the event does not
/// belong to the current phase.
ControllerOutput on_sim_event(const ControllerState& state, SimEvent event);

}  // namespace gazerace
