#include "gazerace/controller.hpp"

#include <cmath>
#include <string>

#include "gazerace/errors.hpp"

namespace gazerace {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::string_view command_name(const FlightCommand& cmd) noexcept {
  return std::visit(overloaded{
                        [](const command::Arm&) { return std::string_view("Arm"); },
                        [](const command::TakeOff&) { return std::string_view("TakeOff"); },
                        [](const command::Land&) { return std::string_view("Land"); },
                        [](const command::Disarm&) { return std::string_view("Disarm"); },
                        [](const command::SetVelocity&) { return std::string_view("SetVelocity"); },
                    },
                    cmd);
}

std::string_view to_string(FlightPhase p) noexcept {
  switch (p) {
    case FlightPhase::Disarmed: return "Disarmed";
    case FlightPhase::TakingOff: return "TakingOff";
    case FlightPhase::Flying: return "Flying";
    case FlightPhase::Landing: return "Landing";
  }
  return "Disarmed";
}

std::optional<FlightPhase> parse_phase(std::string_view name) noexcept {
  for (auto p : {FlightPhase::Disarmed, FlightPhase::TakingOff, FlightPhase::Flying,
                 FlightPhase::Landing}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::string_view to_string(SimEvent e) noexcept {
  return e == SimEvent::Landed ? "Landed" : "ReachedTakeoffAltitude";
}

void ControllerConfig::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(v_xy) || !positive(v_z) || !positive(yaw_rate)) {
    throw ConfigError("controller speeds must be finite and > 0");
  }
  if (!positive(takeoff_alt)) throw ConfigError("controller takeoff_alt must be > 0");
}

VelocitySetpoint setpoint_for(Action action, const ControllerConfig& cfg) noexcept {
  VelocitySetpoint sp;
  switch (action) {
    case Action::Wide: sp.pitch_v = cfg.v_xy; break;
    case Action::Squint: sp.pitch_v = -cfg.v_xy; break;
    case Action::Left: sp.roll_v = -cfg.v_xy; break;
    case Action::Right: sp.roll_v = cfg.v_xy; break;
    case Action::FarLeft: sp.yaw_rate = -cfg.yaw_rate; break;
    case Action::FarRight: sp.yaw_rate = cfg.yaw_rate; break;
    case Action::Up: sp.climb_v = cfg.v_z; break;
    case Action::Down: sp.climb_v = -cfg.v_z; break;
    case Action::Center:
    case Action::Raise: break;
  }
  return sp;
}

ControllerOutput map_action(const ControllerState& state, Action action, bool changed,
                            const ControllerConfig& cfg) {
  ControllerOutput out{state, {}};
  auto& next = out.state;

  if (action == Action::Raise) {
    const bool rising = changed && !state.raise_latched;
    next.raise_latched = true;
    if (!rising) return out;
    if (state.phase == FlightPhase::Disarmed) {
      out.commands.emplace_back(command::Arm{});
      out.commands.emplace_back(command::TakeOff{cfg.takeoff_alt});
      next.phase = FlightPhase::TakingOff;
    } else if (state.phase == FlightPhase::Flying) {
      out.commands.emplace_back(command::Land{});
      next.phase = FlightPhase::Landing;
      next.commanded.reset();
    }
    return out;
  }

  next.raise_latched = false;
  if (state.phase != FlightPhase::Flying) return out;
  if (state.commanded == action) return out;
  out.commands.emplace_back(command::SetVelocity{setpoint_for(action, cfg)});
  next.commanded = action;
  return out;
}

ControllerOutput on_sim_event(const ControllerState& state, SimEvent event) {
  ControllerOutput out{state, {}};
  if (event == SimEvent::ReachedTakeoffAltitude && state.phase == FlightPhase::TakingOff) {
    out.state.phase = FlightPhase::Flying;
    out.state.commanded.reset();
    return out;
  }
  if (event == SimEvent::Landed && state.phase == FlightPhase::Landing) {
    out.state.phase = FlightPhase::Disarmed;
    out.commands.emplace_back(command::Disarm{});
    return out;
  }
  throw IllegalTransition(std::string("event ") + std::string(to_string(event)) +
                          " is not valid in phase " + std::string(to_string(state.phase)));
}

}  // namespace gazerace
