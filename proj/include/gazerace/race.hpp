#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gazerace/classifier.hpp"
#include "gazerace/controller.hpp"
#include "gazerace/landmark.hpp"
#include "gazerace/sim.hpp"

namespace gazerace {

struct TickRecord {
  std::int64_t t_us = 0;
  Vec3 position;
  Vec3 velocity;
  double yaw = 0.0;
  FlightPhase phase = FlightPhase::Disarmed;
  int gates_passed = 0;

  friend bool operator==(const TickRecord&, const TickRecord&) = default;
};

struct CommandRecord {
  std::int64_t t_us = 0;
  FlightPhase phase = FlightPhase::Disarmed;  // phase after the command was issued
  FlightCommand command;

  friend bool operator==(const CommandRecord&, const CommandRecord&) = default;
};

/// Append-only per-tick record of a flight.
struct TrajectoryLog {
  std::vector<TickRecord> ticks;
  friend bool operator==(const TrajectoryLog&, const TrajectoryLog&) = default;
};

struct RaceResult {
  std::optional<std::int64_t> takeoff_complete_us;
  std::vector<std::int64_t> gate_times_us;
  std::vector<double> splits_s;  // seconds after takeoff-complete, one per gate passed
  bool finished = false;         // every gate crossed in order
  bool stream_exhausted = false; // input ended while the drone was still armed
  std::optional<double> total_time_s;
  std::size_t gate_count = 0;
};

/// Fixed-tick simulation of one race: vehicle, gate progress and logs.
/// Time is integer microseconds; the simulator sub-steps to catch up with
/// each input timestamp.
class RaceSession {
 public:
  using EventHandler = std::function<void(std::int64_t t_us, SimEvent)>;

  RaceSession(RaceTrack track, SimParams params);

  bool started() const noexcept { return started_; }
  void start(std::int64_t t_us);
  /// Runs ticks while a whole tick fits before t_us.
  void advance_to(std::int64_t t_us, const EventHandler& on_event = {});
  /// Runs one tick; returns the event raised, if any.
  std::optional<SimEvent> tick();
  bool apply(std::int64_t t_us, const FlightCommand& cmd);
  /// If the vehicle is landing, keep ticking until touchdown.
  void settle_landing(const EventHandler& on_event = {});

  std::int64_t time_us() const noexcept { return time_us_; }
  const Vehicle& vehicle() const noexcept { return vehicle_; }
  const RaceTrack& track() const noexcept { return track_; }
  int gates_passed() const noexcept { return static_cast<int>(result_.gate_times_us.size()); }
  const TrajectoryLog& trajectory() const noexcept { return trajectory_; }
  const std::vector<CommandRecord>& commands() const noexcept { return commands_; }
  /// Commands the vehicle refused in its current phase.
  std::size_t rejected_commands() const noexcept { return rejected_; }
  RaceResult result() const;

 private:
  RaceTrack track_;
  Vehicle vehicle_;
  bool started_ = false;
  std::int64_t time_us_ = 0;
  TrajectoryLog trajectory_;
  std::vector<CommandRecord> commands_;
  RaceResult result_;
  std::size_t rejected_ = 0;
};

struct PipelineConfig {
  EyeGeometryConfig geometry;
  SmoothingParams smoothing;
  ControllerConfig controller;
  SimParams sim;
};

struct FrameOutcome {
  bool used = false;  // false when the frame lacked usable landmarks or was out of order
  Action raw = Action::Center;
  Action emitted = Action::Center;
  bool changed = false;
  std::vector<FlightCommand> commands;
};

/// Landmark frames in, flight out: ratios, classifier, controller and
/// simulator advanced once per frame.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, CalibrationProfile profile, RaceTrack track);

  FrameOutcome feed(const LandmarkFrame& frame);
  /// End of input: lets a landing complete, then freezes the result.
  RaceResult finish();

  const RaceSession& session() const noexcept { return session_; }
  const ClassifierState& classifier() const noexcept { return classifier_; }
  const ControllerState& controller() const noexcept { return controller_; }
  Action current_action() const noexcept { return classifier_.emitted; }
  std::size_t frames_used() const noexcept { return used_; }
  std::size_t frames_unusable() const noexcept { return unusable_; }
  std::size_t frames_out_of_order() const noexcept { return out_of_order_; }
  /// Frames dropped for jumping further ahead than sim.max_frame_gap.
  std::size_t frames_gap_rejected() const noexcept { return gap_rejected_; }

 private:
  void handle_event(std::int64_t t_us, SimEvent ev);
  void issue(std::int64_t t_us, const std::vector<FlightCommand>& cmds);

  PipelineConfig config_;
  CalibrationProfile profile_;
  RaceSession session_;
  ClassifierState classifier_;
  ControllerState controller_;
  std::optional<std::int64_t> last_frame_us_;
  std::size_t used_ = 0;
  std::size_t unusable_ = 0;
  std::size_t out_of_order_ = 0;
  std::size_t gap_rejected_ = 0;
};

struct TimedCommand {
  std::int64_t t_us = 0;
  FlightCommand command;
};

struct RaceOutput {
  TrajectoryLog trajectory;
  std::vector<CommandRecord> commands;
  RaceResult result;
};

/// Full pipeline over a landmark stream.
RaceOutput run_race(std::span<const LandmarkFrame> frames, const RaceTrack& track,
                    const PipelineConfig& config, const CalibrationProfile& profile);

/// Bypasses gaze and controller: timestamped commands straight to the vehicle.
RaceOutput run_race(std::span<const TimedCommand> commands, const RaceTrack& track,
                    const SimParams& params);

}  // namespace gazerace
