#include "gazerace/race.hpp"

#include <cmath>

#include "gazerace/errors.hpp"

namespace gazerace {

namespace {

DroneState initial_state(const RaceTrack& track) {
  DroneState s;
  s.position = track.start;
  s.yaw = wrap_angle(track.start_yaw);
  return s;
}

}  // namespace

RaceSession::RaceSession(RaceTrack track, SimParams params)
    : track_(std::move(track)), vehicle_(initial_state(track_), params) {
  track_.validate();
  result_.gate_count = track_.gates.size();
}

void RaceSession::start(std::int64_t t_us) {
  started_ = true;
  time_us_ = t_us;
  const auto& s = vehicle_.state();
  trajectory_.ticks.push_back({t_us, s.position, s.velocity, s.yaw, vehicle_.phase(), 0});
}

std::optional<SimEvent> RaceSession::tick() {
  const DroneState prev = vehicle_.state();
  const auto event = vehicle_.tick();
  time_us_ += vehicle_.params().dt_us();
  const DroneState& next = vehicle_.state();

  if (vehicle_.phase() == FlightPhase::Flying && !result_.takeoff_complete_us) {
    result_.takeoff_complete_us = time_us_;
  }
  const std::size_t next_gate = result_.gate_times_us.size();
  if (next_gate < track_.gates.size() && check_gate_crossing(prev, next, track_.gates[next_gate])) {
    result_.gate_times_us.push_back(time_us_);
  }
  trajectory_.ticks.push_back(
      {time_us_, next.position, next.velocity, next.yaw, vehicle_.phase(), gates_passed()});
  return event;
}

void RaceSession::advance_to(std::int64_t t_us, const EventHandler& on_event) {
  if (!started_) start(t_us);
  const std::int64_t dt = vehicle_.params().dt_us();
  while (t_us >= time_us_ && t_us - time_us_ >= dt) {
    if (auto ev = tick(); ev && on_event) on_event(time_us_, *ev);
  }
}

bool RaceSession::apply(std::int64_t t_us, const FlightCommand& cmd) {
  if (!started_) start(t_us);
  const bool ok = vehicle_.apply(cmd);
  if (!ok) ++rejected_;
  commands_.push_back({t_us, vehicle_.phase(), cmd});
  return ok;
}

void RaceSession::settle_landing(const EventHandler& on_event) {
  if (!started_ || vehicle_.phase() != FlightPhase::Landing) return;
  const auto& p = vehicle_.params();
  const auto budget =
      static_cast<long>(std::ceil(vehicle_.state().position.z / (p.landing_v * p.dt))) + 2;
  for (long i = 0; i < budget && vehicle_.phase() == FlightPhase::Landing; ++i) {
    if (auto ev = tick(); ev && on_event) on_event(time_us_, *ev);
  }
}

RaceResult RaceSession::result() const {
  RaceResult r = result_;
  r.splits_s.clear();
  if (r.takeoff_complete_us) {
    for (auto t : r.gate_times_us) {
      r.splits_s.push_back(static_cast<double>(t - *r.takeoff_complete_us) / 1e6);
    }
  }
  r.finished = !track_.gates.empty() && r.gate_times_us.size() == track_.gates.size();
  r.stream_exhausted = started_ && (vehicle_.phase() != FlightPhase::Disarmed || vehicle_.armed());
  if (r.stream_exhausted) r.finished = false;
  if (r.finished && !r.splits_s.empty()) r.total_time_s = r.splits_s.back();
  return r;
}

Pipeline::Pipeline(PipelineConfig config, CalibrationProfile profile, RaceTrack track)
    : config_(std::move(config)),
      profile_(std::move(profile)),
      session_(std::move(track), config_.sim) {
  config_.geometry.validate();
  config_.smoothing.validate();
  config_.controller.validate();
}

void Pipeline::issue(std::int64_t t_us, const std::vector<FlightCommand>& cmds) {
  for (const auto& c : cmds) session_.apply(t_us, c);
}

void Pipeline::handle_event(std::int64_t t_us, SimEvent ev) {
  auto out = on_sim_event(controller_, ev);
  controller_ = out.state;
  issue(t_us, out.commands);
}

FrameOutcome Pipeline::feed(const LandmarkFrame& frame) {
  FrameOutcome outcome;
  if (last_frame_us_ && frame.timestamp_us <= *last_frame_us_) {
    ++out_of_order_;
    return outcome;
  }
  // A wild timestamp would otherwise make the simulator grind through the gap.
  if (last_frame_us_ &&
      static_cast<double>(frame.timestamp_us) - static_cast<double>(*last_frame_us_) >
          config_.sim.max_frame_gap * 1e6) {
    ++gap_rejected_;
    return outcome;
  }
  last_frame_us_ = frame.timestamp_us;

  session_.advance_to(frame.timestamp_us,
                      [this](std::int64_t t, SimEvent ev) { handle_event(t, ev); });

  RatioVector ratios;
  try {
    ratios = extract_ratios(frame, config_.geometry);
  } catch (const MissingLandmark&) {
    ++unusable_;
    return outcome;
  } catch (const DegenerateGeometry&) {
    ++unusable_;
    return outcome;
  }

  const auto cls = step(classifier_, ratios, profile_, config_.smoothing);
  classifier_ = cls.state;
  auto ctl = map_action(controller_, cls.emitted, cls.changed, config_.controller);
  controller_ = ctl.state;
  issue(frame.timestamp_us, ctl.commands);

  ++used_;
  outcome.used = true;
  outcome.raw = cls.raw;
  outcome.emitted = cls.emitted;
  outcome.changed = cls.changed;
  outcome.commands = std::move(ctl.commands);
  return outcome;
}

RaceResult Pipeline::finish() {
  session_.settle_landing([this](std::int64_t t, SimEvent ev) { handle_event(t, ev); });
  return session_.result();
}

RaceOutput run_race(std::span<const LandmarkFrame> frames, const RaceTrack& track,
                    const PipelineConfig& config, const CalibrationProfile& profile) {
  Pipeline pipeline(config, profile, track);
  for (const auto& f : frames) pipeline.feed(f);
  auto result = pipeline.finish();
  return {pipeline.session().trajectory(), pipeline.session().commands(), std::move(result)};
}

RaceOutput run_race(std::span<const TimedCommand> commands, const RaceTrack& track,
                    const SimParams& params) {
  RaceSession session(track, params);
  for (const auto& tc : commands) {
    session.advance_to(tc.t_us);
    session.apply(tc.t_us, tc.command);
  }
  session.settle_landing();
  auto result = session.result();
  return {session.trajectory(), session.commands(), std::move(result)};
}

}  // namespace gazerace
