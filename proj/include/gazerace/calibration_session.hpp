#pragma once

#include <array>
#include <optional>
#include <vector>

#include <json.hpp>

#include "gazerace/classifier.hpp"
#include "gazerace/landmark.hpp"

namespace gazerace {

/// Server side of the calibration wizard. The console drives it with
/// messages on the telemetry channel:
///
///   {"type":"wizard","cmd":"begin","action":"Up"}   start (re)collecting Up
///   {"type":"wizard","cmd":"end"}                   stop collecting
///   {"type":"wizard","cmd":"finish"}                calibrate and persist
///   {"type":"wizard","cmd":"abort"}                 discard everything
///   {"type":"calibration_sample","action":"Up","ratios":[h,v,open,brow]}
///
/// Landmark frames that arrive between begin and end are labeled with the
/// active action.
class CalibrationSession {
 public:
  enum class State { Collecting, Succeeded, Aborted };

  CalibrationSession(EyeGeometryConfig geometry, CalibrationParams params);

  /// Returns the replies to broadcast (status, result, next prompt).
  std::vector<nlohmann::json> handle_message(const nlohmann::json& msg);
  /// Returns true when the frame was stored as a sample.
  bool on_frame(const LandmarkFrame& frame);
  void add_sample(const CalibrationSample& sample);

  /// Prompt for the first action still short of samples; nullopt when all are filled.
  std::optional<nlohmann::json> next_prompt() const;
  nlohmann::json status(Action a) const;

  /// Runs calibrate() over everything collected. Throws calibration errors.
  CalibrationProfile finish();

  State state() const noexcept { return state_; }
  bool done() const noexcept { return state_ != State::Collecting; }
  std::optional<Action> active() const noexcept { return active_; }
  std::size_t count(Action a) const noexcept { return samples_[index_of(a)].size(); }
  const std::optional<CalibrationProfile>& profile() const noexcept { return profile_; }

 private:
  nlohmann::json result_message();

  EyeGeometryConfig geometry_;
  CalibrationParams params_;
  std::array<std::vector<RatioVector>, kActionCount> samples_;
  std::optional<Action> active_;
  State state_ = State::Collecting;
  std::optional<CalibrationProfile> profile_;
};

}  // namespace gazerace
