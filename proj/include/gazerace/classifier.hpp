#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gazerace/landmark.hpp"

namespace gazerace {

/// The ten control gestures. Declaration order is the tie-break order.
enum class Action : int {
  Up = 0,
  Down,
  Left,
  Right,
  FarLeft,
  FarRight,
  Wide,
  Squint,
  Center,
  Raise,
};

inline constexpr std::size_t kActionCount = 10;

inline constexpr std::array<Action, kActionCount> kAllActions = {
    Action::Up,       Action::Down, Action::Left,   Action::Right,  Action::FarLeft,
    Action::FarRight, Action::Wide, Action::Squint, Action::Center, Action::Raise,
};

std::string_view to_string(Action a) noexcept;
/// Accepts the canonical names ("FarLeft") and lower/kebab forms ("far-left").
std::optional<Action> parse_action(std::string_view name) noexcept;

inline constexpr std::size_t index_of(Action a) noexcept { return static_cast<std::size_t>(a); }

struct CalibrationSample {
  Action action = Action::Center;
  RatioVector ratios;
};

struct CalibrationParams {
  std::size_t min_samples = 30;
  double min_spread = 0.01;
  double max_cv = 0.5;
};

struct ActionStats {
  RatioVector centroid;
  RatioVector spread;
  std::size_t sample_count = 0;

  friend bool operator==(const ActionStats&, const ActionStats&) = default;
};

struct CalibrationProfile {
  std::array<ActionStats, kActionCount> actions{};

  const ActionStats& operator[](Action a) const noexcept { return actions[index_of(a)]; }
  ActionStats& operator[](Action a) noexcept { return actions[index_of(a)]; }

  friend bool operator==(const CalibrationProfile&, const CalibrationProfile&) = default;
};

/// Per-action mean and (population) standard deviation over the labeled
/// samples. Rejects the calibration as a whole when any action is missing,
/// underfilled, or has a component whose coefficient of variation exceeds
/// params.max_cv.
CalibrationProfile calibrate(std::span<const CalibrationSample> samples,
                             const CalibrationParams& params = {});

/// Spread-normalized squared distance to one action's centroid.
double normalized_distance(const RatioVector& ratios, const ActionStats& stats) noexcept;

/// Nearest centroid; ties go to the earlier action in declaration order.
Action classify_frame(const RatioVector& ratios, const CalibrationProfile& profile) noexcept;

struct SmoothingParams {
  double ema_alpha = 0.4;
  int debounce_frames = 3;

  /// Throws ConfigError when out of range.
  void validate() const;
};

/// Emits a label only once it has been the raw label for `frames`
/// consecutive inputs.
class Debouncer {
 public:
  struct Output {
    Action emitted;
    bool changed;
  };

  explicit Debouncer(int frames = 3);

  Output push(Action raw) noexcept;

  Action candidate() const noexcept { return candidate_; }
  int run_length() const noexcept { return run_length_; }
  Action emitted() const noexcept { return emitted_; }

 private:
  int frames_;
  Action candidate_ = Action::Center;
  int run_length_ = 1;
  Action emitted_ = Action::Center;
};

struct ClassifierState {
  Action candidate = Action::Center;
  int run_length = 1;
  Action emitted = Action::Center;
  RatioVector ema;
  bool primed = false;  // false until the first frame seeds the EMA
};

struct StepResult {
  ClassifierState state;
  Action emitted;
  bool changed;
  Action raw;
};

/// EMA-smooth the features, classify, then debounce. The first frame seeds
/// the EMA directly.
StepResult step(const ClassifierState& state, const RatioVector& ratios,
                const CalibrationProfile& profile, const SmoothingParams& params);

}  // namespace gazerace
