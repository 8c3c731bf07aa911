#include "gazerace/classifier.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "gazerace/errors.hpp"

namespace gazerace {

namespace {

constexpr std::array<std::string_view, kActionCount> kNames = {
    "Up", "Down", "Left", "Right", "FarLeft", "FarRight", "Wide", "Squint", "Center", "Raise",
};

bool same_name(std::string_view canonical, std::string_view input) {
  std::size_t j = 0;
  for (char c : input) {
    if (c == '-' || c == '_' || c == ' ') continue;
    if (j >= canonical.size()) return false;
    if (std::tolower(static_cast<unsigned char>(c)) !=
        std::tolower(static_cast<unsigned char>(canonical[j]))) {
      return false;
    }
    ++j;
  }
  return j == canonical.size();
}

// Shared by Debouncer and step() so both carry identical semantics.
bool debounce_update(Action& candidate, int& run_length, Action& emitted, Action raw,
                     int frames) noexcept {
  if (raw == candidate) {
    if (run_length < std::numeric_limits<int>::max()) ++run_length;
  } else {
    candidate = raw;
    run_length = 1;
  }
  if (run_length >= frames && candidate != emitted) {
    emitted = candidate;
    return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(Action a) noexcept { return kNames[index_of(a)]; }

std::optional<Action> parse_action(std::string_view name) noexcept {
  for (Action a : kAllActions) {
    if (same_name(kNames[index_of(a)], name)) return a;
  }
  return std::nullopt;
}

CalibrationProfile calibrate(std::span<const CalibrationSample> samples,
                             const CalibrationParams& params) {
  if (samples.empty()) throw EmptyInput("calibration needs at least one sample");
  if (!(params.min_spread > 0.0)) throw ConfigError("calibration min_spread must be > 0");

  std::array<std::vector<RatioVector>, kActionCount> grouped;
  for (const auto& s : samples) grouped[index_of(s.action)].push_back(s.ratios);

  CalibrationProfile profile;
  for (Action a : kAllActions) {
    const auto& group = grouped[index_of(a)];
    const std::string name(to_string(a));
    if (group.empty()) throw MissingAction(name);
    if (group.size() < params.min_samples) {
      throw InsufficientSamples(name, group.size(), params.min_samples);
    }

    const double n = static_cast<double>(group.size());
    ActionStats stats;
    stats.sample_count = group.size();
    for (std::size_t k = 0; k < RatioVector::kSize; ++k) {
      double sum = 0.0;
      for (const auto& r : group) sum += r[k];
      const double mean = sum / n;
      double sq = 0.0;
      for (const auto& r : group) sq += (r[k] - mean) * (r[k] - mean);
      const double sd = std::sqrt(sq / n);

      const double cv = sd == 0.0 ? 0.0 : sd / std::abs(mean);
      if (!(cv <= params.max_cv)) throw NoisyAction(name);

      stats.centroid[k] = mean;
      stats.spread[k] = std::max(sd, params.min_spread);
    }
    profile[a] = stats;
  }
  return profile;
}

double normalized_distance(const RatioVector& ratios, const ActionStats& stats) noexcept {
  double d = 0.0;
  for (std::size_t k = 0; k < RatioVector::kSize; ++k) {
    const double z = (ratios[k] - stats.centroid[k]) / stats.spread[k];
    d += z * z;
  }
  return d;
}

Action classify_frame(const RatioVector& ratios, const CalibrationProfile& profile) noexcept {
  Action best = kAllActions.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (Action a : kAllActions) {
    const double d = normalized_distance(ratios, profile[a]);
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  return best;
}

void SmoothingParams::validate() const {
  if (!(ema_alpha > 0.0 && ema_alpha <= 1.0)) {
    throw ConfigError("classifier ema_alpha must be in (0, 1]");
  }
  if (debounce_frames < 1) throw ConfigError("classifier debounce_frames must be >= 1");
}

Debouncer::Debouncer(int frames) : frames_(frames) {
  if (frames < 1) throw ConfigError("debounce frames must be >= 1");
}

Debouncer::Output Debouncer::push(Action raw) noexcept {
  const bool changed = debounce_update(candidate_, run_length_, emitted_, raw, frames_);
  return {emitted_, changed};
}

StepResult step(const ClassifierState& state, const RatioVector& ratios,
                const CalibrationProfile& profile, const SmoothingParams& params) {
  params.validate();
  ClassifierState next = state;
  if (!next.primed) {
    next.ema = ratios;
    next.primed = true;
  } else {
    const double a = params.ema_alpha;
    for (std::size_t k = 0; k < RatioVector::kSize; ++k) {
      next.ema[k] = a * ratios[k] + (1.0 - a) * next.ema[k];
    }
  }
  const Action raw = classify_frame(next.ema, profile);
  const bool changed =
      debounce_update(next.candidate, next.run_length, next.emitted, raw, params.debounce_frames);
  return {next, next.emitted, changed, raw};
}

}  // namespace gazerace
