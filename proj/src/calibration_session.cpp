#include "gazerace/calibration_session.hpp"

#include <cmath>

#include "gazerace/errors.hpp"

namespace gazerace {

using nlohmann::json;

CalibrationSession::CalibrationSession(EyeGeometryConfig geometry, CalibrationParams params)
    : geometry_(std::move(geometry)), params_(params) {
  geometry_.validate();
}

bool CalibrationSession::on_frame(const LandmarkFrame& frame) {
  if (done() || !active_) return false;
  try {
    samples_[index_of(*active_)].push_back(extract_ratios(frame, geometry_));
    return true;
  } catch (const MissingLandmark&) {
    return false;
  } catch (const DegenerateGeometry&) {
    return false;
  }
}

void CalibrationSession::add_sample(const CalibrationSample& sample) {
  if (done()) return;
  for (std::size_t k = 0; k < RatioVector::kSize; ++k) {
    if (!std::isfinite(sample.ratios[k]) || sample.ratios[k] < 0.0) {
      throw MalformedFrame("calibration sample ratios must be finite and >= 0");
    }
  }
  samples_[index_of(sample.action)].push_back(sample.ratios);
}

json CalibrationSession::status(Action a) const {
  const auto& group = samples_[index_of(a)];
  json spread = json::array();
  for (std::size_t k = 0; k < RatioVector::kSize; ++k) {
    double mean = 0.0;
    for (const auto& r : group) mean += r[k];
    mean = group.empty() ? 0.0 : mean / static_cast<double>(group.size());
    double sq = 0.0;
    for (const auto& r : group) sq += (r[k] - mean) * (r[k] - mean);
    spread.push_back(group.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(group.size())));
  }
  return {{"type", "calibration_status"},
          {"action", to_string(a)},
          {"collecting", active_ == a},
          {"count", group.size()},
          {"needed", params_.min_samples},
          {"spread", spread}};
}

std::optional<json> CalibrationSession::next_prompt() const {
  if (done()) return std::nullopt;
  for (std::size_t i = 0; i < kActionCount; ++i) {
    const Action a = kAllActions[i];
    if (samples_[i].size() < params_.min_samples) {
      return json{{"type", "prompt"}, {"action", to_string(a)}, {"index", i + 1}, {"of", kActionCount}};
    }
  }
  return std::nullopt;
}

CalibrationProfile CalibrationSession::finish() {
  std::vector<CalibrationSample> all;
  for (Action a : kAllActions) {
    for (const auto& r : samples_[index_of(a)]) all.push_back({a, r});
  }
  if (all.empty()) throw MissingAction(std::string(to_string(kAllActions.front())));
  auto profile = calibrate(all, params_);
  profile_ = profile;
  state_ = State::Succeeded;
  active_.reset();
  return profile;
}

json CalibrationSession::result_message() {
  try {
    finish();
    return {{"type", "calibration_result"}, {"ok", true}};
  } catch (const CalibrationError& e) {
    std::string kind = "CalibrationError";
    if (dynamic_cast<const MissingAction*>(&e)) kind = "MissingAction";
    if (dynamic_cast<const InsufficientSamples*>(&e)) kind = "InsufficientSamples";
    if (dynamic_cast<const NoisyAction*>(&e)) kind = "NoisyAction";
    // The console re-prompts the named action; the session stays open.
    if (auto a = parse_action(e.action())) samples_[index_of(*a)].clear();
    return {{"type", "calibration_result"},
            {"ok", false},
            {"error", kind},
            {"action", e.action()},
            {"message", e.what()}};
  }
}

std::vector<json> CalibrationSession::handle_message(const json& msg) {
  std::vector<json> replies;
  auto error = [&](const std::string& why) {
    replies.push_back({{"type", "error"}, {"message", why}});
    return replies;
  };
  if (!msg.is_object()) return error("message must be a JSON object");
  if (done()) return error("calibration session already closed");
  const auto type = msg.value("type", std::string());

  if (type == "calibration_sample") {
    const auto action = parse_action(msg.value("action", std::string()));
    const auto& r = msg.contains("ratios") ? msg.at("ratios") : json();
    if (!action || !r.is_array() || r.size() != RatioVector::kSize) {
      return error("calibration_sample needs action and 4 ratios");
    }
    RatioVector v;
    for (std::size_t k = 0; k < RatioVector::kSize; ++k) {
      if (!r[k].is_number()) return error("ratios must be numbers");
      v[k] = r[k].get<double>();
    }
    try {
      add_sample({*action, v});
    } catch (const MalformedFrame& e) {
      return error(e.what());
    }
    return replies;
  }

  if (type != "wizard") return error("unknown message type '" + type + "'");
  const auto cmd = msg.value("cmd", std::string());
  if (cmd == "begin") {
    const auto action = parse_action(msg.value("action", std::string()));
    if (!action) return error("begin needs a valid action");
    samples_[index_of(*action)].clear();
    active_ = action;
    replies.push_back(status(*action));
  } else if (cmd == "end") {
    if (active_) {
      const Action a = *active_;
      active_.reset();
      replies.push_back(status(a));
    }
    if (auto p = next_prompt()) replies.push_back(*p);
  } else if (cmd == "finish") {
    active_.reset();
    replies.push_back(result_message());
    if (auto p = next_prompt()) replies.push_back(*p);
  } else if (cmd == "abort") {
    state_ = State::Aborted;
    active_.reset();
    replies.push_back({{"type", "calibration_result"}, {"ok", false}, {"error", "Aborted"}});
  } else {
    return error("unknown wizard command '" + cmd + "'");
  }
  return replies;
}

}  // namespace gazerace
