#include "gazerace/config.hpp"

#include <cstdlib>

#include "gazerace/errors.hpp"
#include "gazerace/formats.hpp"

namespace gazerace {

using nlohmann::json;

namespace {

EyeGeometryConfig::Triple triple_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("geometry triple must be [e1, e2, center]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

EyeGeometryConfig::Quad quad_from(const json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw ConfigError("geometry quad must be [from, to, corner1, corner2]");
  }
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  if (!std::filesystem::exists(path)) throw ConfigError("referenced file does not exist: " + path.string());
  return path;
}

std::uint16_t port_from(const json& j) {
  const auto v = j.get<int>();
  if (v < 0 || v > 65535) throw ConfigError("port out of range: " + std::to_string(v));
  return static_cast<std::uint16_t>(v);
}

}  // namespace

RaceTrack SessionConfig::load_track() const {
  return track_path ? gazerace::load_track(*track_path) : default_track();
}

CalibrationProfile SessionConfig::load_profile() const {
  if (!profile_path) throw ConfigError("no calibration profile configured (use --profile)");
  return gazerace::load_profile(*profile_path);
}

void SessionConfig::validate() const {
  geometry.validate();
  smoothing.validate();
  controller.validate();
  sim.validate();
  if (calibration.min_samples < 1) throw ConfigError("classifier.min_samples must be >= 1");
  if (!(calibration.min_spread > 0.0)) throw ConfigError("classifier.min_spread must be > 0");
  if (!(calibration.max_cv > 0.0)) throw ConfigError("classifier.max_cv must be > 0");
  if (network.queue_depth < 1 || network.subscriber_queue_depth < 1) {
    throw ConfigError("network queue depths must be >= 1");
  }
  if (exact_threshold > 62) throw ConfigError("exact_threshold must be <= 62");
}

SessionConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  SessionConfig c;
  try {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (auto g = doc.find("geometry"); g != doc.end()) {
      if (g->contains("horizontal")) c.geometry.horizontal = triple_from(g->at("horizontal"));
      if (g->contains("vertical")) c.geometry.vertical = triple_from(g->at("vertical"));
      if (g->contains("openness")) c.geometry.openness = quad_from(g->at("openness"));
      if (g->contains("eyebrow")) c.geometry.eyebrow = quad_from(g->at("eyebrow"));
    }
    if (auto k = doc.find("classifier"); k != doc.end()) {
      c.calibration.min_samples = k->value("min_samples", c.calibration.min_samples);
      c.calibration.min_spread = k->value("min_spread", c.calibration.min_spread);
      c.calibration.max_cv = k->value("max_cv", c.calibration.max_cv);
      c.smoothing.ema_alpha = k->value("ema_alpha", c.smoothing.ema_alpha);
      c.smoothing.debounce_frames = k->value("debounce_frames", c.smoothing.debounce_frames);
    }
    if (auto k = doc.find("controller"); k != doc.end()) {
      c.controller.v_xy = k->value("v_xy", c.controller.v_xy);
      c.controller.v_z = k->value("v_z", c.controller.v_z);
      c.controller.yaw_rate = k->value("yaw_rate", c.controller.yaw_rate);
      c.controller.takeoff_alt = k->value("takeoff_alt", c.controller.takeoff_alt);
    }
    if (auto k = doc.find("sim"); k != doc.end()) {
      c.sim.dt = k->value("dt", c.sim.dt);
      c.sim.tau_v = k->value("tau_v", c.sim.tau_v);
      c.sim.v_max = k->value("v_max", c.sim.v_max);
      c.sim.landing_v = k->value("landing_v", c.sim.landing_v);
      c.sim.takeoff_v = k->value("takeoff_v", c.sim.takeoff_v);
      c.sim.landed_z = k->value("landed_z", c.sim.landed_z);
      c.sim.max_frame_gap = k->value("max_frame_gap", c.sim.max_frame_gap);
    }
    if (auto k = doc.find("network"); k != doc.end()) {
      c.network.host = k->value("host", c.network.host);
      if (k->contains("landmark_port")) c.network.landmark_port = port_from(k->at("landmark_port"));
      if (k->contains("telemetry_port")) c.network.telemetry_port = port_from(k->at("telemetry_port"));
      if (k->contains("http_port")) c.network.http_port = port_from(k->at("http_port"));
      c.network.queue_depth = k->value("queue_depth", c.network.queue_depth);
      c.network.subscriber_queue_depth =
          k->value("subscriber_queue_depth", c.network.subscriber_queue_depth);
    }
    if (auto t = doc.find("track"); t != doc.end() && !t->is_null()) {
      c.track_path = resolve(base_dir, t->get<std::string>());
    }
    if (auto p = doc.find("profile"); p != doc.end() && !p->is_null()) {
      c.profile_path = resolve(base_dir, p->get<std::string>());
    }
    c.exact_threshold = doc.value("exact_threshold", c.exact_threshold);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const SessionConfig& c) {
  const auto& g = c.geometry;
  json doc = {
      {"geometry",
       {{"horizontal", {g.horizontal.e1, g.horizontal.e2, g.horizontal.center}},
        {"vertical", {g.vertical.e1, g.vertical.e2, g.vertical.center}},
        {"openness", {g.openness.from, g.openness.to, g.openness.corner1, g.openness.corner2}},
        {"eyebrow", {g.eyebrow.from, g.eyebrow.to, g.eyebrow.corner1, g.eyebrow.corner2}}}},
      {"classifier",
       {{"min_samples", c.calibration.min_samples},
        {"min_spread", c.calibration.min_spread},
        {"max_cv", c.calibration.max_cv},
        {"ema_alpha", c.smoothing.ema_alpha},
        {"debounce_frames", c.smoothing.debounce_frames}}},
      {"controller",
       {{"v_xy", c.controller.v_xy},
        {"v_z", c.controller.v_z},
        {"yaw_rate", c.controller.yaw_rate},
        {"takeoff_alt", c.controller.takeoff_alt}}},
      {"sim",
       {{"dt", c.sim.dt},
        {"tau_v", c.sim.tau_v},
        {"v_max", c.sim.v_max},
        {"landing_v", c.sim.landing_v},
        {"takeoff_v", c.sim.takeoff_v},
        {"landed_z", c.sim.landed_z},
        {"max_frame_gap", c.sim.max_frame_gap}}},
      {"network",
       {{"host", c.network.host},
        {"landmark_port", c.network.landmark_port},
        {"telemetry_port", c.network.telemetry_port},
        {"http_port", c.network.http_port},
        {"queue_depth", c.network.queue_depth},
        {"subscriber_queue_depth", c.network.subscriber_queue_depth}}},
      {"exact_threshold", c.exact_threshold},
  };
  doc["track"] = c.track_path ? json(c.track_path->string()) : json(nullptr);
  doc["profile"] = c.profile_path ? json(c.profile_path->string()) : json(nullptr);
  return doc;
}

SessionConfig load_config(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return config_from_json(doc, base);
}

SessionConfig resolve_config(const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return load_config(*explicit_path);
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return load_config(env);
  SessionConfig c;
  c.validate();
  return c;
}

}  // namespace gazerace
