#include "gazerace/formats.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gazerace/errors.hpp"

namespace gazerace {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json ratios_to_json(const RatioVector& r) { return json::array({r.h, r.v, r.open, r.brow}); }

RatioVector ratios_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != RatioVector::kSize) {
    throw ConfigError(where + ": expected an array of 4 numbers");
  }
  RatioVector r;
  for (std::size_t k = 0; k < RatioVector::kSize; ++k) {
    if (!j[k].is_number()) throw ConfigError(where + ": expected numbers");
    r[k] = j[k].get<double>();
    if (!std::isfinite(r[k])) throw ConfigError(where + ": non-finite value");
  }
  return r;
}

Vec3 vec_from_json(const json& j, const std::string& where) {
  if (j.is_array() && j.size() == 3) {
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  }
  if (j.is_object()) return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
  throw ConfigError(where + ": expected [x, y, z]");
}

json parse_json_text(const std::string& text, const std::filesystem::path& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

template <class F>
auto with_schema(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

template <class T, class F>
std::vector<T> load_jsonl(const std::filesystem::path& path, F&& decode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(decode(json::parse(line)));
    } catch (const json::exception& e) {
      throw CorruptRecording(lineno, e.what());
    } catch (const ConfigError& e) {
      throw CorruptRecording(lineno, e.what());
    }
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

json profile_to_json(const CalibrationProfile& profile) {
  json actions = json::object();
  for (Action a : kAllActions) {
    const auto& s = profile[a];
    actions[std::string(to_string(a))] = {
        {"centroid", ratios_to_json(s.centroid)},
        {"spread", ratios_to_json(s.spread)},
        {"count", s.sample_count},
    };
  }
  return {{"version", kProfileVersion}, {"actions", actions}};
}

CalibrationProfile profile_from_json(const json& doc) {
  return with_schema("profile", [&] {
    if (doc.at("version").get<int>() != kProfileVersion) {
      throw ConfigError("profile: unsupported version " + doc.at("version").dump());
    }
    const auto& actions = doc.at("actions");
    CalibrationProfile p;
    for (Action a : kAllActions) {
      const std::string name(to_string(a));
      if (!actions.contains(name)) throw ConfigError("profile: missing action " + name);
      const auto& e = actions.at(name);
      auto& s = p[a];
      s.centroid = ratios_from_json(e.at("centroid"), "profile." + name + ".centroid");
      s.spread = ratios_from_json(e.at("spread"), "profile." + name + ".spread");
      s.sample_count = e.at("count").get<std::size_t>();
      for (std::size_t k = 0; k < RatioVector::kSize; ++k) {
        if (!(s.spread[k] > 0.0)) throw ConfigError("profile." + name + ".spread must be > 0");
      }
    }
    return p;
  });
}

void save_profile(const CalibrationProfile& profile, const std::filesystem::path& path) {
  write_text_file(path, profile_to_json(profile).dump(2) + "\n");
}

CalibrationProfile load_profile(const std::filesystem::path& path) {
  return profile_from_json(parse_json_text(read_text_file(path), path));
}

json track_to_json(const RaceTrack& track) {
  json gates = json::array();
  for (const auto& g : track.gates) {
    gates.push_back({{"center", {g.center.x, g.center.y, g.center.z}},
                     {"normal_yaw", g.normal_yaw},
                     {"size", g.size}});
  }
  return {{"start", {{"x", track.start.x}, {"y", track.start.y}, {"z", track.start.z},
                     {"yaw", track.start_yaw}}},
          {"gates", gates}};
}

RaceTrack track_from_json(const json& doc) {
  return with_schema("track", [&] {
    RaceTrack t;
    const auto& start = doc.at("start");
    t.start = vec_from_json(start, "track.start");
    t.start_yaw = start.value("yaw", 0.0);
    for (const auto& g : doc.at("gates")) {
      Gate gate;
      gate.center = vec_from_json(g.at("center"), "track.gates[].center");
      gate.normal_yaw = g.value("normal_yaw", 0.0);
      gate.size = g.value("size", 1.4);
      t.gates.push_back(gate);
    }
    t.validate();
    return t;
  });
}

void save_track(const RaceTrack& track, const std::filesystem::path& path) {
  write_text_file(path, track_to_json(track).dump(2) + "\n");
}

RaceTrack load_track(const std::filesystem::path& path) {
  return track_from_json(parse_json_text(read_text_file(path), path));
}

json tick_to_json(const TickRecord& r) {
  return {{"t_us", r.t_us},
          {"x", r.position.x},
          {"y", r.position.y},
          {"z", r.position.z},
          {"yaw", r.yaw},
          {"vx", r.velocity.x},
          {"vy", r.velocity.y},
          {"vz", r.velocity.z},
          {"phase", to_string(r.phase)},
          {"gates_passed", r.gates_passed}};
}

TickRecord tick_from_json(const json& j) {
  TickRecord r;
  r.t_us = j.at("t_us").get<std::int64_t>();
  r.position = {j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<double>()};
  r.velocity = {j.value("vx", 0.0), j.value("vy", 0.0), j.value("vz", 0.0)};
  r.yaw = j.value("yaw", 0.0);
  const auto phase = parse_phase(j.at("phase").get<std::string>());
  if (!phase) throw ConfigError("unknown phase " + j.at("phase").dump());
  r.phase = *phase;
  r.gates_passed = j.value("gates_passed", 0);
  return r;
}

void write_trajectory(const TrajectoryLog& log, std::ostream& out) {
  for (const auto& t : log.ticks) out << tick_to_json(t).dump() << '\n';
}

void save_trajectory(const TrajectoryLog& log, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_trajectory(log, out);
}

TrajectoryLog load_trajectory(const std::filesystem::path& path) {
  return {load_jsonl<TickRecord>(path, tick_from_json)};
}

json command_to_json(const FlightCommand& cmd) {
  return std::visit(
      overloaded{
          [](const command::Arm&) { return json{{"type", "Arm"}}; },
          [](const command::TakeOff& c) { return json{{"type", "TakeOff"}, {"altitude", c.altitude}}; },
          [](const command::Land&) { return json{{"type", "Land"}}; },
          [](const command::Disarm&) { return json{{"type", "Disarm"}}; },
          [](const command::SetVelocity& c) {
            return json{{"type", "SetVelocity"},
                        {"pitch_v", c.setpoint.pitch_v},
                        {"roll_v", c.setpoint.roll_v},
                        {"yaw_rate", c.setpoint.yaw_rate},
                        {"climb_v", c.setpoint.climb_v}};
          },
      },
      cmd);
}

FlightCommand command_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "Arm") return command::Arm{};
  if (type == "TakeOff") return command::TakeOff{j.at("altitude").get<double>()};
  if (type == "Land") return command::Land{};
  if (type == "Disarm") return command::Disarm{};
  if (type == "SetVelocity") {
    return command::SetVelocity{{j.value("pitch_v", 0.0), j.value("roll_v", 0.0),
                                 j.value("yaw_rate", 0.0), j.value("climb_v", 0.0)}};
  }
  throw ConfigError("unknown command type " + type);
}

json command_record_to_json(const CommandRecord& r) {
  return {{"t_us", r.t_us}, {"phase", to_string(r.phase)}, {"command", command_to_json(r.command)}};
}

CommandRecord command_record_from_json(const json& j) {
  CommandRecord r;
  r.t_us = j.at("t_us").get<std::int64_t>();
  const auto phase = parse_phase(j.at("phase").get<std::string>());
  if (!phase) throw ConfigError("unknown phase " + j.at("phase").dump());
  r.phase = *phase;
  r.command = command_from_json(j.at("command"));
  return r;
}

void write_commands(const std::vector<CommandRecord>& cmds, std::ostream& out) {
  for (const auto& c : cmds) out << command_record_to_json(c).dump() << '\n';
}

void save_commands(const std::vector<CommandRecord>& cmds, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_commands(cmds, out);
}

std::vector<CommandRecord> load_commands(const std::filesystem::path& path) {
  return load_jsonl<CommandRecord>(path, command_record_from_json);
}

json telemetry_message(std::int64_t t_us, Action action, FlightPhase phase, const DroneState& d,
                       int gates_passed) {
  return {{"t_us", t_us},
          {"action", to_string(action)},
          {"phase", to_string(phase)},
          {"drone",
           {{"x", d.position.x},
            {"y", d.position.y},
            {"z", d.position.z},
            {"yaw", d.yaw},
            {"vx", d.velocity.x},
            {"vy", d.velocity.y},
            {"vz", d.velocity.z}}},
          {"gates_passed", gates_passed}};
}

json metrics_to_json(const TrajectoryMetrics& m) {
  return {{"time_s", m.time_s},
          {"path_length_m", m.path_length_m},
          {"avg_velocity_mps", m.avg_velocity_mps},
          {"max_velocity_mps", m.max_velocity_mps}};
}

json race_result_to_json(const RaceResult& r) {
  json j = {{"finished", r.finished},
            {"stream_exhausted", r.stream_exhausted},
            {"gate_count", r.gate_count},
            {"gates_passed", r.gate_times_us.size()},
            {"splits_s", r.splits_s}};
  j["total_time_s"] = r.total_time_s ? json(*r.total_time_s) : json(nullptr);
  j["takeoff_complete_us"] = r.takeoff_complete_us ? json(*r.takeoff_complete_us) : json(nullptr);
  return j;
}

json signed_rank_to_json(const SignedRankResult& r) {
  return {{"V", r.v},
          {"W_plus", r.w_plus},
          {"W_minus", r.w_minus},
          {"p_two_sided", r.p_two_sided},
          {"n_effective", r.n_effective},
          {"method", to_string(r.method)}};
}

json report_to_json(const CompareReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json r = {{"metric", row.name},
              {"mean_a", row.mean_a},
              {"mean_b", row.mean_b},
              {"best_a", row.best_a},
              {"best_b", row.best_b},
              {"lower_is_better", row.lower_is_better}};
    r["change_pct"] = row.change_pct ? json(*row.change_pct) : json(nullptr);
    r["signed_rank"] = row.signed_rank ? signed_rank_to_json(*row.signed_rank) : json(nullptr);
    if (!row.signed_rank_note.empty()) r["signed_rank_note"] = row.signed_rank_note;
    rows.push_back(r);
  }
  return {{"label_a", report.label_a},
          {"label_b", report.label_b},
          {"runs_a", report.runs_a},
          {"runs_b", report.runs_b},
          {"paired", report.paired},
          {"pairs", report.pairs},
          {"v_convention", "V = min(W+, W-)"},
          {"rows", rows}};
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

std::vector<PairedSample> parse_paired_csv(std::istream& in) {
  std::vector<PairedSample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    PairedSample s;
    if (f.size() != 3) throw ConfigError("paired CSV line " + std::to_string(lineno) + ": expected label,a,b");
    s.label = f[0];
    if (!parse_double(f[1], s.a) || !parse_double(f[2], s.b)) {
      if (lineno == 1) continue;  // header
      throw ConfigError("paired CSV line " + std::to_string(lineno) + ": a and b must be numbers");
    }
    out.push_back(s);
  }
  return out;
}

std::vector<PairedSample> load_paired_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_paired_csv(in);
}

std::vector<RunRecord> load_runs_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw ConfigError("runs CSV line " + std::to_string(lineno) + ": expected 5 fields");
    RunRecord r;
    r.label = f[0];
    auto& m = r.metrics;
    if (!parse_double(f[1], m.time_s) || !parse_double(f[2], m.path_length_m) ||
        !parse_double(f[3], m.avg_velocity_mps) || !parse_double(f[4], m.max_velocity_mps)) {
      if (lineno == 1) continue;
      throw ConfigError("runs CSV line " + std::to_string(lineno) + ": metrics must be numbers");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace gazerace
