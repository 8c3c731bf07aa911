#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gazerace/config.hpp"
#include "gazerace/errors.hpp"
#include "gazerace/formats.hpp"
#include "scripted.hpp"

using namespace gazerace;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "gazerace-formats-test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("profile round trip") {
  const auto p = testing::pose_profile();
  const auto path = scratch("profile.json");
  save_profile(p, path);
  CHECK(load_profile(path) == p);
  auto doc = profile_to_json(p);
  doc["actions"].erase("Raise");
  CHECK_THROWS_AS(profile_from_json(doc), ConfigError);
}

TEST_CASE("track round trip and shipped default track") {
  const auto t = default_track();
  CHECK(track_from_json(track_to_json(t)) == t);
  const fs::path shipped = fs::path(GAZERACE_SOURCE_DIR) / "data" / "default_track.json";
  CHECK(load_track(shipped) == t);
}

TEST_CASE("trajectory and command logs round trip") {
  const auto frames = testing::frames_for(testing::scripted_route());
  const auto out = run_race(frames, default_track(), PipelineConfig{}, testing::pose_profile());
  const auto tp = scratch("trajectory.jsonl");
  const auto cp = scratch("commands.jsonl");
  save_trajectory(out.trajectory, tp);
  save_commands(out.commands, cp);
  CHECK(load_trajectory(tp) == out.trajectory);
  CHECK(load_commands(cp) == out.commands);
}

TEST_CASE("malformed log lines report their line number") {
  const auto p = scratch("bad.jsonl");
  {
    std::ofstream f(p);
    f << R"({"t_us":0,"x":0,"y":0,"z":0,"yaw":0,"vx":0,"vy":0,"vz":0,"phase":"Disarmed","gates_passed":0})" << '\n'
      << "{not json\n";
  }
  try {
    load_trajectory(p);
    FAIL("expected CorruptRecording");
  } catch (const CorruptRecording& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("paired CSV with and without header") {
  std::istringstream with("label,a,b\ns1,1.5,2\ns2,3,1\n");
  const auto a = parse_paired_csv(with);
  REQUIRE(a.size() == 2);
  CHECK(a[0].label == "s1");
  CHECK(a[1].a == 3.0);
  std::istringstream without("p,4,5\n");
  CHECK(parse_paired_csv(without).size() == 1);
}

TEST_CASE("telemetry message fields") {
  DroneState s{{1, 2, 3}, {0.5, 0, 0}, 0.25, true};
  const auto m = telemetry_message(123, Action::Wide, FlightPhase::Flying, s, 2);
  CHECK(m["t_us"] == 123);
  CHECK(m["action"] == "Wide");
  CHECK(m["phase"] == "Flying");
  CHECK(m["drone"]["y"] == 2.0);
  CHECK(m["gates_passed"] == 2);
}

TEST_CASE("config resolution") {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  save_profile(testing::pose_profile(), dir / "p.json");
  {
    std::ofstream f(dir / "c.json");
    f << R"({"profile":"p.json","classifier":{"debounce_frames":4},"network":{"landmark_port":0}})";
  }
  const auto cfg = load_config(dir / "c.json");
  CHECK(cfg.smoothing.debounce_frames == 4);
  CHECK(cfg.network.landmark_port == 0);
  CHECK(cfg.load_profile() == testing::pose_profile());
  CHECK(cfg.load_track() == default_track());

  const auto round = config_from_json(config_to_json(cfg), dir);
  CHECK(round.smoothing.debounce_frames == 4);

  {
    std::ofstream f(dir / "bad.json");
    f << R"({"classifier":{"ema_alpha":2}})";
  }
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  {
    std::ofstream f(dir / "missing.json");
    f << R"({"track":"nope.json"})";
  }
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}
