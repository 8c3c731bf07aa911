#include "gazerace/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gazerace/analytics.hpp"
#include "gazerace/config.hpp"
#include "gazerace/errors.hpp"
#include "gazerace/formats.hpp"
#include "gazerace/gateway.hpp"
#include "gazerace/race.hpp"
#include "gazerace/wire.hpp"

namespace gazerace {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

struct CommonOptions {
  std::string config;
  std::string track;
  std::string profile;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Session config JSON (falls back to $GAZERACE_CONFIG)");
  cmd->add_option("--track", o.track, "Track JSON (overrides the config)");
  cmd->add_option("--profile", o.profile, "Calibration profile JSON (overrides the config)");
  cmd->add_option("--out", o.out, "Output path");
}

SessionConfig session_config(const CommonOptions& o) {
  auto cfg = resolve_config(o.config.empty() ? std::nullopt : std::optional<fs::path>(o.config));
  if (!o.track.empty()) cfg.track_path = o.track;
  if (!o.profile.empty()) cfg.profile_path = o.profile;
  return cfg;
}

struct RunFiles {
  fs::path trajectory;
  fs::path commands;
  fs::path result;
};

RunFiles write_run(const fs::path& dir, const RaceOutput& run) {
  RunFiles f{dir / "trajectory.jsonl", dir / "commands.jsonl", dir / "result.json"};
  save_trajectory(run.trajectory, f.trajectory);
  save_commands(run.commands, f.commands);
  write_text_file(f.result, race_result_to_json(run.result).dump(2) + "\n");
  return f;
}

RaceOutput replay_pipeline(const SessionConfig& cfg, const fs::path& recording, double speed) {
  Pipeline pipeline(cfg.pipeline(), cfg.load_profile(), cfg.load_track());
  replay(recording, speed, [&](const RecordedFrame& f) { pipeline.feed(f.frame); });
  auto result = pipeline.finish();
  return {pipeline.session().trajectory(), pipeline.session().commands(), std::move(result)};
}

void print_result(std::ostream& out, const RaceResult& r) {
  out << "finished: " << (r.finished ? "yes" : "no") << " (" << r.gate_times_us.size() << "/"
      << r.gate_count << " gates)";
  if (r.stream_exhausted) out << ", stream ended before landing";
  out << '\n';
  if (!r.splits_s.empty()) {
    out << "splits, s:";
    char buf[32];
    for (double s : r.splits_s) {
      std::snprintf(buf, sizeof buf, " %.2f", s);
      out << buf;
    }
    out << '\n';
  }
}

std::size_t gate_count_for(const SessionConfig& cfg) { return cfg.load_track().gates.size(); }

int cmd_calibrate(const CommonOptions& o, const std::string& samples, std::ostream& out) {
  auto cfg = session_config(o);
  const fs::path dest = !o.out.empty() ? fs::path(o.out)
                        : cfg.profile_path   ? *cfg.profile_path
                                             : fs::path("profile.json");
  if (!samples.empty()) {
    std::vector<CalibrationSample> collected;
    std::ifstream in(samples);
    if (!in) throw IoError("cannot open " + samples);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json doc = json::parse(line, nullptr, false);
      if (doc.is_discarded() || !doc.is_object() || !doc.contains("label") ||
          !doc["label"].is_string()) {
        throw CorruptRecording(lineno, "expected a labeled wire frame");
      }
      const auto action = parse_action(doc["label"].get<std::string>());
      if (!action) throw CorruptRecording(lineno, "unknown action label");
      LandmarkFrame frame;
      try {
        frame = parse_wire_frame(line);
      } catch (const MalformedFrame& e) {
        throw CorruptRecording(lineno, e.what());
      }
      collected.push_back({*action, extract_ratios(frame, cfg.geometry)});
    }
    const auto profile = calibrate(collected, cfg.calibration);
    save_profile(profile, dest);
    out << "profile written to " << dest.string() << " (" << collected.size() << " samples)\n";
    return 0;
  }

  auto handler = std::make_shared<CalibrationHandler>(cfg.geometry, cfg.calibration, dest);
  Gateway gw(cfg.network, handler);
  gw.start();
  out << "calibration: landmarks on port " << gw.landmark_port() << ", telemetry on port "
      << gw.telemetry_port() << '\n';
  gw.run_until([] { return g_interrupted.load(); });
  gw.stop();
  if (!handler->profile()) throw Error("calibration ended without a profile");
  out << "profile written to " << dest.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"gazerace: eye-gesture drone racing pipeline"};
  app.require_subcommand(1);
  CommonOptions common;

  auto* calibrate = app.add_subcommand("calibrate", "Collect calibration samples and write a profile");
  std::string samples;
  calibrate->add_option("--samples", samples, "Offline: labeled wire frames (JSON-lines with \"label\")");
  add_common(calibrate, common);

  auto* serve = app.add_subcommand("serve", "Run the live pipeline");
  std::size_t sessions = 0;
  serve->add_option("--sessions", sessions, "Stop after this many landmark sessions (0 = until signal)");
  add_common(serve, common);

  auto* replay_cmd = app.add_subcommand("replay", "Run the pipeline offline over a recording");
  std::string recording;
  double speed = 0.0;
  replay_cmd->add_option("--replay,recording", recording, "Recording (wire JSON-lines)")->required();
  replay_cmd->add_option("--speed", speed, "Gap multiplier; 0 = as fast as possible");
  add_common(replay_cmd, common);

  auto* race = app.add_subcommand("race", "Replay a recording on a track and summarize the race");
  race->add_option("--replay,recording", recording, "Recording (wire JSON-lines)")->required();
  race->add_option("--speed", speed, "Gap multiplier; 0 = as fast as possible");
  add_common(race, common);

  auto* analyze = app.add_subcommand("analyze", "Trajectory metrics, comparisons and signed-rank tests");
  std::vector<std::string> logs, logs_a, logs_b;
  std::string runs_a, runs_b, paired, label_a = "A", label_b = "B";
  std::size_t exact_threshold = kDefaultExactThreshold;
  bool as_json = false;
  analyze->add_option("--log", logs, "Trajectory log(s) to report metrics for");
  analyze->add_option("--logs-a", logs_a, "Condition A trajectory logs (label = parent directory or stem)");
  analyze->add_option("--logs-b", logs_b, "Condition B trajectory logs");
  analyze->add_option("--runs-a", runs_a, "Condition A runs CSV (label,time_s,path_length_m,avg_velocity_mps,max_velocity_mps)");
  analyze->add_option("--runs-b", runs_b, "Condition B runs CSV");
  analyze->add_option("--label-a", label_a, "Column name for condition A");
  analyze->add_option("--label-b", label_b, "Column name for condition B");
  analyze->add_option("--paired", paired, "Paired samples CSV (label,a,b)");
  analyze->add_option("--exact-threshold", exact_threshold, "Largest n using the exact null distribution");
  analyze->add_flag("--json", as_json, "Print machine-readable JSON instead of tables");
  add_common(analyze, common);

  auto* record_cmd = app.add_subcommand("record", "Record a landmark stream verbatim");
  bool from_stdin = false;
  record_cmd->add_flag("--stdin", from_stdin, "Read the stream from stdin instead of the network");
  add_common(record_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "gazerace: " << e.what() << '\n' << app.help();
    return 2;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  g_interrupted = false;

  try {
    if (calibrate->parsed()) return cmd_calibrate(common, samples, out);

    if (serve->parsed()) {
      auto cfg = session_config(common);
      const fs::path out_dir = common.out.empty() ? fs::path("runs") : fs::path(common.out);
      auto handler = std::make_shared<RaceHandler>(cfg.pipeline(), cfg.load_profile(),
                                                   cfg.load_track(), out_dir);
      Gateway gw(cfg.network, handler);
      gw.start();
      out << "serving: landmarks on port " << gw.landmark_port() << ", telemetry on port "
          << gw.telemetry_port();
      if (gw.http_port()) out << ", http on port " << gw.http_port();
      out << std::endl;
      gw.run_until([&] {
        return g_interrupted.load() || (sessions > 0 && gw.stats().sessions_completed >= sessions);
      });
      gw.stop();
      const auto st = gw.stats();
      out << "sessions: " << st.sessions_completed << ", frames: " << st.frames
          << ", malformed: " << st.malformed << ", dropped: " << st.dropped << '\n';
      return 0;
    }

    if (replay_cmd->parsed() || race->parsed()) {
      auto cfg = session_config(common);
      const auto run = replay_pipeline(cfg, recording, speed);
      const fs::path out_dir = common.out.empty() ? fs::path("replay-out") : fs::path(common.out);
      const auto files = write_run(out_dir, run);
      if (replay_cmd->parsed()) {
        out << "ticks: " << run.trajectory.ticks.size() << ", commands: " << run.commands.size()
            << ", logs: " << files.trajectory.string() << ", " << files.commands.string() << '\n';
        return 0;
      }
      print_result(out, run.result);
      try {
        const auto m = metrics(run.trajectory, static_cast<int>(run.result.gate_count));
        out << format_metrics(m);
      } catch (const EmptyTrajectory& e) {
        out << "metrics: " << e.what() << '\n';
      }
      return 0;
    }

    if (analyze->parsed()) {
      auto cfg = session_config(common);
      if (exact_threshold > 62) throw ConfigError("--exact-threshold must be <= 62");
      json report_json = json::object();
      bool did_something = false;
      const int gates = static_cast<int>(gate_count_for(cfg));

      for (const auto& path : logs) {
        did_something = true;
        const auto m = metrics(load_trajectory(path), gates);
        if (as_json) {
          report_json["logs"][path] = metrics_to_json(m);
        } else {
          out << path << '\n' << format_metrics(m);
        }
      }

      auto load_runs = [&](const std::vector<std::string>& files, const std::string& csv) {
        std::vector<RunRecord> runs;
        if (!csv.empty()) runs = load_runs_csv(csv);
        for (const auto& f : files) {
          fs::path p(f);
          const auto parent = p.parent_path().filename().string();
          std::string label = parent.empty() ? p.stem().string() : parent;
          runs.push_back({label, metrics(load_trajectory(p), gates)});
        }
        return runs;
      };
      const auto a = load_runs(logs_a, runs_a);
      const auto b = load_runs(logs_b, runs_b);
      if (!a.empty() || !b.empty()) {
        did_something = true;
        auto rep = compare_report(a, b, exact_threshold);
        rep.label_a = label_a;
        rep.label_b = label_b;
        if (as_json) {
          report_json["compare"] = report_to_json(rep);
        } else {
          out << format_report(rep);
        }
        if (!common.out.empty()) write_text_file(common.out, report_to_json(rep).dump(2) + "\n");
      }

      if (!paired.empty()) {
        did_something = true;
        const auto res = wilcoxon_signed_rank(load_paired_csv(paired), exact_threshold);
        if (as_json) {
          report_json["signed_rank"] = signed_rank_to_json(res);
        } else {
          out << format_signed_rank(res) << '\n';
        }
      }
      if (!did_something) {
        err << "gazerace: analyze needs --log, --logs-a/--logs-b, --runs-a/--runs-b or --paired\n";
        return 2;
      }
      if (as_json) out << report_json.dump(2) << '\n';
      return 0;
    }

    if (record_cmd->parsed()) {
      const fs::path dest = common.out.empty() ? fs::path("recording.jsonl") : fs::path(common.out);
      if (from_stdin) {
        const auto st = record(std::cin, dest);
        out << "recorded " << st.frames << " frames (" << st.malformed << " malformed skipped) to "
            << dest.string() << '\n';
        return 0;
      }
      auto cfg = session_config(common);
      auto handler = std::make_shared<RecordHandler>(dest);
      Gateway gw(cfg.network, handler);
      gw.start();
      out << "recording: landmarks on port " << gw.landmark_port() << std::endl;
      gw.run_until([] { return g_interrupted.load(); });
      gw.stop();
      out << "recorded " << handler->frames() << " frames to " << dest.string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    err << "gazerace: error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace gazerace
