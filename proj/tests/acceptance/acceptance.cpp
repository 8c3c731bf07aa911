// One line per criterion: "PASS <name>: <detail>" or "FAIL ...". Exit status
// is non-zero when any criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gazerace/analytics.hpp"
#include "gazerace/formats.hpp"
#include "gazerace/gateway.hpp"
#include "gazerace/net.hpp"
#include "gazerace/race.hpp"
#include "gazerace/wire.hpp"
#include "scripted.hpp"

using namespace gazerace;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome ratio_properties() {
  Outcome o;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  double worst_sim = 0.0, worst_seg = 0.0;
  int done = 0;
  while (done < 10000) {
    const Point2 e1{u(rng), u(rng)}, e2{u(rng), u(rng)}, c{u(rng), u(rng)};
    // Keep the triple well conditioned so relative error is meaningful.
    if (distance(e1, e2) < 1e-3 || distance(e1, c) < 1e-3) continue;
    ++done;
    const double r = ratio(e1, e2, c);

    const double th = angle(rng), k = scale(rng), tx = shift(rng), ty = shift(rng);
    const bool mirror = (done % 2) == 0;
    auto map = [&](Point2 p) {
      const double y = mirror ? -p.y : p.y;
      return Point2{k * (std::cos(th) * p.x - std::sin(th) * y) + tx,
                    k * (std::sin(th) * p.x + std::cos(th) * y) + ty};
    };
    const double rs = ratio(map(e1), map(e2), map(c));
    worst_sim = std::max(worst_sim, std::abs(rs - r) / r);

    if (ratio(e1, e2, e1) != 0.0) o.fail("ratio(e1, e2, e1) != 0");
    if (ratio(e1, e2, e2) != 1.0) o.fail("ratio(e1, e2, e2) != 1");

    const double t = u(rng);
    const Point2 on{e1.x + t * (e2.x - e1.x), e1.y + t * (e2.y - e1.y)};
    worst_seg = std::max(worst_seg, std::abs(ratio(e1, e2, on) - t));
  }
  const double elapsed = seconds_since(t0);
  if (worst_sim > 1e-12) o.fail(fmt("similarity error %.3g", worst_sim));
  if (worst_seg > 1e-12) o.fail(fmt("segment recovery error %.3g", worst_seg));
  if (elapsed >= 1.0) o.fail(fmt("took %.3f s", elapsed));
  if (o.ok) {
    o.detail = "10000 triples, similarity err " + fmt("%.2g", worst_sim) + ", segment err " +
               fmt("%.2g", worst_seg) + ", " + fmt("%.3f s", elapsed);
  }
  return o;
}

// ---------------------------------------------------------------------------

std::size_t oracle_argmin(const RatioVector& r, const CalibrationProfile& p) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < kActionCount; ++k) {
    double d = 0.0;
    for (std::size_t c = 0; c < RatioVector::kSize; ++c) {
      const double z = (r[c] - p.actions[k].centroid[c]) / p.actions[k].spread[c];
      d += z * z;
    }
    if (d < best_d) {  // strict: earlier action keeps ties
      best_d = d;
      best = k;
    }
  }
  return best;
}

Outcome classifier_oracle() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> sd(0.01, 0.2);
  std::uniform_int_distribution<std::size_t> pick(0, kActionCount - 1);
  int agree = 0, ties = 0;
  for (int i = 0; i < 1000; ++i) {
    CalibrationProfile p;
    for (auto& a : p.actions) {
      a.centroid = {u(rng), u(rng), u(rng), u(rng)};
      a.spread = {sd(rng), sd(rng), sd(rng), sd(rng)};
    }
    RatioVector r{u(rng), u(rng), u(rng), u(rng)};
    if (i % 5 == 0) {
      // Exact duplicate of another action's statistics: a guaranteed tie.
      const auto a = pick(rng), b = pick(rng);
      p.actions[b] = p.actions[a];
      if (a != b) {
        r = p.actions[a].centroid;
        ++ties;
      }
    }
    if (index_of(classify_frame(r, p)) == oracle_argmin(r, p)) ++agree;
  }
  if (agree != 1000) o.fail(std::to_string(1000 - agree) + " disagreements");
  else o.detail = "1000/1000 agree (" + std::to_string(ties) + " forced ties)";
  return o;
}

// ---------------------------------------------------------------------------

// Reference: a virtual Center precedes the stream; a label is emitted once
// the last D entries of that sequence are all equal to it.
std::vector<Action> reference_debounce(const std::vector<Action>& raw, int d) {
  std::vector<Action> seq{Action::Center};
  seq.insert(seq.end(), raw.begin(), raw.end());
  std::vector<Action> out;
  Action cur = Action::Center;
  for (std::size_t k = 1; k < seq.size(); ++k) {
    if (static_cast<int>(k) + 1 >= d) {
      bool same = true;
      for (int j = 0; j < d; ++j) same = same && seq[k - static_cast<std::size_t>(j)] == seq[k];
      if (same) cur = seq[k];
    }
    out.push_back(cur);
  }
  return out;
}

Outcome debounce_automaton() {
  Outcome o;
  const std::array<Action, 3> alphabet{Action::Center, Action::Up, Action::Wide};
  const auto profile = testing::pose_profile();
  std::array<RatioVector, 3> centroid;
  for (std::size_t i = 0; i < 3; ++i) centroid[i] = profile[alphabet[i]].centroid;

  std::size_t streams = 0, pipeline_streams = 0;
  for (int d = 1; d <= 3; ++d) {
    for (int len = 0; len <= 12; ++len) {
      std::size_t total = 1;
      for (int i = 0; i < len; ++i) total *= 3;
      std::vector<Action> raw(static_cast<std::size_t>(len));
      for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (auto& a : raw) {
          a = alphabet[c % 3];
          c /= 3;
        }
        const auto expect = reference_debounce(raw, d);
        Debouncer deb(d);
        Action prev = Action::Center;
        for (std::size_t k = 0; k < raw.size(); ++k) {
          const auto out = deb.push(raw[k]);
          if (out.emitted != expect[k] || out.changed != (expect[k] != prev)) {
            o.fail("mismatch at D=" + std::to_string(d) + " length " + std::to_string(len));
            return o;
          }
          prev = expect[k];
        }
        ++streams;

        // The classifier step with smoothing disabled must agree as well.
        if (len <= 8) {
          ClassifierState st;
          for (std::size_t k = 0; k < raw.size(); ++k) {
            const auto idx = static_cast<std::size_t>(std::find(alphabet.begin(), alphabet.end(), raw[k]) -
                                                      alphabet.begin());
            const auto res = step(st, centroid[idx], profile, {1.0, d});
            if (res.emitted != expect[k]) {
              o.fail("classifier step mismatch at D=" + std::to_string(d));
              return o;
            }
            st = res.state;
          }
          ++pipeline_streams;
        }
      }
    }
  }
  o.detail = std::to_string(streams) + " streams (D = 1..3, length <= 12), " +
             std::to_string(pipeline_streams) + " also through the classifier step";
  return o;
}

// ---------------------------------------------------------------------------

Outcome state_machine() {
  Outcome o;
  const ControllerConfig cfg;

  // Phase trace of the scripted Raise, fly, Raise run against the simulator.
  const auto frames = testing::frames_for(testing::scripted_route());
  Pipeline pl(PipelineConfig{}, testing::pose_profile(), default_track());
  std::vector<FlightPhase> trace{pl.controller().phase};
  for (const auto& f : frames) {
    pl.feed(f);
    if (pl.controller().phase != trace.back()) trace.push_back(pl.controller().phase);
  }
  pl.finish();
  if (pl.controller().phase != trace.back()) trace.push_back(pl.controller().phase);
  const std::vector<FlightPhase> expect{FlightPhase::Disarmed, FlightPhase::TakingOff,
                                        FlightPhase::Flying, FlightPhase::Landing,
                                        FlightPhase::Disarmed};
  if (trace != expect) o.fail("unexpected phase trace");

  // Held Raise: one toggle, whatever the hold length.
  for (int n = 1; n <= 100; ++n) {
    for (auto start : {FlightPhase::Disarmed, FlightPhase::Flying}) {
      ControllerState s;
      s.phase = start;
      Debouncer deb(1);
      int toggles = 0;
      auto feed = [&](Action a) {
        const auto e = deb.push(a);
        const auto before = s.phase;
        auto out = map_action(s, e.emitted, e.changed, cfg);
        s = out.state;
        if (s.phase != before) ++toggles;
      };
      for (int i = 0; i < n; ++i) feed(Action::Raise);
      for (int i = 0; i < 5; ++i) feed(Action::Center);
      if (toggles != 1) o.fail("held Raise of " + std::to_string(n) + " toggled " + std::to_string(toggles));
    }
    // Same through the full pipeline, where debounce needs a few frames first.
    if (n >= 5) {
      std::vector<testing::Segment> route{{Action::Center, 10}, {Action::Raise, n}, {Action::Center, 50}};
      const auto out = run_race(testing::frames_for(route), default_track(), PipelineConfig{},
                                testing::pose_profile());
      const auto arms = std::count_if(out.commands.begin(), out.commands.end(), [](const CommandRecord& c) {
        return std::holds_alternative<command::Arm>(c.command);
      });
      if (arms != 1) o.fail("pipeline held Raise of " + std::to_string(n) + " armed " + std::to_string(arms) + "x");
    }
  }

  // Exhaustive: no SetVelocity outside Flying, and only legal phase moves.
  std::size_t cases = 0;
  const FlightPhase phases[] = {FlightPhase::Disarmed, FlightPhase::TakingOff, FlightPhase::Flying,
                                FlightPhase::Landing};
  auto legal = [](FlightPhase a, FlightPhase b) {
    return a == b || (a == FlightPhase::Disarmed && b == FlightPhase::TakingOff) ||
           (a == FlightPhase::Flying && b == FlightPhase::Landing);
  };
  for (auto ph : phases) {
    for (Action a : kAllActions) {
      for (bool changed : {false, true}) {
        for (bool latched : {false, true}) {
          std::vector<std::optional<Action>> prior{std::nullopt};
          for (Action c : kAllActions) prior.push_back(c);
          for (const auto& commanded : prior) {
            ControllerState s{ph, latched, commanded};
            const auto out = map_action(s, a, changed, cfg);
            ++cases;
            for (const auto& cmd : out.commands) {
              if (std::holds_alternative<command::SetVelocity>(cmd) && ph != FlightPhase::Flying) {
                o.fail("SetVelocity in phase " + std::string(to_string(ph)));
              }
            }
            if (!legal(ph, out.state.phase)) o.fail("illegal transition from " + std::string(to_string(ph)));
          }
        }
      }
    }
  }
  if (o.ok) o.detail = "trace Disarmed>TakingOff>Flying>Landing>Disarmed, holds 1..100 toggle once, " +
                       std::to_string(cases) + " (phase, action) cases clean";
  return o;
}

// ---------------------------------------------------------------------------

Outcome position_hold() {
  Outcome o;
  SimParams p;
  p.tau_v = 0.0;
  DroneState s{{3.25, -1.5, 2.0}, {}, 0.7, true};
  const DroneState start = s;
  for (int i = 0; i < 10000; ++i) s = step(s, setpoint_for(Action::Center, {}), p);
  if (!(s.position == start.position) || s.yaw != start.yaw) o.fail("kinematic step drifted");

  // Same through the vehicle while Flying.
  Vehicle v({{1, 2, 0}, {}, -0.3, false}, p);
  v.apply(command::Arm{});
  v.apply(command::TakeOff{1.5});
  while (v.phase() != FlightPhase::Flying) v.tick();
  v.apply(command::SetVelocity{setpoint_for(Action::Center, {})});
  const auto hover = v.state();
  for (int i = 0; i < 10000; ++i) v.tick();
  if (!(v.state().position == hover.position) || v.state().yaw != hover.yaw) o.fail("vehicle drifted");
  if (o.ok) o.detail = "10000 ticks, zero drift (step and vehicle)";
  return o;
}

// ---------------------------------------------------------------------------

Outcome scripted_race() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto profile = testing::pose_profile();

  // The recording goes through the file format so the whole path is exercised.
  const auto dir = fs::temp_directory_path() / "gazerace-acceptance";
  fs::create_directories(dir);
  const auto rec = dir / "scripted.jsonl";
  {
    std::ofstream f(rec);
    f << encode_wire_hello() << '\n';
    for (const auto& fr : testing::frames_for(testing::scripted_route())) f << encode_wire_frame(fr) << '\n';
  }
  auto run_once = [&] {
    std::vector<LandmarkFrame> frames;
    for (const auto& r : load_recording(rec)) frames.push_back(r.frame);
    return run_race(frames, default_track(), PipelineConfig{}, profile);
  };
  const auto a = run_once();
  const auto b = run_once();
  const double elapsed = seconds_since(t0) / 2.0;

  if (!a.result.finished) o.fail("race not finished");
  if (a.result.gate_times_us.size() != 7) o.fail("gates passed: " + std::to_string(a.result.gate_times_us.size()));
  if (!std::is_sorted(a.result.gate_times_us.begin(), a.result.gate_times_us.end())) o.fail("gates out of order");

  // Oracle: the scripted legs between the hover points, up to the final gate.
  const std::vector<Vec3> waypoints{{0, 0, 1.5},   {10, 0, 1.5}, {10, 0, 2.5},  {18, 0, 2.5},
                                    {18, 10, 2.5}, {18, 10, 1.5}, {10, 10, 1.5}, {10, 4, 1.5},
                                    {4, 4, 1.5},   {4, 2, 1.5}};
  double oracle = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) oracle += (waypoints[i] - waypoints[i - 1]).norm();
  double path = 0.0;
  try {
    path = metrics(a.trajectory, 7).path_length_m;
  } catch (const std::exception& e) {
    o.fail(e.what());
  }
  const double rel = std::abs(path - oracle) / oracle;
  if (rel > 0.005) o.fail(fmt("path %.3f m vs oracle %.3f m", path, oracle));

  std::ostringstream ta, tb, ca, cb;
  write_trajectory(a.trajectory, ta);
  write_trajectory(b.trajectory, tb);
  write_commands(a.commands, ca);
  write_commands(b.commands, cb);
  if (ta.str() != tb.str() || ca.str() != cb.str() || !(a.trajectory == b.trajectory)) {
    o.fail("rerun differs");
  }
  if (elapsed >= 10.0) o.fail(fmt("took %.2f s", elapsed));
  if (o.ok) {
    o.detail = "7/7 gates, path " + fmt("%.3f m vs oracle %.1f m", path, oracle) + fmt(" (%.2f%%)", rel * 100) +
               ", rerun bit-identical, " + fmt("%.2f s", elapsed);
  }
  return o;
}

// ---------------------------------------------------------------------------

Outcome metrics_report() {
  Outcome o;
  auto run = [](double path) {
    RunRecord r;
    r.metrics.path_length_m = path;
    r.metrics.time_s = 60.0;
    r.metrics.avg_velocity_mps = path / 60.0;
    r.metrics.max_velocity_mps = 2.0;
    return r;
  };
  const std::vector<RunRecord> a{run(73.44)}, b{run(89.29)};
  const auto rep = compare_report(a, b);
  const auto& row = rep.rows.at(1);
  if (row.name != "Path length, m" || !row.change_pct) {
    o.fail("missing path row");
    return o;
  }
  const double pct = *row.change_pct;
  const double expect = (73.44 - 89.29) / 89.29 * 100.0;
  if (std::abs(pct - expect) > 1e-9) o.fail(fmt("change %.4f%% vs %.4f%%", pct, expect));
  if (std::round(-pct * 100) / 100 != 17.75) o.fail(fmt("reported %.2f%%", -pct));
  if (std::round(-pct) != 18) o.fail("does not round to 18%");
  if (format_report(rep).find("Path length, m reduced by 17.75%") == std::string::npos) o.fail("report text");
  if (o.ok) o.detail = fmt("73.44 m vs 89.29 m: reduction %.2f%%", -pct);
  return o;
}

// ---------------------------------------------------------------------------

struct Enumerated {
  double v;
  double p;
};

// Independent brute force over all 2^n sign assignments of the mid-ranks.
Enumerated enumerate_signed_rank(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs)
    if (x != 0.0) d.push_back(x);
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    double below = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++below;
      if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    rank[i] = below + (equal + 1) / 2;
  }
  double wp = 0, wm = 0;
  for (std::size_t i = 0; i < n; ++i) (d[i] > 0 ? wp : wm) += rank[i];
  const double v = std::min(wp, wm);
  std::uint64_t hits = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) w += rank[i];
    if (w <= v) ++hits;
  }
  return {v, std::min(1.0, 2.0 * static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(n)))};
}

Outcome wilcoxon() {
  Outcome o;
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<int> len(1, 12);
  std::uniform_int_distribution<int> small(-6, 6);  // coarse values force ties and zeros
  std::uniform_real_distribution<double> wide(-10.0, 10.0);
  int trials = 0;
  while (trials < 1000) {
    std::vector<PairedSample> s;
    std::vector<double> diffs;
    const int n = len(rng);
    const bool coarse = trials % 2 == 0;
    for (int i = 0; i < n; ++i) {
      const double x = coarse ? small(rng) : wide(rng);
      s.push_back({"", x, 0.0});
      diffs.push_back(x);
    }
    if (std::all_of(diffs.begin(), diffs.end(), [](double x) { return x == 0.0; })) continue;
    ++trials;
    const auto got = wilcoxon_signed_rank(s, 25);
    const auto want = enumerate_signed_rank(diffs);
    if (got.method != SignedRankMethod::Exact || got.v != want.v || got.p_two_sided != want.p) {
      o.fail(fmt("exact branch mismatch: V %.1f vs %.1f", got.v, want.v));
      return o;
    }
  }

  double worst = 0.0;
  std::normal_distribution<double> shift_noise(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    std::vector<PairedSample> s;
    std::vector<double> diffs;
    const double shift = 0.15 * (t % 8);
    for (int i = 0; i < 20; ++i) {
      const double x = shift_noise(rng) + shift;
      s.push_back({"", x, 0.0});
      diffs.push_back(x);
    }
    const auto got = wilcoxon_signed_rank(s, 10);
    if (got.method != SignedRankMethod::NormalApprox) o.fail("expected the normal approximation");
    worst = std::max(worst, std::abs(got.p_two_sided - enumerate_signed_rank(diffs).p));
  }
  if (worst > 0.01) o.fail(fmt("normal approximation off by %.4f", worst));
  if (o.ok) o.detail = "1000 exact trials identical; n=20 approx max |dp| " + fmt("%.4f", worst);
  return o;
}

// ---------------------------------------------------------------------------

std::string random_line(std::mt19937_64& rng, const std::vector<std::string>& valid) {
  std::uniform_int_distribution<int> kind(0, 7);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  std::uniform_int_distribution<int> short_len(0, 120);
  switch (kind(rng)) {
    case 0: {  // random bytes
      std::string s;
      for (int i = short_len(rng); i > 0; --i) {
        char c = static_cast<char>(byte(rng));
        s.push_back(c == '\n' ? ' ' : c);
      }
      return s;
    }
    case 1: {  // mutated valid frame
      std::string s = valid[pick(rng)];
      std::uniform_int_distribution<std::size_t> pos(0, s.size() - 1);
      for (int i = 0; i < 3; ++i) {
        char c = static_cast<char>(byte(rng));
        s[pos(rng)] = c == '\n' ? '"' : c;
      }
      return s;
    }
    case 2: {  // truncated valid frame
      const std::string& s = valid[pick(rng)];
      return s.substr(0, std::uniform_int_distribution<std::size_t>(0, s.size())(rng));
    }
    case 3:
      return R"({"t_us": )" + std::to_string(static_cast<std::int64_t>(rng())) +
             R"(, "pts": [[468, 1e308, -1e308], [33, 0, 0, 0, 0]]})";
    case 4:
      return R"({"t_us": 5, "pts": [[)" + std::to_string(static_cast<int>(rng() % 2000) - 1000) +
             R"(, 0.1, 0.2]]})";
    case 5:
      // Deep nesting, now and then past the line limit.
      return std::string(static_cast<std::size_t>(rng() % 64 == 0 ? 70 * 1024 : rng() % 4096), '[');
    case 6:
      return R"({"proto": )" + std::to_string(rng() % 4) + "}";
    default:
      return valid[pick(rng)];
  }
}

Outcome gateway() {
  Outcome o;
  const auto dir = fs::temp_directory_path() / "gazerace-acceptance" / "gateway";
  fs::remove_all(dir);
  const auto profile = testing::pose_profile();
  NetworkConfig net;
  net.landmark_port = 0;
  net.telemetry_port = 0;
  net.http_port = 0;
  net.queue_depth = 1 << 17;

  const auto frames = testing::frames_for(testing::scripted_route());
  const auto offline = run_race(frames, default_track(), PipelineConfig{}, profile);
  std::vector<std::string> valid;
  for (const auto& f : frames) valid.push_back(encode_wire_frame(f));

  auto handler = std::make_shared<RaceHandler>(PipelineConfig{}, profile, default_track(), dir);
  Gateway gw(net, handler);
  gw.start();
  auto send_session = [&](const std::string& payload) {
    auto s = net::connect_to("127.0.0.1", gw.landmark_port());
    return s.send_all(payload);
  };

  // 1) Same recording over the wire as offline.
  std::string payload = encode_wire_hello() + "\n";
  for (const auto& line : valid) payload += line + "\n";
  send_session(payload);
  if (!gw.wait_for_sessions(1, 60s)) {
    o.fail("wire session did not complete");
    gw.stop();
    return o;
  }
  const auto s1 = RaceHandler::session_dir(dir, 1);
  std::ostringstream off_t, off_c;
  write_trajectory(offline.trajectory, off_t);
  write_commands(offline.commands, off_c);
  if (read_text_file(s1 / "trajectory.jsonl") != off_t.str()) o.fail("trajectory logs differ");
  if (read_text_file(s1 / "commands.jsonl") != off_c.str()) o.fail("command logs differ");

  // 2) 10^5 fuzzed lines, split across the landmark stream and the control channel.
  std::mt19937_64 rng(7);
  std::string fuzz;
  std::string control;
  for (int i = 0; i < 100000; ++i) {
    auto line = random_line(rng, valid);
    if (i % 10 == 9) control += line + "\n";
    else fuzz += line + "\n";
  }
  {
    auto console = net::connect_to("127.0.0.1", gw.telemetry_port());
    std::atomic<bool> stop{false};
    std::thread drain([&] {
      char buf[65536];
      while (!stop && console.recv_some(buf, sizeof buf, 50) != 0) {
      }
    });
    console.send_all(control);
    send_session(fuzz);
    if (!gw.wait_for_sessions(2, 120s)) o.fail("fuzz session did not complete");
    stop = true;
    drain.join();
  }

  // 3) Still serving afterwards.
  std::string after;
  for (int i = 1; i <= 50; ++i) after += encode_wire_frame(testing::pose_frame(Action::Center, i * 20000)) + "\n";
  send_session(after);
  if (!gw.wait_for_sessions(3, 30s)) o.fail("server stopped responding after fuzzing");
  const auto stats = gw.stats();
  gw.stop();
  const auto sums = handler->summaries();
  if (sums.size() != 3 || sums.back().frames != 50) o.fail("post-fuzz session incomplete");
  if (o.ok) {
    o.detail = "wire logs byte-identical to offline; 100000 fuzz lines (" + std::to_string(stats.malformed) +
               " malformed) survived";
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"ratio property suite", ratio_properties},
      {"classifier oracle equivalence", classifier_oracle},
      {"debounce automaton", debounce_automaton},
      {"control state machine", state_machine},
      {"position hold", position_hold},
      {"end-to-end scripted race", scripted_race},
      {"metrics report", metrics_report},
      {"signed-rank test", wilcoxon},
      {"gateway equivalence and fuzzing", gateway},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.ok) ++failed;
    std::printf("%s %s: %s [%.2f s]\n", o.ok ? "PASS" : "FAIL", c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
