#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "gazerace/analytics.hpp"
#include "gazerace/classifier.hpp"
#include "gazerace/errors.hpp"
#include "gazerace/formats.hpp"
#include "gazerace/race.hpp"
#include "gazerace/wire.hpp"

namespace py = pybind11;
using namespace gazerace;

namespace {

LandmarkFrame frame_from(std::int64_t t_us, const std::map<int, std::pair<double, double>>& pts) {
  LandmarkFrame f;
  f.timestamp_us = t_us;
  for (const auto& [i, p] : pts) f.points[i] = {p.first, p.second};
  return f;
}

py::dict metrics_dict(const TrajectoryMetrics& m) {
  py::dict d;
  d["time_s"] = m.time_s;
  d["path_length_m"] = m.path_length_m;
  d["avg_velocity_mps"] = m.avg_velocity_mps;
  d["max_velocity_mps"] = m.max_velocity_mps;
  return d;
}

/// Stateful wrapper: one classifier stream.
class Classifier {
 public:
  Classifier(CalibrationProfile profile, SmoothingParams params)
      : profile_(std::move(profile)), params_(params) {
    params_.validate();
  }
  py::tuple push(const RatioVector& r) {
    const auto res = step(state_, r, profile_, params_);
    state_ = res.state;
    return py::make_tuple(res.emitted, res.changed, res.raw);
  }
  Action emitted() const { return state_.emitted; }

 private:
  CalibrationProfile profile_;
  SmoothingParams params_;
  ClassifierState state_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Eye-gesture drone racing core";

  auto base = py::register_exception<Error>(m, "GazeraceError", PyExc_RuntimeError);
  py::register_exception<DegenerateGeometry>(m, "DegenerateGeometry", base.ptr());
  py::register_exception<MissingLandmark>(m, "MissingLandmark", base.ptr());
  py::register_exception<CalibrationError>(m, "CalibrationError", base.ptr());
  py::register_exception<EmptyTrajectory>(m, "EmptyTrajectory", base.ptr());
  py::register_exception<AllZeroDifferences>(m, "AllZeroDifferences", base.ptr());
  py::register_exception<MalformedFrame>(m, "MalformedFrame", base.ptr());
  py::register_exception<CorruptRecording>(m, "CorruptRecording", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::enum_<Action> action(m, "Action");
  for (Action a : kAllActions) action.value(std::string(to_string(a)).c_str(), a);

  py::enum_<FlightPhase>(m, "FlightPhase")
      .value("Disarmed", FlightPhase::Disarmed)
      .value("TakingOff", FlightPhase::TakingOff)
      .value("Flying", FlightPhase::Flying)
      .value("Landing", FlightPhase::Landing);

  py::class_<RatioVector>(m, "RatioVector")
      .def(py::init<>())
      .def(py::init([](double h, double v, double open, double brow) { return RatioVector{h, v, open, brow}; }),
           py::arg("h"), py::arg("v"), py::arg("open"), py::arg("brow"))
      .def_readwrite("h", &RatioVector::h)
      .def_readwrite("v", &RatioVector::v)
      .def_readwrite("open", &RatioVector::open)
      .def_readwrite("brow", &RatioVector::brow)
      .def("to_list", [](const RatioVector& r) {
        const auto a = r.to_array();
        return std::vector<double>(a.begin(), a.end());
      })
      .def("__eq__", [](const RatioVector& a, const RatioVector& b) { return a == b; })
      .def("__repr__", [](const RatioVector& r) {
        return "RatioVector(h=" + std::to_string(r.h) + ", v=" + std::to_string(r.v) +
               ", open=" + std::to_string(r.open) + ", brow=" + std::to_string(r.brow) + ")";
      });

  py::class_<CalibrationProfile>(m, "CalibrationProfile")
      .def("centroid", [](const CalibrationProfile& p, Action a) { return p[a].centroid; })
      .def("spread", [](const CalibrationProfile& p, Action a) { return p[a].spread; })
      .def("sample_count", [](const CalibrationProfile& p, Action a) { return p[a].sample_count; })
      .def("save", [](const CalibrationProfile& p, const std::filesystem::path& path) { save_profile(p, path); })
      .def_static("load", &load_profile)
      .def("__eq__", [](const CalibrationProfile& a, const CalibrationProfile& b) { return a == b; });

  py::class_<SmoothingParams>(m, "SmoothingParams")
      .def(py::init([](double alpha, int frames) { return SmoothingParams{alpha, frames}; }),
           py::arg("ema_alpha") = 0.4, py::arg("debounce_frames") = 3)
      .def_readwrite("ema_alpha", &SmoothingParams::ema_alpha)
      .def_readwrite("debounce_frames", &SmoothingParams::debounce_frames);

  m.def("ratio",
        [](std::pair<double, double> e1, std::pair<double, double> e2, std::pair<double, double> c) {
          return ratio({e1.first, e1.second}, {e2.first, e2.second}, {c.first, c.second});
        },
        py::arg("e1"), py::arg("e2"), py::arg("c"));

  m.def("extract_ratios",
        [](const std::map<int, std::pair<double, double>>& pts) {
          return extract_ratios(frame_from(0, pts), EyeGeometryConfig{});
        },
        py::arg("points"), "Ratios from {landmark index: (x, y)} using the default eye geometry.");

  m.def("calibrate",
        [](const std::vector<std::pair<Action, RatioVector>>& samples, std::size_t min_samples,
           double min_spread, double max_cv) {
          std::vector<CalibrationSample> s;
          for (const auto& [a, r] : samples) s.push_back({a, r});
          return calibrate(s, {min_samples, min_spread, max_cv});
        },
        py::arg("samples"), py::arg("min_samples") = 30, py::arg("min_spread") = 0.01,
        py::arg("max_cv") = 0.5);

  m.def("classify_frame", &classify_frame, py::arg("ratios"), py::arg("profile"));

  py::class_<Classifier>(m, "Classifier")
      .def(py::init<CalibrationProfile, SmoothingParams>(), py::arg("profile"),
           py::arg("params") = SmoothingParams{})
      .def("push", &Classifier::push, py::arg("ratios"), "Returns (emitted, changed, raw).")
      .def_property_readonly("emitted", &Classifier::emitted);

  m.def("parse_wire_frame",
        [](const std::string& line) {
          const auto f = parse_wire_frame(line);
          std::map<int, std::pair<double, double>> pts;
          for (const auto& [i, p] : f.points) pts[i] = {p.x, p.y};
          return py::make_tuple(f.timestamp_us, pts);
        },
        py::arg("line"), "Returns (t_us, {index: (x, y)}).");
  m.def("encode_wire_frame",
        [](std::int64_t t_us, const std::map<int, std::pair<double, double>>& pts) {
          return encode_wire_frame(frame_from(t_us, pts));
        },
        py::arg("t_us"), py::arg("points"));

  m.def("replay_race",
        [](const std::filesystem::path& recording, const CalibrationProfile& profile,
           std::optional<std::filesystem::path> track, std::optional<std::filesystem::path> out_dir) {
          const RaceTrack t = track ? load_track(*track) : default_track();
          Pipeline pl(PipelineConfig{}, profile, t);
          replay(recording, 0.0, [&](const RecordedFrame& f) { pl.feed(f.frame); });
          const auto res = pl.finish();
          if (out_dir) {
            save_trajectory(pl.session().trajectory(), *out_dir / "trajectory.jsonl");
            save_commands(pl.session().commands(), *out_dir / "commands.jsonl");
          }
          py::dict d;
          d["finished"] = res.finished;
          d["gates_passed"] = res.gate_times_us.size();
          d["gate_count"] = res.gate_count;
          d["splits_s"] = res.splits_s;
          try {
            d["metrics"] = metrics_dict(metrics(pl.session().trajectory(), static_cast<int>(res.gate_count)));
          } catch (const EmptyTrajectory&) {
            d["metrics"] = py::none();
          }
          return d;
        },
        py::arg("recording"), py::arg("profile"), py::arg("track") = py::none(),
        py::arg("out_dir") = py::none(),
        "Runs the full pipeline over a recording as fast as possible.");

  m.def("trajectory_metrics",
        [](const std::filesystem::path& log, std::optional<int> gate_count) {
          return metrics_dict(metrics(load_trajectory(log), gate_count));
        },
        py::arg("log"), py::arg("gate_count") = py::none());

  m.def("signed_rank",
        [](const std::vector<double>& a, const std::vector<double>& b, std::size_t exact_threshold) {
          if (a.size() != b.size()) throw ConfigError("a and b must have the same length");
          std::vector<PairedSample> s;
          for (std::size_t i = 0; i < a.size(); ++i) s.push_back({"", a[i], b[i]});
          const auto r = wilcoxon_signed_rank(s, exact_threshold);
          py::dict d;
          d["V"] = r.v;
          d["W_plus"] = r.w_plus;
          d["W_minus"] = r.w_minus;
          d["p"] = r.p_two_sided;
          d["n"] = r.n_effective;
          d["method"] = std::string(to_string(r.method));
          return d;
        },
        py::arg("a"), py::arg("b"), py::arg("exact_threshold") = kDefaultExactThreshold);

  m.def("compare_runs",
        [](const std::filesystem::path& runs_a, const std::filesystem::path& runs_b) {
          const auto rep = compare_report(load_runs_csv(runs_a), load_runs_csv(runs_b));
          return report_to_json(rep).dump();
        },
        py::arg("runs_a"), py::arg("runs_b"), "Comparison report as a JSON string.");
}
