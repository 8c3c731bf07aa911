#include "gazerace/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "gazerace/errors.hpp"

namespace gazerace {

TrajectoryMetrics metrics(const TrajectoryLog& log, std::optional<int> gate_count) {
  const auto& ticks = log.ticks;
  auto flying = [](const TickRecord& r) { return r.phase == FlightPhase::Flying; };

  const auto first = std::find_if(ticks.begin(), ticks.end(), flying);
  if (first == ticks.end()) throw EmptyTrajectory("trajectory has no Flying samples");
  const auto begin = static_cast<std::size_t>(first - ticks.begin());

  std::optional<std::size_t> end;
  if (gate_count && *gate_count > 0) {
    for (std::size_t i = begin; i < ticks.size(); ++i) {
      if (ticks[i].gates_passed >= *gate_count) {
        end = i;
        break;
      }
    }
  }
  if (!end) {
    for (std::size_t i = ticks.size(); i-- > begin;) {
      if (flying(ticks[i])) {
        end = i;
        break;
      }
    }
  }

  TrajectoryMetrics m;
  std::size_t flying_samples = 0;
  for (std::size_t i = begin; i <= *end; ++i) {
    if (flying(ticks[i])) ++flying_samples;
  }
  if (flying_samples < 2) throw EmptyTrajectory("trajectory needs at least two Flying samples");

  for (std::size_t i = begin; i < *end; ++i) {
    const auto& a = ticks[i];
    const auto& b = ticks[i + 1];
    if (!flying(a) || !flying(b)) continue;
    const double step = (b.position - a.position).norm();
    m.path_length_m += step;
    const double dt = static_cast<double>(b.t_us - a.t_us) / 1e6;
    if (dt > 0.0) m.max_velocity_mps = std::max(m.max_velocity_mps, step / dt);
  }
  m.time_s = static_cast<double>(ticks[*end].t_us - ticks[begin].t_us) / 1e6;
  m.avg_velocity_mps = m.time_s > 0.0 ? m.path_length_m / m.time_s : 0.0;
  return m;
}

std::string_view to_string(SignedRankMethod m) noexcept {
  return m == SignedRankMethod::Exact ? "exact" : "normal-approx";
}

namespace {

// Mid-ranks doubled so tied ranks stay integral.
std::vector<std::int64_t> doubled_midranks(const std::vector<double>& abs_d) {
  const std::size_t n = abs_d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return abs_d[i] < abs_d[j]; });
  std::vector<std::int64_t> r2(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
    // ranks i+1 .. j+1 share (i+1 + j+1)/2; doubled: i + j + 2
    for (std::size_t k = i; k <= j; ++k) r2[order[k]] = static_cast<std::int64_t>(i + j + 2);
    i = j + 1;
  }
  return r2;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

SignedRankResult wilcoxon_signed_rank(std::span<const PairedSample> samples,
                                      std::size_t exact_threshold) {
  if (samples.empty()) throw EmptyInput("no paired samples");
  std::vector<double> d;
  for (const auto& s : samples) {
    const double diff = s.a - s.b;
    if (!std::isfinite(diff)) throw Error("paired sample '" + s.label + "' is not finite");
    if (diff != 0.0) d.push_back(diff);
  }
  if (d.empty()) throw AllZeroDifferences();

  const std::size_t n = d.size();
  std::vector<double> abs_d(n);
  std::transform(d.begin(), d.end(), abs_d.begin(), [](double x) { return std::abs(x); });
  const auto r2 = doubled_midranks(abs_d);

  std::int64_t w2_plus = 0;
  std::int64_t w2_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    w2_total += r2[i];
    if (d[i] > 0.0) w2_plus += r2[i];
  }
  const std::int64_t w2_minus = w2_total - w2_plus;
  const std::int64_t v2 = std::min(w2_plus, w2_minus);

  SignedRankResult res;
  res.n_effective = n;
  res.w_plus = static_cast<double>(w2_plus) / 2.0;
  res.w_minus = static_cast<double>(w2_minus) / 2.0;
  res.v = static_cast<double>(v2) / 2.0;

  // Counts over 2^n assignments must fit in 64 bits.
  if (n <= exact_threshold && n <= 62) {
    res.method = SignedRankMethod::Exact;
    std::vector<std::uint64_t> count(static_cast<std::size_t>(w2_total) + 1, 0);
    count[0] = 1;
    std::int64_t reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::int64_t s = reach; s >= 0; --s) {
        if (count[static_cast<std::size_t>(s)] != 0) {
          count[static_cast<std::size_t>(s + r2[i])] += count[static_cast<std::size_t>(s)];
        }
      }
      reach += r2[i];
    }
    std::uint64_t tail = 0;
    for (std::int64_t s = 0; s <= v2; ++s) tail += count[static_cast<std::size_t>(s)];
    const double total = std::ldexp(1.0, static_cast<int>(n));
    res.p_two_sided = std::min(1.0, 2.0 * static_cast<double>(tail) / total);
  } else {
    res.method = SignedRankMethod::NormalApprox;
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    std::vector<double> sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      var -= (t * t * t - t) / 48.0;
      i = j;
    }
    const double z = std::max(0.0, std::abs(res.v - mean) - 0.5) / std::sqrt(var);
    res.p_two_sided = std::min(1.0, 2.0 * normal_sf(z));
  }
  return res;
}

namespace {

struct MetricDef {
  const char* name;
  double TrajectoryMetrics::*field;
  bool lower_is_better;
};

constexpr MetricDef kMetricDefs[] = {
    {"Time, s", &TrajectoryMetrics::time_s, true},
    {"Path length, m", &TrajectoryMetrics::path_length_m, true},
    {"Average velocity, m/s", &TrajectoryMetrics::avg_velocity_mps, false},
    {"Maximal velocity, m/s", &TrajectoryMetrics::max_velocity_mps, false},
};

double mean_of(std::span<const RunRecord> runs, double TrajectoryMetrics::*field) {
  double s = 0.0;
  for (const auto& r : runs) s += r.metrics.*field;
  return s / static_cast<double>(runs.size());
}

double best_of(std::span<const RunRecord> runs, double TrajectoryMetrics::*field, bool lower) {
  double best = runs.front().metrics.*field;
  for (const auto& r : runs) {
    const double v = r.metrics.*field;
    best = lower ? std::min(best, v) : std::max(best, v);
  }
  return best;
}

std::optional<std::map<std::string, TrajectoryMetrics>> per_label_means(
    std::span<const RunRecord> runs) {
  std::map<std::string, std::pair<TrajectoryMetrics, int>> acc;
  for (const auto& r : runs) {
    if (r.label.empty()) return std::nullopt;
    auto& [sum, count] = acc[r.label];
    for (const auto& def : kMetricDefs) sum.*(def.field) += r.metrics.*(def.field);
    ++count;
  }
  std::map<std::string, TrajectoryMetrics> out;
  for (auto& [label, entry] : acc) {
    TrajectoryMetrics m = entry.first;
    for (const auto& def : kMetricDefs) m.*(def.field) /= entry.second;
    out.emplace(label, m);
  }
  return out;
}

}  // namespace

CompareReport compare_report(std::span<const RunRecord> runs_a, std::span<const RunRecord> runs_b,
                             std::size_t exact_threshold) {
  if (runs_a.empty() || runs_b.empty()) throw EmptyInput("compare_report needs runs in both sets");

  CompareReport rep;
  rep.runs_a = runs_a.size();
  rep.runs_b = runs_b.size();

  auto by_label_a = per_label_means(runs_a);
  auto by_label_b = per_label_means(runs_b);
  bool aligned = by_label_a && by_label_b && by_label_a->size() == by_label_b->size();
  if (aligned) {
    for (const auto& [label, _] : *by_label_a) {
      if (!by_label_b->count(label)) {
        aligned = false;
        break;
      }
    }
  }
  rep.paired = aligned;
  rep.pairs = aligned ? by_label_a->size() : 0;

  for (const auto& def : kMetricDefs) {
    MetricSummary row;
    row.name = def.name;
    row.lower_is_better = def.lower_is_better;
    row.mean_a = mean_of(runs_a, def.field);
    row.mean_b = mean_of(runs_b, def.field);
    row.best_a = best_of(runs_a, def.field, def.lower_is_better);
    row.best_b = best_of(runs_b, def.field, def.lower_is_better);
    if (row.mean_b != 0.0) {
      row.change_pct = (row.mean_a - row.mean_b) / row.mean_b * 100.0;
    } else if (row.mean_a == 0.0) {
      row.change_pct = 0.0;
    }

    if (aligned) {
      std::vector<PairedSample> pairs;
      for (const auto& [label, ma] : *by_label_a) {
        pairs.push_back({label, ma.*(def.field), by_label_b->at(label).*(def.field)});
      }
      try {
        row.signed_rank = wilcoxon_signed_rank(pairs, exact_threshold);
      } catch (const AllZeroDifferences&) {
        row.signed_rank_note = "all paired differences are zero";
      }
    } else {
      row.signed_rank_note = "runs are not paired by label";
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

std::string format_signed_rank(const SignedRankResult& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "V=%g, p=%.4g (n=%zu, %s)", r.v, r.p_two_sided, r.n_effective,
                std::string(to_string(r.method)).c_str());
  return buf;
}

std::string format_metrics(const TrajectoryMetrics& m) {
  std::ostringstream os;
  os << "Time, s: " << fmt("%.2f", m.time_s) << '\n'
     << "Path length, m: " << fmt("%.2f", m.path_length_m) << '\n'
     << "Average velocity, m/s: " << fmt("%.2f", m.avg_velocity_mps) << '\n'
     << "Maximal velocity, m/s: " << fmt("%.2f", m.max_velocity_mps) << '\n';
  return os.str();
}

std::string format_report(const CompareReport& report) {
  std::ostringstream os;
  char line[256];
  os << "Trajectory comparison: " << report.label_a << " (" << report.runs_a << " runs) vs "
     << report.label_b << " (" << report.runs_b << " runs)\n";
  os << "Change = (" << report.label_a << " - " << report.label_b << ") / " << report.label_b
     << ". Signed-rank V = min(W+, W-), two-sided p";
  if (report.paired) {
    os << ", " << report.pairs << " label-paired subjects";
  } else {
    os << ", not computed (runs not paired by label)";
  }
  os << ".\n";
  std::snprintf(line, sizeof line, "%-12s %-22s %12s %12s %10s  %s\n", "Participants", "Metrics",
                report.label_a.c_str(), report.label_b.c_str(), "Change, %", "Wilcoxon");
  os << line;

  bool first = true;
  for (const auto& row : report.rows) {
    const std::string change = row.change_pct ? fmt("%+.2f", *row.change_pct) : "n/a";
    const std::string test = row.signed_rank ? format_signed_rank(*row.signed_rank)
                                             : (report.paired ? row.signed_rank_note : "");
    std::snprintf(line, sizeof line, "%-12s %-22s %12.2f %12.2f %10s  %s\n",
                  first ? "Overall" : "", row.name.c_str(), row.mean_a, row.mean_b, change.c_str(),
                  test.c_str());
    os << line;
    first = false;
  }
  first = true;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof line, "%-12s %-22s %12.2f %12.2f\n", first ? "Best Result" : "",
                  row.name.c_str(), row.best_a, row.best_b);
    os << line;
    first = false;
  }
  for (const auto& row : report.rows) {
    if (row.change_pct && *row.change_pct < 0.0) {
      std::snprintf(line, sizeof line, "%s reduced by %.2f%%\n", row.name.c_str(),
                    -*row.change_pct);
      os << line;
    }
  }
  return os.str();
}

}  // namespace gazerace
