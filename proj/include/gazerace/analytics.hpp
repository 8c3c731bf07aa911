#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazerace/race.hpp"

namespace gazerace {

struct TrajectoryMetrics {
  double time_s = 0.0;
  double path_length_m = 0.0;
  double avg_velocity_mps = 0.0;
  double max_velocity_mps = 0.0;
};

/// Metrics over the timed window: from the first Flying tick to the tick
/// that passed the final gate when `gate_count` gates were passed, otherwise
/// to the last Flying tick. Only consecutive Flying samples contribute path.
/// Throws EmptyTrajectory when fewer than two Flying samples exist.
TrajectoryMetrics metrics(const TrajectoryLog& log, std::optional<int> gate_count = std::nullopt);

struct PairedSample {
  std::string label;
  double a = 0.0;
  double b = 0.0;
};

enum class SignedRankMethod { Exact, NormalApprox };

std::string_view to_string(SignedRankMethod m) noexcept;

struct SignedRankResult {
  double v = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_two_sided = 1.0;
  std::size_t n_effective = 0;
  SignedRankMethod method = SignedRankMethod::Exact;
};

inline constexpr std::size_t kDefaultExactThreshold = 25;

/// Paired Wilcoxon signed-rank test on d = a - b. Zero differences are
/// dropped, tied |d| get mid-ranks. Up to `exact_threshold` pairs, p comes
/// from the exact null distribution over all 2^n sign assignments; beyond
/// that, the normal approximation with tie and continuity corrections.
/// Throws AllZeroDifferences.
SignedRankResult wilcoxon_signed_rank(std::span<const PairedSample> samples,
                                      std::size_t exact_threshold = kDefaultExactThreshold);

struct RunRecord {
  std::string label;  // subject id used for pairing; empty disables pairing
  TrajectoryMetrics metrics;
};

struct MetricSummary {
  std::string name;  // row name, e.g. "Path length, m"
  double mean_a = 0.0;
  double mean_b = 0.0;
  double best_a = 0.0;
  double best_b = 0.0;
  bool lower_is_better = true;
  /// (mean_a - mean_b) / mean_b * 100; nullopt when mean_b is zero and the means differ.
  std::optional<double> change_pct;
  std::optional<SignedRankResult> signed_rank;
  std::string signed_rank_note;  // why signed_rank is absent
};

struct CompareReport {
  std::string label_a = "A";
  std::string label_b = "B";
  std::size_t runs_a = 0;
  std::size_t runs_b = 0;
  std::vector<MetricSummary> rows;  // Time, Path length, Average velocity, Maximal velocity
  bool paired = false;
  std::size_t pairs = 0;
};

/// Per-condition means and best runs for each metric, percentage changes of
/// A relative to B, and per-metric signed-rank tests on per-label means when
/// both conditions carry the same non-empty label set. Throws EmptyInput.
CompareReport compare_report(std::span<const RunRecord> runs_a, std::span<const RunRecord> runs_b,
                             std::size_t exact_threshold = kDefaultExactThreshold);

/// Human-readable table using the conventional row names.
std::string format_report(const CompareReport& report);
std::string format_metrics(const TrajectoryMetrics& m);
std::string format_signed_rank(const SignedRankResult& r);

}  // namespace gazerace
