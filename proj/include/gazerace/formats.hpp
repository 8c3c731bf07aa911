#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazerace/analytics.hpp"
#include "gazerace/classifier.hpp"
#include "gazerace/race.hpp"

namespace gazerace {

/// On-disk and on-wire document formats. Loaders throw IoError when the
/// file cannot be read and ConfigError/MalformedFrame-style errors when the
/// content does not match the schema.

inline constexpr int kProfileVersion = 1;

nlohmann::json profile_to_json(const CalibrationProfile& profile);
CalibrationProfile profile_from_json(const nlohmann::json& doc);
void save_profile(const CalibrationProfile& profile, const std::filesystem::path& path);
CalibrationProfile load_profile(const std::filesystem::path& path);

nlohmann::json track_to_json(const RaceTrack& track);
RaceTrack track_from_json(const nlohmann::json& doc);
void save_track(const RaceTrack& track, const std::filesystem::path& path);
RaceTrack load_track(const std::filesystem::path& path);

/// One JSON-lines record per tick.
nlohmann::json tick_to_json(const TickRecord& r);
TickRecord tick_from_json(const nlohmann::json& j);
void write_trajectory(const TrajectoryLog& log, std::ostream& out);
void save_trajectory(const TrajectoryLog& log, const std::filesystem::path& path);
TrajectoryLog load_trajectory(const std::filesystem::path& path);

nlohmann::json command_to_json(const FlightCommand& cmd);
FlightCommand command_from_json(const nlohmann::json& j);
nlohmann::json command_record_to_json(const CommandRecord& r);
CommandRecord command_record_from_json(const nlohmann::json& j);
void write_commands(const std::vector<CommandRecord>& cmds, std::ostream& out);
void save_commands(const std::vector<CommandRecord>& cmds, const std::filesystem::path& path);
std::vector<CommandRecord> load_commands(const std::filesystem::path& path);

/// Telemetry message published once per processed frame.
nlohmann::json telemetry_message(std::int64_t t_us, Action action, FlightPhase phase,
                                 const DroneState& drone, int gates_passed);

nlohmann::json metrics_to_json(const TrajectoryMetrics& m);
nlohmann::json race_result_to_json(const RaceResult& r);
nlohmann::json signed_rank_to_json(const SignedRankResult& r);
nlohmann::json report_to_json(const CompareReport& report);

/// CSV with columns label,a,b. A header row is skipped when its a/b fields
/// are not numeric.
std::vector<PairedSample> load_paired_csv(const std::filesystem::path& path);
std::vector<PairedSample> parse_paired_csv(std::istream& in);

/// label,time_s,path_length_m,avg_velocity_mps,max_velocity_mps
std::vector<RunRecord> load_runs_csv(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gazerace
