#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "gazerace/analytics.hpp"
#include "gazerace/classifier.hpp"
#include "gazerace/race.hpp"

namespace gazerace {

inline constexpr const char* kConfigEnvVar = "GAZERACE_CONFIG";

struct NetworkConfig {
  std::string host = "127.0.0.1";
  std::uint16_t landmark_port = 7700;
  std::uint16_t telemetry_port = 7701;
  std::uint16_t http_port = 7702;  // 0 disables the browser (SSE) channel
  std::size_t queue_depth = 256;   // frames buffered between ingestion and pipeline
  std::size_t subscriber_queue_depth = 1024;
};

struct SessionConfig {
  EyeGeometryConfig geometry;
  CalibrationParams calibration;
  SmoothingParams smoothing;
  ControllerConfig controller;
  SimParams sim;
  std::optional<std::filesystem::path> track_path;
  std::optional<std::filesystem::path> profile_path;
  NetworkConfig network;
  std::size_t exact_threshold = kDefaultExactThreshold;

  PipelineConfig pipeline() const { return {geometry, smoothing, controller, sim}; }
  /// Built-in track when no track path is set.
  RaceTrack load_track() const;
  /// Throws ConfigError when no profile path is set.
  CalibrationProfile load_profile() const;

  /// Range checks on every numeric parameter; throws ConfigError.
  void validate() const;
};

/// Paths inside the document are resolved against `base_dir`. Missing keys
/// keep their defaults; referenced files must exist.
SessionConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
nlohmann::json config_to_json(const SessionConfig& cfg);

SessionConfig load_config(const std::filesystem::path& path);

/// Explicit path, else $GAZERACE_CONFIG, else defaults.
SessionConfig resolve_config(const std::optional<std::filesystem::path>& explicit_path);

}  // namespace gazerace
