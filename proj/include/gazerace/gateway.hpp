#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gazerace/calibration_session.hpp"
#include "gazerace/config.hpp"
#include "gazerace/race.hpp"
#include "gazerace/wire.hpp"

namespace gazerace {

/// Bounded FIFO that makes room by discarding the oldest entry.
class DropOldestQueue {
 public:
  explicit DropOldestQueue(std::size_t capacity) : capacity_(capacity) {}

  /// Returns false when an older entry had to be discarded.
  bool push(std::string item);
  /// Waits up to `timeout`; nullopt on timeout or once closed and drained.
  std::optional<std::string> pop(std::chrono::milliseconds timeout);
  void close();
  bool closed() const;
  std::size_t dropped() const;
  std::size_t size() const;

 private:
  mutable std::mutex m_;
  std::condition_variable cv_;
  std::deque<std::string> q_;
  std::size_t capacity_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

/// Fan-out of telemetry lines to any number of subscribers, each with its
/// own bounded queue.
class TelemetryHub {
 public:
  explicit TelemetryHub(std::size_t per_subscriber_depth = 1024) : depth_(per_subscriber_depth) {}

  std::shared_ptr<DropOldestQueue> subscribe();
  void unsubscribe(const std::shared_ptr<DropOldestQueue>& sub);
  void publish(const nlohmann::json& msg);
  void close_all();
  std::size_t subscribers() const;
  std::size_t published() const noexcept { return published_.load(); }

 private:
  std::size_t depth_;
  mutable std::mutex m_;
  std::vector<std::shared_ptr<DropOldestQueue>> subs_;
  std::atomic<std::size_t> published_{0};
};

enum class SessionEnd { EndOfStream, ConnectionLost, Shutdown };

std::string_view to_string(SessionEnd e) noexcept;

using Publisher = std::function<void(const nlohmann::json&)>;

/// What the gateway does with each landmark connection. All calls come from
/// the single pipeline thread, in stream order.
class SessionHandler {
 public:
  virtual ~SessionHandler() = default;
  virtual void attach(Publisher publish) { publish_ = std::move(publish); }
  virtual void begin_session(std::size_t index) = 0;
  virtual void on_frame(const RecordedFrame& frame) = 0;
  virtual void end_session(SessionEnd how) = 0;
  /// Control messages arriving from telemetry subscribers; replies are broadcast.
  virtual std::vector<nlohmann::json> on_message(const nlohmann::json& msg);
  /// True once the handler needs no further input (the gateway may stop).
  virtual bool done() const { return false; }

 protected:
  void publish(const nlohmann::json& msg) const {
    if (publish_) publish_(msg);
  }

 private:
  Publisher publish_;
};

struct SessionSummary {
  std::size_t index = 0;
  SessionEnd end = SessionEnd::EndOfStream;
  RaceResult result;
  std::size_t frames = 0;
  std::filesystem::path dir;
};

/// Live race: full pipeline per connection; logs land in
/// `<out>/session-NNN/{trajectory,commands}.jsonl` plus result.json.
class RaceHandler : public SessionHandler {
 public:
  RaceHandler(PipelineConfig config, CalibrationProfile profile, RaceTrack track,
              std::filesystem::path out_dir);

  void begin_session(std::size_t index) override;
  void on_frame(const RecordedFrame& frame) override;
  void end_session(SessionEnd how) override;

  std::vector<SessionSummary> summaries() const;
  static std::filesystem::path session_dir(const std::filesystem::path& out, std::size_t index);

 private:
  PipelineConfig config_;
  CalibrationProfile profile_;
  RaceTrack track_;
  std::filesystem::path out_dir_;
  std::unique_ptr<Pipeline> pipeline_;
  std::size_t index_ = 0;
  std::size_t frames_ = 0;
  mutable std::mutex m_;
  std::vector<SessionSummary> summaries_;
};

/// Calibration wizard endpoint; writes the profile on success.
class CalibrationHandler : public SessionHandler {
 public:
  CalibrationHandler(EyeGeometryConfig geometry, CalibrationParams params,
                     std::filesystem::path profile_out);

  void attach(Publisher publish) override;
  void begin_session(std::size_t index) override;
  void on_frame(const RecordedFrame& frame) override;
  void end_session(SessionEnd how) override;
  std::vector<nlohmann::json> on_message(const nlohmann::json& msg) override;
  bool done() const override { return done_.load(); }

  std::optional<CalibrationProfile> profile() const;

 private:
  CalibrationSession session_;
  std::filesystem::path profile_out_;
  std::atomic<bool> done_{false};
  mutable std::mutex m_;
};

/// Persists the first landmark connection verbatim.
class RecordHandler : public SessionHandler {
 public:
  explicit RecordHandler(std::filesystem::path path);

  void begin_session(std::size_t index) override;
  void on_frame(const RecordedFrame& frame) override;
  void end_session(SessionEnd how) override;
  bool done() const override { return done_.load(); }
  std::size_t frames() const noexcept { return frames_.load(); }

 private:
  std::filesystem::path path_;
  std::unique_ptr<Recorder> recorder_;
  std::atomic<std::size_t> frames_{0};
  std::atomic<bool> done_{false};
};

struct GatewayStats {
  std::size_t frames = 0;
  std::size_t malformed = 0;
  std::size_t dropped = 0;
  std::size_t rejected_connections = 0;
  std::size_t sessions_started = 0;
  std::size_t sessions_completed = 0;
  std::size_t messages = 0;
};

/// Landmark ingestion (one connection at a time), a single pipeline thread,
/// and the telemetry channels: newline-delimited JSON over TCP and
/// Server-Sent Events over HTTP (GET /telemetry, POST /message, GET /health).
class Gateway {
 public:
  Gateway(NetworkConfig net, std::shared_ptr<SessionHandler> handler);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Binds every endpoint; throws BindError.
  void start();
  /// Cooperative shutdown: stops accepting, drains queued frames, joins.
  void stop();

  std::uint16_t landmark_port() const noexcept { return landmark_port_; }
  std::uint16_t telemetry_port() const noexcept { return telemetry_port_; }
  std::uint16_t http_port() const noexcept { return http_port_; }

  GatewayStats stats() const;
  bool wait_for_sessions(std::size_t completed, std::chrono::milliseconds timeout) const;
  /// Blocks until the handler reports done or `should_stop` returns true.
  void run_until(const std::function<bool()>& should_stop);
  TelemetryHub& hub() noexcept { return hub_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  TelemetryHub hub_;
  std::uint16_t landmark_port_ = 0;
  std::uint16_t telemetry_port_ = 0;
  std::uint16_t http_port_ = 0;
};

}  // namespace gazerace
