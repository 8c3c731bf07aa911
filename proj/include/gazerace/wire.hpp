#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gazerace/landmark.hpp"

namespace gazerace {

inline constexpr int kWireProtocolVersion = 1;
inline constexpr std::size_t kMaxWireLine = 64 * 1024;
/// Timestamps must lie in [0, 2^53] microseconds.
inline constexpr std::int64_t kMaxTimestampUs = std::int64_t{1} << 53;

/// One-time `{"proto": 1}` greeting that may open a stream.
struct WireHello {
  int proto = kWireProtocolVersion;
};

using WireMessage = std::variant<WireHello, LandmarkFrame>;

/// Parses one line (without its newline) of the landmark stream:
/// `{"t_us": int, "pts": [[idx, x, y, z?], ...]}` or the hello line.
/// Extra z components are accepted and dropped. Throws MalformedFrame.
WireMessage parse_wire_line(std::string_view line);

/// Parses a line that must be a landmark frame.
LandmarkFrame parse_wire_frame(std::string_view line);

std::string encode_wire_frame(const LandmarkFrame& frame);
std::string encode_wire_hello();

/// Stateful decoder for one stream: enforces strictly increasing
/// timestamps and counts what it skipped.
class WireDecoder {
 public:
  /// nullopt for hello lines, blank lines and skipped (malformed) lines.
  std::optional<LandmarkFrame> feed(std::string_view line);

  std::size_t frames() const noexcept { return frames_; }
  std::size_t malformed() const noexcept { return malformed_; }
  const std::string& last_error() const noexcept { return last_error_; }

 private:
  std::optional<std::int64_t> last_t_;
  std::size_t frames_ = 0;
  std::size_t malformed_ = 0;
  std::string last_error_;
};

/// Splits an incoming byte stream into lines, discarding (and flagging)
/// lines longer than kMaxWireLine without buffering them.
class LineSplitter {
 public:
  explicit LineSplitter(std::size_t max_line = kMaxWireLine) : max_line_(max_line) {}

  /// Calls on_line(line, oversized) for each completed line.
  void push(std::string_view bytes, const std::function<void(std::string_view, bool)>& on_line);
  /// Flushes a trailing unterminated line, if any.
  void finish(const std::function<void(std::string_view, bool)>& on_line);

 private:
  std::size_t max_line_;
  std::string buf_;
  bool overflow_ = false;
};

struct RecordedFrame {
  LandmarkFrame frame;
  std::string line;  // verbatim wire text
};

/// Reads a recording strictly: every non-blank line must parse and frame
/// timestamps must increase. Frames before a bad line are delivered to
/// `sink` before CorruptRecording is thrown.
void read_recording(std::istream& in, const std::function<void(const RecordedFrame&)>& sink);
std::vector<RecordedFrame> load_recording(const std::filesystem::path& path);

/// Writes valid wire lines verbatim (hello and frames); malformed input
/// lines are skipped. Returns the number of frames written.
struct RecordStats {
  std::size_t frames = 0;
  std::size_t malformed = 0;
};

class Recorder {
 public:
  explicit Recorder(const std::filesystem::path& path);
  /// Returns true when the line was a frame and was persisted.
  bool write_line(std::string_view line);
  const RecordStats& stats() const noexcept { return stats_; }
  void flush();

 private:
  std::ofstream out_;
  WireDecoder decoder_;
  RecordStats stats_;
};

RecordStats record(std::istream& in, const std::filesystem::path& path);

/// Re-emits a recording with its original inter-frame gaps multiplied by
/// `gap_scale` (0 = as fast as possible). Throws CorruptRecording or
/// IoError; frames before the fault are delivered.
std::size_t replay(const std::filesystem::path& path, double gap_scale,
                   const std::function<void(const RecordedFrame&)>& sink);

}  // namespace gazerace
