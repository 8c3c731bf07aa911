#include "gazerace/wire.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include <json.hpp>

#include "gazerace/errors.hpp"

namespace gazerace {

using nlohmann::json;

namespace {

bool integral(const json& j) { return j.is_number_integer() || j.is_number_unsigned(); }

std::int64_t as_int64(const json& j, const char* what) {
  if (j.is_number_unsigned()) {
    const auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw MalformedFrame(std::string(what) + " out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  if (j.is_number_integer()) return j.get<std::int64_t>();
  throw MalformedFrame(std::string(what) + " must be an integer");
}

double as_coord(const json& j) {
  if (!j.is_number()) throw MalformedFrame("coordinate must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw MalformedFrame("coordinate must be finite");
  return v;
}

}  // namespace

WireMessage parse_wire_line(std::string_view line) {
  if (line.size() > kMaxWireLine) throw MalformedFrame("line exceeds 64 KiB");
  json doc = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw MalformedFrame("not valid JSON");
  if (!doc.is_object()) throw MalformedFrame("expected a JSON object");

  if (!doc.contains("t_us")) {
    auto it = doc.find("proto");
    if (it == doc.end()) throw MalformedFrame("missing t_us");
    if (!integral(*it) || as_int64(*it, "proto") != kWireProtocolVersion) {
      throw MalformedFrame("unsupported protocol version " + it->dump());
    }
    return WireHello{};
  }

  LandmarkFrame frame;
  frame.timestamp_us = as_int64(doc["t_us"], "t_us");
  if (frame.timestamp_us < 0 || frame.timestamp_us > kMaxTimestampUs) {
    throw MalformedFrame("t_us out of range");
  }
  auto pts = doc.find("pts");
  if (pts == doc.end() || !pts->is_array()) throw MalformedFrame("pts must be an array");
  for (const auto& p : *pts) {
    if (!p.is_array() || p.size() < 3 || p.size() > 4) {
      throw MalformedFrame("each point must be [idx, x, y] or [idx, x, y, z]");
    }
    const auto idx = as_int64(p[0], "landmark index");
    if (idx < 0 || idx >= kLandmarkCount) {
      throw MalformedFrame("landmark index " + std::to_string(idx) + " out of range");
    }
    Point2 pt{as_coord(p[1]), as_coord(p[2])};
    if (p.size() == 4) as_coord(p[3]);
    if (!frame.points.emplace(static_cast<int>(idx), pt).second) {
      throw MalformedFrame("duplicate landmark index " + std::to_string(idx));
    }
  }
  return frame;
}

LandmarkFrame parse_wire_frame(std::string_view line) {
  auto msg = parse_wire_line(line);
  if (auto* f = std::get_if<LandmarkFrame>(&msg)) return std::move(*f);
  throw MalformedFrame("expected a landmark frame, got hello");
}

std::string encode_wire_frame(const LandmarkFrame& frame) {
  json pts = json::array();
  for (const auto& [idx, p] : frame.points) pts.push_back({idx, p.x, p.y});
  return json{{"t_us", frame.timestamp_us}, {"pts", pts}}.dump();
}

std::string encode_wire_hello() { return json{{"proto", kWireProtocolVersion}}.dump(); }

std::optional<LandmarkFrame> WireDecoder::feed(std::string_view line) {
  if (line.find_first_not_of(" \t\r") == std::string_view::npos) return std::nullopt;
  try {
    auto msg = parse_wire_line(line);
    auto* f = std::get_if<LandmarkFrame>(&msg);
    if (!f) return std::nullopt;
    if (last_t_ && f->timestamp_us <= *last_t_) {
      throw MalformedFrame("timestamp " + std::to_string(f->timestamp_us) + " does not increase");
    }
    last_t_ = f->timestamp_us;
    ++frames_;
    return std::move(*f);
  } catch (const MalformedFrame& e) {
    ++malformed_;
    last_error_ = e.what();
    return std::nullopt;
  }
}

void LineSplitter::push(std::string_view bytes,
                        const std::function<void(std::string_view, bool)>& on_line) {
  while (!bytes.empty()) {
    const auto nl = bytes.find('\n');
    const auto chunk = bytes.substr(0, nl);
    if (!overflow_) {
      if (buf_.size() + chunk.size() > max_line_) {
        overflow_ = true;
        buf_.clear();
      } else {
        buf_.append(chunk);
      }
    }
    if (nl == std::string_view::npos) return;
    if (overflow_) {
      on_line({}, true);
    } else {
      std::string_view line(buf_);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      on_line(line, false);
    }
    buf_.clear();
    overflow_ = false;
    bytes.remove_prefix(nl + 1);
  }
}

void LineSplitter::finish(const std::function<void(std::string_view, bool)>& on_line) {
  if (overflow_) {
    on_line({}, true);
  } else if (!buf_.empty()) {
    on_line(buf_, false);
  }
  buf_.clear();
  overflow_ = false;
}

void read_recording(std::istream& in, const std::function<void(const RecordedFrame&)>& sink) {
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::int64_t> last_t;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    WireMessage msg;
    try {
      msg = parse_wire_line(line);
    } catch (const MalformedFrame& e) {
      throw CorruptRecording(lineno, e.what());
    }
    auto* f = std::get_if<LandmarkFrame>(&msg);
    if (!f) continue;
    if (last_t && f->timestamp_us <= *last_t) {
      throw CorruptRecording(lineno, "timestamps must strictly increase");
    }
    last_t = f->timestamp_us;
    sink(RecordedFrame{std::move(*f), line});
  }
}

std::vector<RecordedFrame> load_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open recording " + path.string());
  std::vector<RecordedFrame> out;
  read_recording(in, [&](const RecordedFrame& f) { out.push_back(f); });
  return out;
}

Recorder::Recorder(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot write recording " + path.string());
}

bool Recorder::write_line(std::string_view line) {
  const auto bad_before = decoder_.malformed();
  const auto frame = decoder_.feed(line);
  if (decoder_.malformed() != bad_before) {
    ++stats_.malformed;
    return false;
  }
  if (line.find_first_not_of(" \t\r") == std::string_view::npos) return false;
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.put('\n');
  if (!out_) throw IoError("failed writing recording");
  if (frame) ++stats_.frames;
  return frame.has_value();
}

void Recorder::flush() { out_.flush(); }

RecordStats record(std::istream& in, const std::filesystem::path& path) {
  Recorder rec(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    rec.write_line(line);
  }
  rec.flush();
  return rec.stats();
}

std::size_t replay(const std::filesystem::path& path, double gap_scale,
                   const std::function<void(const RecordedFrame&)>& sink) {
  if (!(gap_scale >= 0.0) || !std::isfinite(gap_scale)) {
    throw ConfigError("replay speed multiplier must be >= 0");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open recording " + path.string());

  using clock = std::chrono::steady_clock;
  std::optional<std::int64_t> t0;
  clock::time_point start;
  std::size_t count = 0;
  read_recording(in, [&](const RecordedFrame& f) {
    if (!t0) {
      t0 = f.frame.timestamp_us;
      start = clock::now();
    } else if (gap_scale > 0.0) {
      const double offset_us = static_cast<double>(f.frame.timestamp_us - *t0) * gap_scale;
      std::this_thread::sleep_until(
          start + std::chrono::microseconds(static_cast<std::int64_t>(std::llround(offset_us))));
    }
    sink(f);
    ++count;
  });
  return count;
}

}  // namespace gazerace
