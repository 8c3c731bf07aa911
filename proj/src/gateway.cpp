#include "gazerace/gateway.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <cstdio>

#include <httplib.h>

#include "gazerace/errors.hpp"
#include "gazerace/formats.hpp"
#include "gazerace/net.hpp"

namespace gazerace {

using nlohmann::json;
using namespace std::chrono_literals;

// ---------------------------------------------------------------------------
// Queues and fan-out

bool DropOldestQueue::push(std::string item) {
  bool kept_all = true;
  {
    std::lock_guard lk(m_);
    if (closed_) return false;
    if (q_.size() >= capacity_) {
      q_.pop_front();
      ++dropped_;
      kept_all = false;
    }
    q_.push_back(std::move(item));
  }
  cv_.notify_one();
  return kept_all;
}

std::optional<std::string> DropOldestQueue::pop(std::chrono::milliseconds timeout) {
  std::unique_lock lk(m_);
  cv_.wait_for(lk, timeout, [&] { return !q_.empty() || closed_; });
  if (q_.empty()) return std::nullopt;
  auto item = std::move(q_.front());
  q_.pop_front();
  return item;
}

void DropOldestQueue::close() {
  {
    std::lock_guard lk(m_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool DropOldestQueue::closed() const {
  std::lock_guard lk(m_);
  return closed_;
}

std::size_t DropOldestQueue::dropped() const {
  std::lock_guard lk(m_);
  return dropped_;
}

std::size_t DropOldestQueue::size() const {
  std::lock_guard lk(m_);
  return q_.size();
}

std::shared_ptr<DropOldestQueue> TelemetryHub::subscribe() {
  auto sub = std::make_shared<DropOldestQueue>(depth_);
  std::lock_guard lk(m_);
  subs_.push_back(sub);
  return sub;
}

void TelemetryHub::unsubscribe(const std::shared_ptr<DropOldestQueue>& sub) {
  sub->close();
  std::lock_guard lk(m_);
  std::erase(subs_, sub);
}

void TelemetryHub::publish(const json& msg) {
  const auto line = msg.dump();
  std::lock_guard lk(m_);
  for (const auto& s : subs_) s->push(line);
  ++published_;
}

void TelemetryHub::close_all() {
  std::lock_guard lk(m_);
  for (const auto& s : subs_) s->close();
  subs_.clear();
}

std::size_t TelemetryHub::subscribers() const {
  std::lock_guard lk(m_);
  return subs_.size();
}

std::string_view to_string(SessionEnd e) noexcept {
  switch (e) {
    case SessionEnd::EndOfStream: return "EndOfStream";
    case SessionEnd::ConnectionLost: return "ConnectionLost";
    case SessionEnd::Shutdown: return "Shutdown";
  }
  return "EndOfStream";
}

std::vector<json> SessionHandler::on_message(const json&) {
  return {{{"type", "error"}, {"message", "this session does not accept control messages"}}};
}

// ---------------------------------------------------------------------------
// Handlers

RaceHandler::RaceHandler(PipelineConfig config, CalibrationProfile profile, RaceTrack track,
                         std::filesystem::path out_dir)
    : config_(std::move(config)),
      profile_(std::move(profile)),
      track_(std::move(track)),
      out_dir_(std::move(out_dir)) {}

std::filesystem::path RaceHandler::session_dir(const std::filesystem::path& out, std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "session-%03zu", index);
  return out / name;
}

void RaceHandler::begin_session(std::size_t index) {
  index_ = index;
  frames_ = 0;
  pipeline_ = std::make_unique<Pipeline>(config_, profile_, track_);
}

void RaceHandler::on_frame(const RecordedFrame& frame) {
  if (!pipeline_) return;
  ++frames_;
  pipeline_->feed(frame.frame);
  const auto& s = pipeline_->session();
  publish(telemetry_message(frame.frame.timestamp_us, pipeline_->current_action(),
                            pipeline_->controller().phase, s.vehicle().state(), s.gates_passed()));
}

void RaceHandler::end_session(SessionEnd how) {
  if (!pipeline_) return;
  SessionSummary summary;
  summary.index = index_;
  summary.end = how;
  summary.frames = frames_;
  summary.result = pipeline_->finish();
  if (how != SessionEnd::EndOfStream) summary.result.finished = false;
  summary.dir = session_dir(out_dir_, index_);

  const auto& s = pipeline_->session();
  save_trajectory(s.trajectory(), summary.dir / "trajectory.jsonl");
  save_commands(s.commands(), summary.dir / "commands.jsonl");
  json result = race_result_to_json(summary.result);
  result["end"] = to_string(how);
  result["frames"] = frames_;
  write_text_file(summary.dir / "result.json", result.dump(2) + "\n");

  publish({{"type", "race_result"}, {"session", index_}, {"result", result}});
  pipeline_.reset();
  std::lock_guard lk(m_);
  summaries_.push_back(std::move(summary));
}

std::vector<SessionSummary> RaceHandler::summaries() const {
  std::lock_guard lk(m_);
  return summaries_;
}

CalibrationHandler::CalibrationHandler(EyeGeometryConfig geometry, CalibrationParams params,
                                       std::filesystem::path profile_out)
    : session_(std::move(geometry), params), profile_out_(std::move(profile_out)) {}

void CalibrationHandler::attach(Publisher p) {
  SessionHandler::attach(std::move(p));
  std::lock_guard lk(m_);
  if (auto prompt = session_.next_prompt()) publish(*prompt);
}

void CalibrationHandler::begin_session(std::size_t) {}

void CalibrationHandler::on_frame(const RecordedFrame& frame) {
  std::lock_guard lk(m_);
  session_.on_frame(frame.frame);
}

void CalibrationHandler::end_session(SessionEnd) {}

std::vector<json> CalibrationHandler::on_message(const json& msg) {
  std::lock_guard lk(m_);
  auto replies = session_.handle_message(msg);
  if (session_.state() == CalibrationSession::State::Succeeded && !done_) {
    save_profile(*session_.profile(), profile_out_);
    replies.push_back({{"type", "profile_saved"}, {"path", profile_out_.string()}});
    done_ = true;
  } else if (session_.state() == CalibrationSession::State::Aborted) {
    done_ = true;
  }
  return replies;
}

std::optional<CalibrationProfile> CalibrationHandler::profile() const {
  std::lock_guard lk(m_);
  return session_.profile();
}

RecordHandler::RecordHandler(std::filesystem::path path) : path_(std::move(path)) {}

void RecordHandler::begin_session(std::size_t) {
  if (done_ || recorder_) return;
  recorder_ = std::make_unique<Recorder>(path_);
  recorder_->write_line(encode_wire_hello());
}

void RecordHandler::on_frame(const RecordedFrame& frame) {
  if (!recorder_ || done_) return;
  if (recorder_->write_line(frame.line)) ++frames_;
}

void RecordHandler::end_session(SessionEnd) {
  if (!recorder_) return;
  recorder_->flush();
  recorder_.reset();
  done_ = true;
}

// ---------------------------------------------------------------------------
// Gateway

namespace {

struct Item {
  enum class Kind { Begin, Frame, End, Message };
  Kind kind = Kind::Frame;
  RecordedFrame frame;
  SessionEnd end = SessionEnd::EndOfStream;
  json message;
};

// Only frames are ever discarded; session markers and control messages are kept.
class ItemQueue {
 public:
  explicit ItemQueue(std::size_t depth) : depth_(depth) {}

  void push(Item item) {
    {
      std::lock_guard lk(m_);
      if (item.kind == Item::Kind::Frame) {
        if (frames_ >= depth_) {
          auto it = std::find_if(q_.begin(), q_.end(),
                                 [](const Item& i) { return i.kind == Item::Kind::Frame; });
          if (it != q_.end()) {
            q_.erase(it);
            --frames_;
            ++dropped_;
          }
        }
        ++frames_;
      }
      q_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  std::optional<Item> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lk(m_);
    cv_.wait_for(lk, timeout, [&] { return !q_.empty(); });
    if (q_.empty()) return std::nullopt;
    Item item = std::move(q_.front());
    q_.pop_front();
    if (item.kind == Item::Kind::Frame) --frames_;
    return item;
  }

  bool empty() const {
    std::lock_guard lk(m_);
    return q_.empty();
  }

  std::size_t dropped() const {
    std::lock_guard lk(m_);
    return dropped_;
  }

 private:
  mutable std::mutex m_;
  std::condition_variable cv_;
  std::deque<Item> q_;
  std::size_t depth_;
  std::size_t frames_ = 0;
  std::size_t dropped_ = 0;
};

constexpr auto kPoll = 50ms;

}  // namespace

struct Gateway::Impl {
  NetworkConfig net;
  std::shared_ptr<SessionHandler> handler;
  TelemetryHub* hub = nullptr;

  std::optional<net::Listener> landmark_listener;
  std::optional<net::Listener> telemetry_listener;
  httplib::Server http;

  ItemQueue queue;
  std::atomic<bool> stopping{false};
  std::atomic<bool> pipeline_exit{false};
  std::atomic<std::size_t> frames{0}, malformed{0}, rejected{0}, sessions_started{0},
      messages{0};
  std::atomic<std::size_t> sessions_completed{0};
  mutable std::mutex done_m;
  mutable std::condition_variable done_cv;

  std::mutex active_m;
  int active_fd = -1;  // for shutdown() on stop
  std::thread reader;
  std::atomic<bool> reader_busy{false};

  std::thread landmark_thread, telemetry_thread, pipeline_thread, http_thread;
  std::mutex subs_m;
  std::vector<std::thread> subscriber_threads;
  std::vector<int> subscriber_fds;

  Impl(NetworkConfig n, std::shared_ptr<SessionHandler> h)
      : net(std::move(n)), handler(std::move(h)), queue(net.queue_depth) {}

  void read_connection(net::Socket sock) {
    const std::size_t index = ++sessions_started;
    queue.push({Item::Kind::Begin, {}, {}, {}});
    (void)index;
    WireDecoder decoder;
    LineSplitter splitter;
    auto on_line = [&](std::string_view line, bool oversized) {
      if (oversized) {
        ++malformed;
        return;
      }
      const auto bad_before = decoder.malformed();
      auto frame = decoder.feed(line);
      if (decoder.malformed() != bad_before) ++malformed;
      if (frame) {
        ++frames;
        queue.push({Item::Kind::Frame, RecordedFrame{std::move(*frame), std::string(line)}, {}, {}});
      }
    };

    SessionEnd how = SessionEnd::EndOfStream;
    char buf[16384];
    for (;;) {
      const long n = sock.recv_some(buf, sizeof buf, static_cast<int>(kPoll.count()));
      if (n == -2) {
        if (stopping) {
          how = SessionEnd::Shutdown;
          break;
        }
        continue;
      }
      if (n < 0) {
        how = stopping ? SessionEnd::Shutdown : SessionEnd::ConnectionLost;
        break;
      }
      if (n == 0) break;
      splitter.push(std::string_view(buf, static_cast<std::size_t>(n)), on_line);
    }
    if (how == SessionEnd::EndOfStream) splitter.finish(on_line);
    {
      std::lock_guard lk(active_m);
      active_fd = -1;
    }
    queue.push({Item::Kind::End, {}, how, {}});
    reader_busy = false;
  }

  void landmark_loop() {
    while (!stopping) {
      auto conn = landmark_listener->accept(static_cast<int>(kPoll.count()));
      if (!conn) continue;
      if (reader_busy || handler->done()) {
        ++rejected;
        conn->send_all(R"({"error":"busy","message":"another landmark stream is already connected"})"
                       "\n");
        continue;
      }
      if (reader.joinable()) reader.join();
      reader_busy = true;
      {
        std::lock_guard lk(active_m);
        active_fd = conn->fd();
      }
      reader = std::thread([this, s = std::move(*conn)]() mutable { read_connection(std::move(s)); });
    }
  }

  void subscriber_loop(net::Socket sock) {
    auto sub = hub->subscribe();
    LineSplitter splitter;
    auto on_line = [&](std::string_view line, bool oversized) {
      if (oversized || line.find_first_not_of(" \t\r") == std::string_view::npos) return;
      json msg = json::parse(line, nullptr, false);
      if (msg.is_discarded()) {
        sock.send_all(R"({"type":"error","message":"not valid JSON"})" "\n");
        return;
      }
      queue.push({Item::Kind::Message, {}, {}, std::move(msg)});
    };
    char buf[4096];
    while (!stopping && !sub->closed()) {
      bool ok = true;
      while (auto line = sub->pop(0ms)) {
        if (!sock.send_all(*line + "\n")) {
          ok = false;
          break;
        }
      }
      if (!ok) break;
      const long n = sock.recv_some(buf, sizeof buf, 10);
      if (n == 0 || n == -1) break;
      if (n > 0) splitter.push(std::string_view(buf, static_cast<std::size_t>(n)), on_line);
    }
    // Flush what is left so shutdown messages reach the subscriber.
    while (auto line = sub->pop(0ms)) {
      if (!sock.send_all(*line + "\n")) break;
    }
    hub->unsubscribe(sub);
  }

  void telemetry_loop() {
    while (!stopping) {
      auto conn = telemetry_listener->accept(static_cast<int>(kPoll.count()));
      if (!conn) continue;
      std::lock_guard lk(subs_m);
      subscriber_fds.push_back(conn->fd());
      subscriber_threads.emplace_back(
          [this, s = std::move(*conn)]() mutable { subscriber_loop(std::move(s)); });
    }
  }

  void pipeline_loop() {
    std::size_t session = 0;
    bool in_session = false;
    for (;;) {
      auto item = queue.pop(kPoll);
      if (!item) {
        if (pipeline_exit) break;
        continue;
      }
      try {
        switch (item->kind) {
          case Item::Kind::Begin:
            in_session = true;
            handler->begin_session(++session);
            break;
          case Item::Kind::Frame:
            if (in_session) handler->on_frame(item->frame);
            break;
          case Item::Kind::End:
            if (in_session) handler->end_session(item->end);
            in_session = false;
            ++sessions_completed;
            done_cv.notify_all();
            break;
          case Item::Kind::Message:
            ++messages;
            for (const auto& reply : handler->on_message(item->message)) hub->publish(reply);
            done_cv.notify_all();
            break;
        }
      } catch (const std::exception& e) {
        std::fprintf(stderr, "gazerace: pipeline error: %s\n", e.what());
      }
    }
    if (in_session) {
      try {
        handler->end_session(SessionEnd::Shutdown);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "gazerace: pipeline error: %s\n", e.what());
      }
      ++sessions_completed;
    }
    done_cv.notify_all();
  }

  void setup_http() {
    http.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      json j = {{"frames", frames.load()},
                {"malformed", malformed.load()},
                {"dropped", queue.dropped()},
                {"sessions_completed", sessions_completed.load()},
                {"subscribers", hub->subscribers()}};
      res.set_content(j.dump(), "application/json");
    });
    http.Get("/telemetry", [this](const httplib::Request&, httplib::Response& res) {
      auto sub = hub->subscribe();
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, sub](std::size_t, httplib::DataSink& sink) {
            if (auto line = sub->pop(200ms)) {
              const std::string event = "data: " + *line + "\n\n";
              if (!sink.write(event.data(), event.size())) return false;
            }
            if (stopping || sub->closed()) {
              sink.done();
              return false;
            }
            return true;
          },
          [this, sub](bool) { hub->unsubscribe(sub); });
    });
    http.Post("/message", [this](const httplib::Request& req, httplib::Response& res) {
      json msg = json::parse(req.body, nullptr, false);
      if (msg.is_discarded()) {
        res.status = 400;
        res.set_content(R"({"error":"not valid JSON"})", "application/json");
        return;
      }
      queue.push({Item::Kind::Message, {}, {}, std::move(msg)});
      res.status = 202;
      res.set_content(R"({"queued":true})", "application/json");
    });
  }
};

Gateway::Gateway(NetworkConfig net, std::shared_ptr<SessionHandler> handler)
    : hub_(net.subscriber_queue_depth) {
  if (!handler) throw ConfigError("gateway needs a session handler");
  impl_ = std::make_unique<Impl>(std::move(net), std::move(handler));
  impl_->hub = &hub_;
}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
  auto& d = *impl_;
  d.landmark_listener.emplace(d.net.host, d.net.landmark_port);
  d.telemetry_listener.emplace(d.net.host, d.net.telemetry_port);
  landmark_port_ = d.landmark_listener->port();
  telemetry_port_ = d.telemetry_listener->port();
  if (d.net.http_port != 0) {
    d.setup_http();
    if (!d.http.bind_to_port(d.net.host, d.net.http_port)) {
      throw BindError("cannot bind http " + d.net.host + ":" + std::to_string(d.net.http_port));
    }
    http_port_ = d.net.http_port;
    d.http_thread = std::thread([&d] { d.http.listen_after_bind(); });
  }
  d.handler->attach([this](const json& m) { hub_.publish(m); });
  d.pipeline_thread = std::thread([&d] { d.pipeline_loop(); });
  d.landmark_thread = std::thread([&d] { d.landmark_loop(); });
  d.telemetry_thread = std::thread([&d] { d.telemetry_loop(); });
}

void Gateway::stop() {
  if (!impl_) return;
  auto& d = *impl_;
  if (d.stopping.exchange(true)) return;

  if (d.landmark_thread.joinable()) d.landmark_thread.join();
  if (d.telemetry_thread.joinable()) d.telemetry_thread.join();
  {
    std::lock_guard lk(d.active_m);
    if (d.active_fd >= 0) ::shutdown(d.active_fd, SHUT_RD);
  }
  if (d.reader.joinable()) d.reader.join();

  // Drain: everything queued before shutdown goes through the handler.
  while (!d.queue.empty() && d.pipeline_thread.joinable()) std::this_thread::sleep_for(5ms);
  d.pipeline_exit = true;
  if (d.pipeline_thread.joinable()) d.pipeline_thread.join();

  if (d.http_thread.joinable()) {
    d.http.stop();
    d.http_thread.join();
  }
  hub_.close_all();
  std::vector<std::thread> subs;
  {
    std::lock_guard lk(d.subs_m);
    for (int fd : d.subscriber_fds) ::shutdown(fd, SHUT_RDWR);
    subs.swap(d.subscriber_threads);
  }
  for (auto& t : subs) t.join();
  d.landmark_listener.reset();
  d.telemetry_listener.reset();
}

GatewayStats Gateway::stats() const {
  const auto& d = *impl_;
  GatewayStats s;
  s.frames = d.frames;
  s.malformed = d.malformed;
  s.dropped = d.queue.dropped();
  s.rejected_connections = d.rejected;
  s.sessions_started = d.sessions_started;
  s.sessions_completed = d.sessions_completed;
  s.messages = d.messages;
  return s;
}

bool Gateway::wait_for_sessions(std::size_t completed, std::chrono::milliseconds timeout) const {
  const auto& d = *impl_;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::unique_lock lk(d.done_m);
  while (d.sessions_completed < completed) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    d.done_cv.wait_for(lk, 20ms);
  }
  return true;
}

void Gateway::run_until(const std::function<bool()>& should_stop) {
  auto& d = *impl_;
  while (!(should_stop && should_stop()) && !d.handler->done()) {
    std::unique_lock lk(d.done_m);
    d.done_cv.wait_for(lk, 100ms);
  }
}

}  // namespace gazerace
