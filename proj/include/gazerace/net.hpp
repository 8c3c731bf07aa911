#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gazerace::net {

/// Owning POSIX socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  ~Socket();
  Socket(Socket&& o) noexcept : fd_(o.release()) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept {
    int f = fd_;
    fd_ = -1;
    return f;
  }
  void close() noexcept;
  /// Unblocks pending reads/writes from another thread.
  void shutdown() noexcept;

  /// Writes everything; false when the peer is gone.
  bool send_all(std::string_view data) noexcept;
  /// Waits up to timeout_ms; returns bytes read, 0 on EOF, -1 on error, -2 on timeout.
  long recv_some(char* buf, std::size_t len, int timeout_ms) noexcept;

 private:
  int fd_ = -1;
};

class Listener {
 public:
  /// Binds and listens; port 0 picks an ephemeral port. Throws BindError.
  Listener(const std::string& host, std::uint16_t port);

  std::uint16_t port() const noexcept { return port_; }
  /// nullopt on timeout or after close().
  std::optional<Socket> accept(int timeout_ms);
  void close() noexcept { sock_.close(); }

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

/// Blocking client connect; throws IoError.
Socket connect_to(const std::string& host, std::uint16_t port);

}  // namespace gazerace::net
