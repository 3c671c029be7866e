#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace aesthetics::service {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }
};

// "host:port"; port 0 asks the OS for a free port when binding.
Endpoint parse_endpoint(std::string_view text);

// Owning wrapper around a connected TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  static Socket connect(const Endpoint& endpoint, std::chrono::milliseconds timeout);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  int release() {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close();
  void shutdown();

  void send_all(std::string_view bytes);
  bool wait_readable(std::chrono::milliseconds timeout);
  // Waits up to `timeout` for data; returns "" on orderly close and throws
  // NetworkError on timeout or failure.
  std::string receive_some(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
};

class Listener {
 public:
  explicit Listener(const Endpoint& endpoint);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const { return port_; }
  // Returns an invalid socket if nothing arrived within `timeout`.
  Socket accept(std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace aesthetics::service
