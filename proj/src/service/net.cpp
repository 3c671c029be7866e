#include "aesthetics/service/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <memory>

#include "aesthetics/error.hpp"

namespace aesthetics::service {

namespace {

std::string errno_text() { return std::strerror(errno); }

struct AddrInfoDeleter {
  void operator()(addrinfo* p) const { freeaddrinfo(p); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const Endpoint& endpoint, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(endpoint.port);
  const int rc = getaddrinfo(endpoint.host.empty() ? nullptr : endpoint.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw NetworkError("cannot resolve " + endpoint.to_string() + ": " + gai_strerror(rc));
  return std::unique_ptr<addrinfo, AddrInfoDeleter>(res);
}

int wait_for(int fd, short events, std::chrono::milliseconds timeout) {
  pollfd p{fd, events, 0};
  int rc;
  do {
    rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
  } while (rc < 0 && errno == EINTR);
  return rc;
}

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw UsageError("address '" + std::string(text) + "' is not host:port");
  Endpoint e;
  e.host = std::string(text.substr(0, colon));
  const auto port = text.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || ptr != port.data() + port.size() || value > 65535 || port.empty()) {
    throw UsageError("bad port in address '" + std::string(text) + "'");
  }
  e.port = static_cast<std::uint16_t>(value);
  return e;
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Socket Socket::connect(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
  const auto info = resolve(endpoint, false);
  Socket s(::socket(info->ai_family, info->ai_socktype | SOCK_CLOEXEC, info->ai_protocol));
  if (!s.valid()) throw NetworkError("socket: " + errno_text());
  const int flags = ::fcntl(s.fd(), F_GETFL, 0);
  ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
  if (::connect(s.fd(), info->ai_addr, info->ai_addrlen) != 0) {
    if (errno != EINPROGRESS) throw NetworkError("connect to " + endpoint.to_string() + ": " + errno_text());
    const int rc = wait_for(s.fd(), POLLOUT, timeout);
    if (rc == 0) throw NetworkError("connect to " + endpoint.to_string() + " timed out");
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc < 0 || err != 0) {
      throw NetworkError("connect to " + endpoint.to_string() + ": " + std::strerror(rc < 0 ? errno : err));
    }
  }
  ::fcntl(s.fd(), F_SETFL, flags);
  const int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

void Socket::send_all(std::string_view bytes) {
  while (!bytes.empty()) {
    const auto n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw NetworkError("send: " + errno_text());
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

bool Socket::wait_readable(std::chrono::milliseconds timeout) {
  const int rc = wait_for(fd_, POLLIN, timeout);
  if (rc < 0) throw NetworkError("poll: " + errno_text());
  return rc > 0;
}

std::string Socket::receive_some(std::chrono::milliseconds timeout) {
  const int rc = wait_for(fd_, POLLIN, timeout);
  if (rc == 0) throw NetworkError("receive timed out");
  if (rc < 0) throw NetworkError("poll: " + errno_text());
  char buf[65536];
  ssize_t n;
  do {
    n = ::recv(fd_, buf, sizeof buf, 0);
  } while (n < 0 && errno == EINTR);
  if (n < 0) throw NetworkError("recv: " + errno_text());
  return std::string(buf, static_cast<std::size_t>(n));
}

Listener::Listener(const Endpoint& endpoint) {
  const auto info = resolve(endpoint, true);
  fd_ = ::socket(info->ai_family, info->ai_socktype | SOCK_CLOEXEC, info->ai_protocol);
  if (fd_ < 0) throw NetworkError("socket: " + errno_text());
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd_, info->ai_addr, info->ai_addrlen) != 0) {
    const auto msg = "bind " + endpoint.to_string() + ": " + errno_text();
    close();
    throw NetworkError(msg);
  }
  if (::listen(fd_, 64) != 0) {
    const auto msg = "listen: " + errno_text();
    close();
    throw NetworkError(msg);
  }
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Listener::~Listener() { close(); }

void Listener::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

Socket Listener::accept(std::chrono::milliseconds timeout) {
  if (fd_ < 0) return Socket();
  if (wait_for(fd_, POLLIN, timeout) <= 0) return Socket();
  const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) return Socket();
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return Socket(fd);
}

}  // namespace aesthetics::service
