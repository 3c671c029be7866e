#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "aesthetics/service/backend.hpp"

namespace httplib {
class Server;
}

namespace aesthetics::service {

// Turns a non-PPM upload into PPM bytes; nullopt means "not convertible".
using ConversionHook = std::function<std::optional<std::string>(std::string_view body, std::string_view content_type)>;

struct WebOptions {
  Endpoint backend;
  std::string static_dir;  // empty: no static files
  std::size_t max_upload = kDefaultMaxPayload;
  std::chrono::milliseconds backend_timeout = kDefaultTimeout;
  ConversionHook convert;
};

// POST /api/score   image body -> {"score": x, "model_id": s}
//                   400 empty or unsupported body, 413 above max_upload,
//                   503 backend unreachable or too slow
// GET  /api/health  {"status":"ok"}
// GET  /, /assets/* files under static_dir
class WebServer {
 public:
  explicit WebServer(WebOptions options);
  ~WebServer();
  WebServer(const WebServer&) = delete;
  WebServer& operator=(const WebServer&) = delete;

  // Binds immediately; returns the bound port (useful with port 0).
  std::uint16_t bind(const Endpoint& endpoint);
  // Logs a warning to stderr when the backend does not answer a connect.
  bool probe_backend() const;

  void start();
  void run();
  void stop();

 private:
  void install_routes();

  WebOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace aesthetics::service
