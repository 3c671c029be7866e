#include "aesthetics/service/web.hpp"

#include <cstdio>

#include <httplib.h>
#include <json.hpp>

#include "aesthetics/error.hpp"

namespace aesthetics::service {

namespace {

void json_error(httplib::Response& res, int status, std::string_view message) {
  nlohmann::json j;
  j["error"] = message;
  res.status = status;
  res.set_content(j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
}

bool looks_like_ppm(std::string_view body) { return body.size() >= 2 && body[0] == 'P' && body[1] == '6'; }

}  // namespace

WebServer::WebServer(WebOptions options) : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

WebServer::~WebServer() { stop(); }

void WebServer::install_routes() {
  auto& svr = *server_;
  svr.set_payload_max_length(options_.max_upload);

  svr.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  svr.Post("/api/score", [this](const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty()) return json_error(res, 400, "empty upload");
    if (req.body.size() > options_.max_upload) return json_error(res, 413, "upload exceeds the size limit");
    std::string ppm;
    if (looks_like_ppm(req.body)) {
      ppm = req.body;
    } else if (options_.convert) {
      auto converted = options_.convert(req.body, req.get_header_value("Content-Type"));
      if (!converted) return json_error(res, 400, "could not convert the upload to PPM");
      ppm = std::move(*converted);
    } else {
      return json_error(res, 400, "unsupported image format; upload a binary PPM (P6)");
    }
    try {
      const auto reply = BackendClient(options_.backend, options_.backend_timeout).score(ppm);
      nlohmann::json j;
      j["score"] = reply.score;
      j["model_id"] = reply.model_id;
      res.set_content(j.dump(), "application/json");
    } catch (const BackendError& e) {
      const bool client_fault = e.reply().code == codes::kDecode || e.reply().code == codes::kPayloadTooLarge;
      json_error(res, e.reply().code == codes::kPayloadTooLarge ? 413 : client_fault ? 400 : 502, e.what());
    } catch (const NetworkError& e) {
      json_error(res, 503, std::string("scoring backend unavailable: ") + e.what());
    } catch (const std::exception& e) {
      json_error(res, 500, e.what());
    }
  });

  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.status == 413) json_error(res, 413, "upload exceeds the size limit");
  });

  if (!options_.static_dir.empty() && !svr.set_mount_point("/", options_.static_dir)) {
    throw IoError("static directory '" + options_.static_dir + "' does not exist");
  }
}

std::uint16_t WebServer::bind(const Endpoint& endpoint) {
  const std::string host = endpoint.host.empty() ? "0.0.0.0" : endpoint.host;
  int port = endpoint.port;
  if (port == 0) {
    port = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    port = -1;
  }
  if (port < 0) throw NetworkError("cannot bind web server to " + endpoint.to_string());
  return static_cast<std::uint16_t>(port);
}

bool WebServer::probe_backend() const {
  const bool ok = BackendClient(options_.backend, options_.backend_timeout).reachable();
  if (!ok) {
    std::fprintf(stderr, "warning: scoring backend %s is not reachable; /api/score will answer 503 until it is\n",
                 options_.backend.to_string().c_str());
  }
  return ok;
}

void WebServer::start() {
  if (thread_.joinable()) return;
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void WebServer::run() { server_->listen_after_bind(); }

void WebServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace aesthetics::service
