#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "aesthetics/error.hpp"
#include "aesthetics/nn/weights_io.hpp"
#include "aesthetics/service/net.hpp"
#include "aesthetics/service/protocol.hpp"

namespace aesthetics::service {

// decode PPM -> resize to the network input -> subtract the stored mean ->
// infer -> p1. Throws DecodeError for payloads that are not a valid PPM.
double score_image(const nn::LoadedModel& model, std::string_view image_bytes);

struct BackendOptions {
  std::size_t max_payload = kDefaultMaxPayload;
};

// Framed-protocol inference server. One acceptor thread plus one worker per
// connection; the model is shared read-only.
class BackendServer {
 public:
  BackendServer(std::shared_ptr<const nn::LoadedModel> model, const Endpoint& bind, BackendOptions options = {});
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  std::uint16_t port() const { return listener_.port(); }

  void start();
  // Blocks until stop() is called from another thread.
  void run();
  void stop();

 private:
  void accept_loop();
  void serve_connection(Socket& socket);
  void reap_finished();
  Frame handle(const Frame& request) const;

  std::shared_ptr<const nn::LoadedModel> model_;
  BackendOptions options_;
  Listener listener_;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  struct Worker {
    std::thread thread;
    std::shared_ptr<Socket> socket;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::list<Worker> workers_;
};

inline constexpr std::chrono::milliseconds kDefaultTimeout{2000};

// One connection per call; every failure to obtain a reply in time is a
// NetworkError, and an error frame from the backend becomes a BackendError.
class BackendClient {
 public:
  explicit BackendClient(Endpoint backend, std::chrono::milliseconds timeout = kDefaultTimeout)
      : backend_(std::move(backend)), timeout_(timeout) {}

  ScoreReply score(std::string_view image_bytes, std::uint64_t request_id = 1) const;
  bool reachable() const;

 private:
  Endpoint backend_;
  std::chrono::milliseconds timeout_;
};

class BackendError : public Error {
 public:
  explicit BackendError(ErrorReply reply)
      : Error(Category::kData, reply.code + ": " + reply.message), reply_(std::move(reply)) {}
  const ErrorReply& reply() const { return reply_; }

 private:
  ErrorReply reply_;
};

// Reads frames from `socket` until one is complete or the deadline passes.
Frame read_frame(Socket& socket, FrameDecoder& decoder, std::chrono::milliseconds timeout);

}  // namespace aesthetics::service
