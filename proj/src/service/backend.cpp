#include "aesthetics/service/backend.hpp"

#include <algorithm>

#include "aesthetics/error.hpp"
#include "aesthetics/imaging.hpp"

namespace aesthetics::service {

namespace {

constexpr std::chrono::milliseconds kPollInterval{100};

}  // namespace

double score_image(const nn::LoadedModel& model, std::string_view image_bytes) {
  const auto image = imaging::decode_ppm(image_bytes);
  const auto input = nn::preprocess(model.spec, image);
  const auto logits = nn::infer_logits(model.spec, model.params.values, input);
  return nn::softmax_prob(logits).p1;
}

BackendServer::BackendServer(std::shared_ptr<const nn::LoadedModel> model, const Endpoint& bind,
                             BackendOptions options)
    : model_(std::move(model)), options_(options), listener_(bind) {}

BackendServer::~BackendServer() { stop(); }

void BackendServer::start() {
  if (acceptor_.joinable()) return;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void BackendServer::run() {
  start();
  while (!stopping_) std::this_thread::sleep_for(kPollInterval);
}

void BackendServer::stop() {
  stopping_ = true;
  if (acceptor_.joinable() && acceptor_.get_id() != std::this_thread::get_id()) acceptor_.join();
  std::list<Worker> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.socket->shutdown();
  for (auto& w : workers) {
    if (w.thread.joinable()) w.thread.join();
  }
  listener_.close();
}

void BackendServer::reap_finished() {
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (*it->done) {
      it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

void BackendServer::accept_loop() {
  while (!stopping_) {
    auto socket = listener_.accept(kPollInterval);
    std::lock_guard lock(mu_);
    reap_finished();
    if (!socket.valid()) continue;
    if (stopping_) break;
    auto shared = std::make_shared<Socket>(std::move(socket));
    auto done = std::make_shared<std::atomic<bool>>(false);
    std::thread t([this, shared, done] {
      serve_connection(*shared);
      *done = true;
    });
    workers_.push_back({std::move(t), shared, done});
  }
}

Frame BackendServer::handle(const Frame& request) const {
  if (request.kind != FrameKind::kRequest) {
    return make_error_frame(request.request_id, codes::kBadKind, "only request frames are accepted");
  }
  try {
    return make_reply_frame({request.request_id, score_image(*model_, request.payload), model_->spec.model_id});
  } catch (const DecodeError& e) {
    return make_error_frame(request.request_id, codes::kDecode, e.what());
  } catch (const std::exception& e) {
    return make_error_frame(request.request_id, codes::kInternal, e.what());
  }
}

void BackendServer::serve_connection(Socket& socket) {
  FrameDecoder decoder(options_.max_payload);
  try {
    while (!stopping_) {
      if (!socket.wait_readable(kPollInterval)) continue;
      const auto chunk = socket.receive_some(kPollInterval);
      if (chunk.empty()) return;
      decoder.feed(chunk);
      while (auto event = decoder.next()) {
        if (event->error) {
          socket.send_all(encode_frame(make_error_frame(event->error->request_id, event->error->code,
                                                         event->error->message)));
        } else {
          socket.send_all(encode_frame(handle(*event->frame)));
        }
      }
    }
  } catch (const NetworkError&) {
    // Peer reset or went away mid-send.
  }
}

Frame read_frame(Socket& socket, FrameDecoder& decoder, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (auto event = decoder.next()) {
      if (event->frame) return std::move(*event->frame);
      throw NetworkError("malformed frame from peer: " + event->error->message);
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw NetworkError("timed out waiting for a reply");
    const auto chunk = socket.receive_some(left);
    if (chunk.empty()) throw NetworkError("connection closed before a reply arrived");
    decoder.feed(chunk);
  }
}

ScoreReply BackendClient::score(std::string_view image_bytes, std::uint64_t request_id) const {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  auto socket = Socket::connect(backend_, timeout_);
  socket.send_all(encode_frame({FrameKind::kRequest, request_id, std::string(image_bytes)}));
  FrameDecoder decoder(kDefaultMaxPayload);
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
  const auto frame = read_frame(socket, decoder, std::max(left, std::chrono::milliseconds{1}));
  if (frame.request_id != request_id) throw NetworkError("reply request_id does not match the request");
  if (frame.kind == FrameKind::kError) throw BackendError(parse_error(frame));
  return parse_reply(frame);
}

bool BackendClient::reachable() const {
  try {
    Socket::connect(backend_, timeout_);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace aesthetics::service
