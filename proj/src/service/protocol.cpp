#include "aesthetics/service/protocol.hpp"

#include <algorithm>

#include <json.hpp>

#include "aesthetics/error.hpp"
#include "aesthetics/util.hpp"

namespace aesthetics::service {

std::string encode_frame(const Frame& frame) {
  if (frame.payload.size() > 0xffffffffu) throw DomainError("frame payload exceeds 4 GiB");
  util::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint8_t>(kProtocolVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(frame.kind));
  w.put<std::uint64_t>(frame.request_id);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(frame.payload.size()));
  w.put_bytes(frame.payload);
  return w.take();
}

Frame make_reply_frame(const ScoreReply& reply) {
  nlohmann::json j;
  j["score"] = reply.score;
  j["model_id"] = reply.model_id;
  return {FrameKind::kReply, reply.request_id, j.dump()};
}

Frame make_error_frame(std::uint64_t request_id, std::string_view code, std::string_view message) {
  nlohmann::json j;
  j["code"] = code;
  j["message"] = message;
  return {FrameKind::kError, request_id, j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace)};
}

ScoreReply parse_reply(const Frame& frame) {
  if (frame.kind != FrameKind::kReply) throw ValidationError("expected a reply frame");
  try {
    const auto j = nlohmann::json::parse(frame.payload);
    return {frame.request_id, j.at("score").get<double>(), j.at("model_id").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed reply payload: ") + e.what());
  }
}

ErrorReply parse_error(const Frame& frame) {
  if (frame.kind != FrameKind::kError) throw ValidationError("expected an error frame");
  try {
    const auto j = nlohmann::json::parse(frame.payload);
    return {frame.request_id, j.at("code").get<std::string>(), j.at("message").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed error payload: ") + e.what());
  }
}

std::optional<FrameDecoder::Event> FrameDecoder::next() {
  while (true) {
    if (discard_ > 0) {
      const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(discard_, buffer_.size()));
      buffer_.erase(0, n);
      discard_ -= n;
      if (discard_ > 0) return std::nullopt;
    }
    if (resyncing_) {
      const auto pos = buffer_.find(kMagic);
      if (pos == std::string::npos) {
        // Keep a tail that could be the start of a split magic.
        const std::size_t keep = std::min(buffer_.size(), kMagic.size() - 1);
        buffer_.erase(0, buffer_.size() - keep);
        return std::nullopt;
      }
      buffer_.erase(0, pos);
      resyncing_ = false;
    }

    const std::size_t have = std::min(buffer_.size(), kMagic.size());
    if (buffer_.compare(0, have, kMagic.substr(0, have)) != 0) {
      resyncing_ = true;
      buffer_.erase(0, 1);
      return Event{std::nullopt, ErrorReply{0, std::string(codes::kBadMagic), "frame does not start with AESR"}};
    }
    if (buffer_.size() < kHeaderSize) return std::nullopt;

    util::ByteReader r(std::string_view(buffer_).substr(kMagic.size(), kHeaderSize - kMagic.size()));
    std::uint8_t version = 0, kind = 0;
    std::uint64_t id = 0;
    std::uint32_t len = 0;
    r.get(version);
    r.get(kind);
    r.get(id);
    r.get(len);

    if (len > max_payload_) {
      buffer_.erase(0, kHeaderSize);
      discard_ = len;
      return Event{std::nullopt, ErrorReply{id, std::string(codes::kPayloadTooLarge),
                                            "payload of " + std::to_string(len) + " bytes exceeds the " +
                                                std::to_string(max_payload_) + " byte limit"}};
    }
    if (version != kProtocolVersion) {
      buffer_.erase(0, kHeaderSize);
      discard_ = len;
      return Event{std::nullopt, ErrorReply{id, std::string(codes::kBadVersion),
                                            "unsupported protocol version " + std::to_string(version)}};
    }
    if (kind > static_cast<std::uint8_t>(FrameKind::kError)) {
      buffer_.erase(0, kHeaderSize);
      discard_ = len;
      return Event{std::nullopt, ErrorReply{id, std::string(codes::kBadKind),
                                            "unknown frame kind " + std::to_string(kind)}};
    }
    if (buffer_.size() < kHeaderSize + len) return std::nullopt;
    Frame f{static_cast<FrameKind>(kind), id, buffer_.substr(kHeaderSize, len)};
    buffer_.erase(0, kHeaderSize + len);
    return Event{std::move(f), std::nullopt};
  }
}

}  // namespace aesthetics::service
