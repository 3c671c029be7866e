#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace aesthetics::service {

// Frame layout, little-endian:
//   "AESR" | u8 version | u8 kind | u64 request_id | u32 payload_len | payload
inline constexpr std::string_view kMagic = "AESR";
inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 18;
inline constexpr std::size_t kDefaultMaxPayload = std::size_t{8} << 20;

enum class FrameKind : std::uint8_t { kRequest = 0, kReply = 1, kError = 2 };

struct Frame {
  FrameKind kind = FrameKind::kRequest;
  std::uint64_t request_id = 0;
  std::string payload;

  bool operator==(const Frame&) const = default;
};

std::string encode_frame(const Frame& frame);

// Error codes carried in error frames.
namespace codes {
inline constexpr std::string_view kBadMagic = "bad_magic";
inline constexpr std::string_view kBadVersion = "bad_version";
inline constexpr std::string_view kBadKind = "bad_kind";
inline constexpr std::string_view kPayloadTooLarge = "payload_too_large";
inline constexpr std::string_view kDecode = "decode_error";
inline constexpr std::string_view kInternal = "internal";
}  // namespace codes

struct ScoreReply {
  std::uint64_t request_id = 0;
  double score = 0.0;
  std::string model_id;
};

struct ErrorReply {
  std::uint64_t request_id = 0;
  std::string code;
  std::string message;
};

// {"score": x, "model_id": s}
Frame make_reply_frame(const ScoreReply& reply);
// {"code": c, "message": m}
Frame make_error_frame(std::uint64_t request_id, std::string_view code, std::string_view message);

ScoreReply parse_reply(const Frame& frame);
ErrorReply parse_error(const Frame& frame);

// Incremental frame parser for one byte stream. Problems in the stream become
// error events rather than exceptions:
//   - bad magic: one error, then bytes are skipped up to the next "AESR";
//   - bad version or kind: one error, the frame is skipped by its length;
//   - payload above the cap: one error, the payload bytes are discarded.
class FrameDecoder {
 public:
  struct Event {
    std::optional<Frame> frame;
    std::optional<ErrorReply> error;
  };

  explicit FrameDecoder(std::size_t max_payload = kDefaultMaxPayload) : max_payload_(max_payload) {}

  void feed(std::string_view bytes) { buffer_.append(bytes); }
  std::optional<Event> next();

  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::size_t max_payload_;
  std::string buffer_;
  std::uint64_t discard_ = 0;
  bool resyncing_ = false;
};

}  // namespace aesthetics::service
