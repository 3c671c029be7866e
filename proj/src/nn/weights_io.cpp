#include "aesthetics/nn/weights_io.hpp"

#include <zlib.h>

#include <json.hpp>

#include "aesthetics/error.hpp"
#include "aesthetics/util.hpp"

namespace aesthetics::nn {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "AESW";

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

json layer_to_json(const LayerSpec& l) {
  json j;
  j["kind"] = kind_name(l.kind);
  switch (l.kind) {
    case LayerKind::kConv:
      j["out_channels"] = l.out_channels;
      j["kernel"] = l.kernel;
      j["stride"] = l.stride;
      j["pad"] = l.pad;
      break;
    case LayerKind::kMaxPool:
      j["window"] = l.window;
      j["stride"] = l.stride;
      break;
    case LayerKind::kDropout:
      j["rate"] = l.rate;
      break;
    case LayerKind::kFc:
      j["out_features"] = l.out_features;
      break;
    default:
      break;
  }
  j["lr_multiplier"] = l.lr_multiplier;
  return j;
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec l;
  l.kind = kind_from_name(j.at("kind").get<std::string>());
  l.out_channels = j.value("out_channels", std::size_t{0});
  l.kernel = j.value("kernel", std::size_t{0});
  l.window = j.value("window", std::size_t{0});
  l.stride = j.value("stride", std::size_t{1});
  l.pad = j.value("pad", std::size_t{0});
  l.rate = j.value("rate", 0.0);
  l.out_features = j.value("out_features", std::size_t{0});
  l.lr_multiplier = j.value("lr_multiplier", 1.0);
  return l;
}

void append_floats(util::ByteWriter& w, const Tensor& t) {
  w.put(static_cast<std::uint32_t>(t.size()));
  for (float v : t.values()) w.put(v);
}

bool read_floats(util::ByteReader& r, Tensor& t) {
  std::uint32_t n = 0;
  if (!r.get(n) || n != t.size()) return false;
  for (auto& v : t.values()) {
    if (!r.get(v)) return false;
  }
  return true;
}

}  // namespace

std::string spec_to_json(const NetworkSpec& spec) {
  json j;
  j["input_shape"] = spec.input_shape;
  j["input_mean"] = spec.input_mean;
  j["model_id"] = spec.model_id;
  j["layers"] = json::array();
  for (const auto& l : spec.layers) j["layers"].push_back(layer_to_json(l));
  return j.dump();
}

NetworkSpec spec_from_json(std::string_view text) {
  NetworkSpec spec;
  try {
    const auto j = json::parse(text);
    spec.input_shape = j.at("input_shape").get<Shape>();
    if (j.contains("input_mean")) spec.input_mean = j.at("input_mean").get<imaging::ChannelMean>();
    spec.model_id = j.value("model_id", std::string{});
    for (const auto& l : j.at("layers")) spec.layers.push_back(layer_from_json(l));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed network spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string serialize_weights(const NetworkSpec& spec, const Parameters& params) {
  spec.validate();
  check_params(spec, params.values);

  util::ByteWriter payload;
  const auto spec_text = spec_to_json(spec);
  payload.put(static_cast<std::uint32_t>(spec_text.size()));
  payload.put_bytes(spec_text);
  for (const auto& block : params.values) {
    if (block.empty()) continue;
    append_floats(payload, block.weight);
    append_floats(payload, block.bias);
  }

  util::ByteWriter out;
  out.put_bytes(kMagic);
  out.put(kWeightsVersion);
  out.put_bytes(payload.bytes());
  out.put(crc32_of(payload.bytes()));
  return out.take();
}

LoadedModel deserialize_weights(std::string_view bytes) {
  constexpr std::size_t kHeader = 4 + 2;
  constexpr std::size_t kTrailer = 4;
  if (bytes.size() < kHeader + kTrailer) throw LoadError("weights file too short");
  if (bytes.substr(0, 4) != kMagic) throw LoadError("bad magic: not a weights file");

  util::ByteReader header(bytes.substr(4, 2));
  std::uint16_t version = 0;
  header.get(version);
  if (version != kWeightsVersion) throw LoadError("unsupported weights version " + std::to_string(version));

  const auto payload = bytes.substr(kHeader, bytes.size() - kHeader - kTrailer);
  util::ByteReader trailer(bytes.substr(bytes.size() - kTrailer));
  std::uint32_t stored_crc = 0;
  trailer.get(stored_crc);
  if (stored_crc != crc32_of(payload)) throw LoadError("checksum mismatch: weights file is corrupt or truncated");

  util::ByteReader r(payload);
  std::uint32_t spec_len = 0;
  std::string_view spec_text;
  if (!r.get(spec_len) || !r.get_bytes(spec_len, spec_text)) throw LoadError("truncated network spec");

  LoadedModel model;
  try {
    model.spec = spec_from_json(spec_text);
  } catch (const Error& e) {
    throw LoadError(std::string("invalid network spec in weights file: ") + e.what());
  }
  model.params.values = zero_params<float>(model.spec);
  model.params.velocity = zero_params<float>(model.spec);
  for (auto& block : model.params.values) {
    if (block.empty()) continue;
    if (!read_floats(r, block.weight) || !read_floats(r, block.bias)) {
      throw LoadError("parameter arrays do not match the network spec");
    }
  }
  if (r.remaining() != 0) throw LoadError("trailing bytes after parameter arrays");
  return model;
}

void save_weights(const std::filesystem::path& path, const NetworkSpec& spec, const Parameters& params) {
  util::write_file(path, serialize_weights(spec, params));
}

LoadedModel load_weights(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = util::read_file(path);
  } catch (const IoError& e) {
    throw LoadError(e.what());
  }
  return deserialize_weights(bytes);
}

}  // namespace aesthetics::nn
