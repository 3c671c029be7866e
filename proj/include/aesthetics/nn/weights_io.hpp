#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "aesthetics/nn/network.hpp"

namespace aesthetics::nn {

// Weights file layout (all integers little-endian):
//
//   "AESW" | u16 version (1) | payload | u32 CRC-32 of payload
//
//   payload = u32 spec_len | spec_len bytes of UTF-8 JSON (NetworkSpec incl.
//             input_mean and model_id)
//             then, for every layer with parameters in order:
//             u32 n_weight | n_weight x f32 | u32 n_bias | n_bias x f32
//
// Momentum buffers are not persisted; a loaded model starts with zero
// velocity.
inline constexpr std::uint16_t kWeightsVersion = 1;

struct LoadedModel {
  NetworkSpec spec;
  Parameters params;
};

std::string serialize_weights(const NetworkSpec& spec, const Parameters& params);
LoadedModel deserialize_weights(std::string_view bytes);

void save_weights(const std::filesystem::path& path, const NetworkSpec& spec, const Parameters& params);
LoadedModel load_weights(const std::filesystem::path& path);

std::string spec_to_json(const NetworkSpec& spec);
// Accepts the same layout; missing optional fields take the LayerSpec
// defaults. The result is validated.
NetworkSpec spec_from_json(std::string_view text);

}  // namespace aesthetics::nn
