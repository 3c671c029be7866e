#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aesthetics::baselines {

// Row-major float32 matrix, one sample per row.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }

  void append_row(std::span<const float> values);

  bool operator==(const FeatureMatrix&) const = default;
};

// Sidecar format: "AESF" | u32 rows | u32 cols | rows*cols little-endian f32.
std::string encode_features(const FeatureMatrix& m);
FeatureMatrix decode_features(std::string_view bytes);
void write_features(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_features(const std::filesystem::path& path);

}  // namespace aesthetics::baselines
