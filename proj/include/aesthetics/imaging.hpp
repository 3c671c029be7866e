#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aesthetics/tensor.hpp"

namespace aesthetics::imaging {

// Interleaved 8-bit RGB, row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::uint8_t fill = 0);
  Image(std::size_t w, std::size_t h, std::vector<std::uint8_t> samples);

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) { return data[(y * width + x) * 3 + c]; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const { return data[(y * width + x) * 3 + c]; }

  bool operator==(const Image&) const = default;
};

using ChannelMean = std::array<double, 3>;

// Binary P6 with maxval 255. Header comments are accepted on input.
Image decode_ppm(std::string_view bytes);
// Canonical form: "P6\n<w> <h>\n255\n" followed by the raw samples.
std::string encode_ppm(const Image& image);

Image read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image& image);

// Half-pixel-centre bilinear sampling, edges clamped, results rounded half away
// from zero.
Image resize_bilinear(const Image& image, std::size_t out_w, std::size_t out_h);

// (3, H, W) tensor with value = sample / 255 - mean[c].
Tensor to_tensor(const Image& image, const ChannelMean& mean);

// Per-channel mean of sample / 255.
ChannelMean channel_mean(const Image& image);

// Grid with min(N, columns) columns and ceil(N / columns) rows of cell x cell
// thumbnails, filled row-major; unused trailing cells stay black.
Image mosaic(std::span<const Image> images, std::size_t columns, std::size_t cell);

}  // namespace aesthetics::imaging
