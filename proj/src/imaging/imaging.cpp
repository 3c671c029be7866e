#include "aesthetics/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "aesthetics/error.hpp"
#include "aesthetics/util.hpp"

namespace aesthetics::imaging {

Image::Image(std::size_t w, std::size_t h, std::uint8_t fill) : width(w), height(h), data(w * h * 3, fill) {
  if (w == 0 || h == 0) throw ShapeError("image dimensions must be at least 1x1");
}

Image::Image(std::size_t w, std::size_t h, std::vector<std::uint8_t> samples)
    : width(w), height(h), data(std::move(samples)) {
  if (w == 0 || h == 0) throw ShapeError("image dimensions must be at least 1x1");
  if (data.size() != w * h * 3) throw ShapeError("sample count does not match image dimensions");
}

namespace {

class HeaderScanner {
 public:
  explicit HeaderScanner(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::size_t read_number(const char* what) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (std::size_t{1} << 32)) throw DecodeError(std::string("PPM ") + what + " is too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw DecodeError(std::string("PPM header: missing ") + what);
    return value;
  }

  std::size_t pos_ = 0;
  std::string_view bytes_;
};

}  // namespace

Image decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw DecodeError("not a binary PPM (missing P6 magic)");
  HeaderScanner scan(bytes);
  scan.pos_ = 2;
  if (scan.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[scan.pos_]))) {
    throw DecodeError("PPM header: expected whitespace after magic");
  }
  const auto width = scan.read_number("width");
  const auto height = scan.read_number("height");
  const auto maxval = scan.read_number("maxval");
  if (width == 0 || height == 0) throw DecodeError("PPM dimensions must be positive");
  if (maxval != 255) throw DecodeError("unsupported PPM maxval " + std::to_string(maxval) + " (only 255)");
  if (scan.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[scan.pos_]))) {
    throw DecodeError("PPM header: expected single whitespace before samples");
  }
  ++scan.pos_;

  const std::size_t expected = width * height * 3;
  const std::size_t available = bytes.size() - scan.pos_;
  if (available < expected) {
    throw DecodeError("truncated PPM payload: expected " + std::to_string(expected) + " bytes, found " +
                      std::to_string(available));
  }
  const auto* first = reinterpret_cast<const std::uint8_t*>(bytes.data() + scan.pos_);
  return Image(width, height, std::vector<std::uint8_t>(first, first + expected));
}

std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + ' ' + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.data.data()), image.data.size());
  return out;
}

Image read_ppm(const std::string& path) { return decode_ppm(util::read_file(path)); }

void write_ppm(const std::string& path, const Image& image) { util::write_file(path, encode_ppm(image)); }

Image resize_bilinear(const Image& image, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) throw ShapeError("resize target must be at least 1x1");
  if (out_w == image.width && out_h == image.height) return image;

  struct Tap {
    std::size_t i0, i1;
    double frac;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> t(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (std::size_t o = 0; o < out; ++o) {
      double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const auto i0 = static_cast<std::size_t>(std::floor(src));
      t[o] = {i0, std::min(i0 + 1, in - 1), src - static_cast<double>(i0)};
    }
    return t;
  };
  const auto xs = taps(image.width, out_w);
  const auto ys = taps(image.height, out_h);

  Image out(out_w, out_h);
  for (std::size_t y = 0; y < out_h; ++y) {
    const auto& ty = ys[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const auto& tx = xs[x];
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = image.at(tx.i0, ty.i0, c) * (1.0 - tx.frac) + image.at(tx.i1, ty.i0, c) * tx.frac;
        const double bottom = image.at(tx.i0, ty.i1, c) * (1.0 - tx.frac) + image.at(tx.i1, ty.i1, c) * tx.frac;
        const double v = top * (1.0 - ty.frac) + bottom * ty.frac;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return out;
}

Tensor to_tensor(const Image& image, const ChannelMean& mean) {
  Tensor t({3, image.height, image.width});
  const std::size_t plane = image.height * image.width;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      t[c * plane + i] = static_cast<float>(static_cast<double>(image.data[i * 3 + c]) / 255.0 - mean[c]);
    }
  }
  return t;
}

ChannelMean channel_mean(const Image& image) {
  ChannelMean sum{0.0, 0.0, 0.0};
  const std::size_t plane = image.width * image.height;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) sum[c] += image.data[i * 3 + c];
  }
  for (auto& s : sum) s /= 255.0 * static_cast<double>(plane);
  return sum;
}

Image mosaic(std::span<const Image> images, std::size_t columns, std::size_t cell) {
  if (images.empty()) throw DomainError("mosaic needs at least one image");
  if (columns == 0 || cell == 0) throw DomainError("mosaic columns and cell size must be positive");
  const std::size_t cols = std::min(columns, images.size());
  const std::size_t rows = (images.size() + columns - 1) / columns;

  Image out(cols * cell, rows * cell, 0);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto thumb = resize_bilinear(images[i], cell, cell);
    const std::size_t ox = (i % columns) * cell;
    const std::size_t oy = (i / columns) * cell;
    for (std::size_t y = 0; y < cell; ++y) {
      std::copy_n(thumb.data.begin() + static_cast<std::ptrdiff_t>(y * cell * 3), cell * 3,
                  out.data.begin() + static_cast<std::ptrdiff_t>(((oy + y) * out.width + ox) * 3));
    }
  }
  return out;
}

}  // namespace aesthetics::imaging
