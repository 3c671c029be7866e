#include "aesthetics/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "aesthetics/util.hpp"

namespace aesthetics::synthetic {

namespace {

class Stream {
 public:
  explicit Stream(std::uint64_t key) : key_(key) {}

  double uniform() { return util::unit_interval(util::mix(key_, counter_++)); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct Rgb {
  double r, g, b;
};

Rgb hsv(double h, double s, double v) {
  h = std::fmod(h, 360.0);
  if (h < 0) h += 360.0;
  s = std::clamp(s, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = v - c;
  Rgb out{0, 0, 0};
  if (h < 60) {
    out = {c, x, 0};
  } else if (h < 120) {
    out = {x, c, 0};
  } else if (h < 180) {
    out = {0, c, x};
  } else if (h < 240) {
    out = {0, x, c};
  } else if (h < 300) {
    out = {x, 0, c};
  } else {
    out = {c, 0, x};
  }
  return {out.r + m, out.g + m, out.b + m};
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::round(v * 255.0), 0.0, 255.0)); }

}  // namespace

imaging::Image render_photo(double quality, std::uint64_t key, std::size_t size) {
  Stream rs(key);
  const double q = std::clamp(quality, 0.0, 1.0);
  const double s = static_cast<double>(size);

  const double bg_hue = rs.uniform(0.0, 360.0);
  const double subject_hue = bg_hue + rs.uniform(120.0, 240.0);
  const double saturation = std::clamp(0.08 + 0.85 * q + rs.uniform(-0.05, 0.05), 0.0, 1.0);
  const double contrast = 0.08 + 0.8 * q;
  // Poor frames drift towards under- or over-exposure.
  const double exposure = 0.5 + (1.0 - q) * rs.uniform(-0.3, 0.3);
  const double bg_value = std::clamp(exposure - contrast / 2.0, 0.02, 0.98);
  const double subject_value = std::clamp(exposure + contrast / 2.0, 0.02, 0.98);
  const double radius = s * (0.12 + 0.22 * q) * rs.uniform(0.85, 1.15);
  const double cx = s * rs.uniform(0.3, 0.7);
  const double cy = s * rs.uniform(0.3, 0.7);
  const double softness = 0.4 + (1.0 - q) * s * 0.25;  // edge ramp width in pixels
  const double gradient = rs.uniform(-1.0, 1.0) * 0.1 * q;
  const double noise = 0.015 + 0.05 * (1.0 - q);
  const bool square = rs.uniform() < 0.5;

  imaging::Image img(size, size);
  Stream pixel_noise(util::mix(key, 0x9157));
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - cx;
      const double dy = static_cast<double>(y) + 0.5 - cy;
      const double dist = square ? std::max(std::abs(dx), std::abs(dy)) : std::hypot(dx, dy);
      const double inside = std::clamp(0.5 - (dist - radius) / softness, 0.0, 1.0);
      const double bg_v = bg_value + gradient * (static_cast<double>(y) / s - 0.5);
      const Rgb bg = hsv(bg_hue, saturation, bg_v);
      const Rgb fg = hsv(subject_hue, saturation, subject_value);
      const double n = noise * pixel_noise.normal();
      img.at(x, y, 0) = to_byte(bg.r + (fg.r - bg.r) * inside + n);
      img.at(x, y, 1) = to_byte(bg.g + (fg.g - bg.g) * inside + n);
      img.at(x, y, 2) = to_byte(bg.b + (fg.b - bg.b) * inside + n);
    }
  }
  return img;
}

std::vector<Photo> generate(const Options& options) {
  std::vector<Photo> photos;
  photos.reserve(options.n);
  const std::chrono::sys_days reference{options.reference_date};
  for (std::size_t i = 0; i < options.n; ++i) {
    const std::uint64_t key = util::mix(options.seed, i);
    Stream rs(util::mix(key, 0x5eed));
    Photo p;
    p.quality = rs.uniform();
    char id[32];
    std::snprintf(id, sizeof id, "p%05zu", i + 1);
    p.record.photo_id = id;
    p.record.image_path = "images/" + p.record.photo_id + ".ppm";
    const auto n_days = static_cast<std::int64_t>(30 + rs.uniform() * 1470.0);
    p.record.upload_date = dataset::Date{reference - std::chrono::days{n_days}};
    const double log_rate = 1.0 + 9.0 * p.quality + 0.7 * rs.normal();
    const double views = std::exp2(log_rate) * static_cast<double>(n_days + 1) - 1.0;
    p.record.n_views = static_cast<std::int64_t>(std::max(0.0, std::round(views)));
    p.image = render_photo(p.quality, util::mix(key, 0x1a6e), options.image_size);
    photos.push_back(std::move(p));
  }
  return photos;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<Photo>& photos) {
  std::vector<dataset::PhotoRecord> records;
  std::string quality = "photo_id,quality\n";
  for (const auto& p : photos) {
    records.push_back(p.record);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", p.quality);
    quality += p.record.photo_id + "," + buf + "\n";
    imaging::write_ppm((dir / p.record.image_path).string(), p.image);
  }
  dataset::write_manifest(dir / "manifest.csv", records);
  util::write_file(dir / "quality.csv", quality);
}

}  // namespace aesthetics::synthetic
