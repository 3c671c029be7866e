#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "aesthetics/dataset.hpp"
#include "aesthetics/imaging.hpp"

namespace aesthetics::synthetic {

// Desk-scale stand-in corpus. Each photo has a hidden quality knob q in [0, 1]
// that drives both its pixels and its view count:
//   pixels: saturation, subject/background contrast, edge sharpness and subject
//           size grow with q; low q tends to flat, washed-out, noisy frames.
//   views:  log2(views per day) = 1 + 9 q + N(0, 0.7^2), so the popularity score
//           tracks q closely.
struct Options {
  std::size_t n = 500;
  std::uint64_t seed = 7;
  std::size_t image_size = 80;
  dataset::Date reference_date{std::chrono::year{2017}, std::chrono::month{6}, std::chrono::day{1}};
};

struct Photo {
  dataset::PhotoRecord record;
  double quality = 0.0;
  imaging::Image image;
};

imaging::Image render_photo(double quality, std::uint64_t key, std::size_t size);

std::vector<Photo> generate(const Options& options);

// Writes manifest.csv, quality.csv (photo_id,quality) and images/<id>.ppm.
void write_corpus(const std::filesystem::path& dir, const std::vector<Photo>& photos);

}  // namespace aesthetics::synthetic
