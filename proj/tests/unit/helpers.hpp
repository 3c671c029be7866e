#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "aesthetics/imaging.hpp"
#include "aesthetics/tensor.hpp"

namespace test_support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("aesthetics_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline aesthetics::Tensor random_tensor(const aesthetics::Shape& shape, std::uint64_t seed, float scale = 1.0f) {
  aesthetics::Tensor t(shape);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-scale, scale);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

inline aesthetics::imaging::Image random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  aesthetics::imaging::Image img(w, h);
  std::mt19937_64 rng(seed);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

}  // namespace test_support
