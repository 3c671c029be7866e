#include "aesthetics/baselines/features.hpp"

#include "aesthetics/error.hpp"
#include "aesthetics/util.hpp"

namespace aesthetics::baselines {

void FeatureMatrix::append_row(std::span<const float> values) {
  if (rows == 0 && cols == 0) cols = values.size();
  if (values.size() != cols) {
    throw ShapeError("feature row has " + std::to_string(values.size()) + " values, matrix has " +
                     std::to_string(cols) + " columns");
  }
  data.insert(data.end(), values.begin(), values.end());
  ++rows;
}

std::string encode_features(const FeatureMatrix& m) {
  util::ByteWriter w;
  w.put_bytes("AESF");
  w.put(static_cast<std::uint32_t>(m.rows));
  w.put(static_cast<std::uint32_t>(m.cols));
  for (float v : m.data) w.put(v);
  return w.take();
}

FeatureMatrix decode_features(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "AESF") throw LoadError("not a feature file (bad magic)");
  util::ByteReader r(bytes.substr(4));
  std::uint32_t rows = 0, cols = 0;
  r.get(rows);
  r.get(cols);
  const auto expected = static_cast<std::uint64_t>(rows) * cols * sizeof(float);
  if (r.remaining() != expected) {
    throw LoadError("feature file payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                    std::to_string(expected));
  }
  FeatureMatrix m(rows, cols);
  for (auto& v : m.data) r.get(v);
  return m;
}

void write_features(const std::filesystem::path& path, const FeatureMatrix& m) {
  util::write_file(path, encode_features(m));
}

FeatureMatrix read_features(const std::filesystem::path& path) { return decode_features(util::read_file(path)); }

}  // namespace aesthetics::baselines
