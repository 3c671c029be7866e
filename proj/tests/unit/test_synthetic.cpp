#include <gtest/gtest.h>

#include <cmath>

#include "aesthetics/dataset.hpp"
#include "aesthetics/synthetic.hpp"
#include "helpers.hpp"

using namespace aesthetics;

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(Synthetic, Deterministic) {
  synthetic::Options o;
  o.n = 20;
  o.image_size = 16;
  const auto a = synthetic::generate(o);
  const auto b = synthetic::generate(o);
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].record, b[i].record);
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].image.width, 16u);
  }
  o.seed = 8;
  EXPECT_NE(synthetic::generate(o)[0].image, a[0].image);
}

TEST(Synthetic, ScoreTracksQuality) {
  synthetic::Options o;
  o.n = 300;
  o.image_size = 8;
  const auto photos = synthetic::generate(o);
  std::vector<dataset::PhotoRecord> recs;
  std::vector<double> q;
  for (const auto& p : photos) {
    recs.push_back(p.record);
    q.push_back(p.quality);
    EXPECT_GE(p.record.n_views, 0);
    EXPECT_LE(p.record.upload_date, o.reference_date);
  }
  std::vector<double> s;
  for (const auto& sp : dataset::score_records(recs, o.reference_date)) s.push_back(sp.score);
  EXPECT_GT(pearson(q, s), 0.8);
}

TEST(Synthetic, WriteCorpusLayout) {
  synthetic::Options o;
  o.n = 5;
  o.image_size = 12;
  test_support::TempDir dir("synth");
  synthetic::write_corpus(dir.path(), synthetic::generate(o));
  const auto recs = dataset::parse_manifest(dir / "manifest.csv");
  ASSERT_EQ(recs.size(), 5u);
  EXPECT_TRUE(std::filesystem::exists(dir / "quality.csv"));
  for (const auto& r : recs) {
    const auto img = imaging::read_ppm((dir.path() / r.image_path).string());
    EXPECT_EQ(img.width, 12u);
  }
}
