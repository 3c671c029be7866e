#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "aesthetics/error.hpp"
#include "aesthetics/synthetic.hpp"
#include "aesthetics/training.hpp"
#include "aesthetics/util.hpp"
#include "helpers.hpp"

using namespace aesthetics;
using namespace aesthetics::training;

namespace {

nn::NetworkSpec tiny_spec() {
  nn::NetworkSpec spec;
  spec.input_shape = {3, 4, 4};
  spec.layers = {nn::LayerSpec::fc(6), nn::LayerSpec::relu(), nn::LayerSpec::dropout(0.5), nn::LayerSpec::fc(2)};
  return spec;
}

// Label 1 samples are brighter on average; easy but not trivially separable.
std::vector<Sample> tiny_samples(std::size_t n, std::uint64_t seed) {
  std::vector<Sample> out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.0f, 0.5f);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.photo_id = "s" + std::to_string(i);
    s.label = static_cast<int>(i % 2);
    s.input = Tensor({3, 4, 4});
    for (std::size_t j = 0; j < s.input.size(); ++j) s.input[j] = noise(rng) + (s.label ? 0.5f : -0.5f);
    out.push_back(std::move(s));
  }
  return out;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.batch_size = 5;
  c.max_iterations = 150;
  c.eval_interval = 50;
  c.base_lr = 0.05;
  c.seed = 3;
  return c;
}

bool params_equal(const nn::ParamSet<float>& a, const nn::ParamSet<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i].weight == b[i].weight) || !(a[i].bias == b[i].bias)) return false;
  }
  return true;
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.max_iterations = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), DomainError);
  c = TrainConfig{};
  c.base_lr = -1;
  EXPECT_THROW(c.validate(), DomainError);
  c = TrainConfig{};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), DomainError);
  c = TrainConfig{};
  c.lr_multipliers[0] = -0.5;
  EXPECT_THROW(c.validate(), DomainError);
  EXPECT_EQ(mode_from_name(mode_name(TrainMode::kFinetune)), TrainMode::kFinetune);
  EXPECT_THROW(mode_from_name("bogus"), DomainError);
}

TEST(Train, RejectsZeroIterationsAndEmptySet) {
  const auto spec = tiny_spec();
  auto cfg = quick_config();
  cfg.max_iterations = 0;
  EXPECT_THROW(train(spec, nn::init_params(spec, 1), tiny_samples(10, 1), {}, cfg), DomainError);
  EXPECT_THROW(train(spec, nn::init_params(spec, 1), {}, {}, quick_config()), DomainError);
}

TEST(Train, LogScheduleAndLearning) {
  const auto spec = tiny_spec();
  auto cfg = quick_config();
  cfg.max_iterations = 120;
  const auto r = train(spec, nn::init_params(spec, 1), tiny_samples(40, 1), tiny_samples(20, 2), cfg);
  ASSERT_EQ(r.log.rows.size(), 3u);
  EXPECT_EQ(r.log.rows[0].iteration, 50u);
  EXPECT_EQ(r.log.rows[1].iteration, 100u);
  EXPECT_EQ(r.log.rows[2].iteration, 120u);
  EXPECT_LT(r.log.rows.back().train_loss, std::log(2.0));
  EXPECT_GE(r.log.rows.back().test_accuracy, 0.8);
}

TEST(Train, NoTestSetGivesNanMetrics) {
  const auto spec = tiny_spec();
  const auto r = train(spec, nn::init_params(spec, 1), tiny_samples(10, 1), {}, quick_config());
  for (const auto& row : r.log.rows) {
    EXPECT_TRUE(std::isnan(row.test_loss));
    EXPECT_TRUE(std::isnan(row.test_accuracy));
    EXPECT_TRUE(std::isfinite(row.train_loss));
  }
}

TEST(Train, SameSeedSameWeights) {
  const auto spec = tiny_spec();
  const auto data = tiny_samples(23, 4);
  const auto a = train(spec, nn::init_params(spec, 1), data, {}, quick_config());
  const auto b = train(spec, nn::init_params(spec, 1), data, {}, quick_config());
  EXPECT_TRUE(params_equal(a.params.values, b.params.values));
  auto other = quick_config();
  other.seed = 4;
  const auto c = train(spec, nn::init_params(spec, 1), data, {}, other);
  EXPECT_FALSE(params_equal(a.params.values, c.params.values));
}

TEST(Train, HookStopsEarly) {
  const auto spec = tiny_spec();
  std::size_t calls = 0;
  const auto r = train(spec, nn::init_params(spec, 1), tiny_samples(10, 1), {}, quick_config(),
                       [&](const LogRow&) { return ++calls == 2; });
  EXPECT_EQ(calls, 2u);
  EXPECT_EQ(r.log.rows.size(), 2u);
  EXPECT_EQ(r.log.rows.back().iteration, 100u);
}

TEST(Train, ZeroMultiplierOverrideFreezesLayer) {
  const auto spec = tiny_spec();
  const auto init = nn::init_params(spec, 1);
  auto cfg = quick_config();
  cfg.lr_multipliers[0] = 0.0;
  const auto r = train(spec, init, tiny_samples(20, 1), {}, cfg);
  EXPECT_EQ(r.params.values[0].weight, init.values[0].weight);
  EXPECT_EQ(r.params.values[0].bias, init.values[0].bias);
  EXPECT_NE(r.params.values[3].weight, init.values[3].weight);
  EXPECT_EQ(r.spec.layers[0].lr_multiplier, 0.0);
  cfg.lr_multipliers[1] = 1.0;
  EXPECT_THROW(train(spec, init, tiny_samples(20, 1), {}, cfg), DomainError);
}

TEST(Finetune, HeadIsReplacedAndMultipliersSet) {
  const auto spec = tiny_spec();
  const auto pretrained = nn::init_params(spec, 8).values;
  auto cfg = quick_config();
  cfg.max_iterations = 1;
  const auto r = finetune(spec, pretrained, tiny_samples(10, 1), {}, cfg);
  EXPECT_DOUBLE_EQ(r.spec.layers[0].lr_multiplier, kFinetuneMultiplier);
  EXPECT_DOUBLE_EQ(r.spec.layers[3].lr_multiplier, 1.0);
}

TEST(Finetune, FrozenTrunkOnlyHeadMoves) {
  const auto spec = tiny_spec();
  const auto pretrained = nn::init_params(spec, 8).values;
  auto cfg = quick_config();
  cfg.lr_multipliers[0] = 0.0;
  const auto r = finetune(spec, pretrained, tiny_samples(20, 1), {}, cfg);
  EXPECT_EQ(r.params.values[0].weight, pretrained[0].weight);
  EXPECT_EQ(r.params.values[0].bias, pretrained[0].bias);
  EXPECT_NE(r.params.values[3].weight, pretrained[3].weight);
}

TEST(Finetune, ShapeMismatchRejected) {
  const auto spec = tiny_spec();
  auto other = spec;
  other.layers[0] = nn::LayerSpec::fc(7);
  const auto wrong = nn::init_params(other, 1).values;
  EXPECT_THROW(finetune(spec, wrong, tiny_samples(10, 1), {}, quick_config()), ShapeError);

  // A differently sized head is fine: it is re-initialised anyway.
  auto pre = nn::init_params(spec, 1).values;
  pre[3] = {};
  EXPECT_NO_THROW(finetune(spec, pre, tiny_samples(10, 1), {}, [] {
    auto c = quick_config();
    c.max_iterations = 1;
    return c;
  }()));
}

TEST(Evaluate, ConstantLogitsGiveHalfAccuracyOnBalancedSet) {
  const auto spec = tiny_spec();
  const auto zeros = nn::zero_params<float>(spec);
  const auto data = tiny_samples(20, 5);
  const auto m = evaluate(spec, zeros, data);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_EQ(m.tp + m.fp, 0u);
  const auto [loss, acc] = loss_and_accuracy(spec, zeros, data);
  EXPECT_NEAR(loss, std::log(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(acc, 0.5);
  EXPECT_THROW(evaluate(spec, zeros, {}), DomainError);
}

TEST(Ranking, OrderMatchesLongDoubleOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<float> dist(-40.0f, 40.0f);
  std::vector<std::string> ids;
  std::vector<std::pair<float, float>> logits;
  for (int i = 0; i < 300; ++i) {
    ids.push_back("id" + std::to_string(1000 + i));
    logits.emplace_back(dist(rng), dist(rng));
  }
  // Force some exact ties.
  logits[5] = logits[6] = {1.0f, 2.0f};
  const auto ranked = rank_logits(ids, logits);
  ASSERT_EQ(ranked.size(), ids.size());
  std::set<std::string> seen;
  for (const auto& r : ranked) seen.insert(r.photo_id);
  EXPECT_EQ(seen.size(), ids.size());

  std::vector<std::size_t> oracle(ids.size());
  std::iota(oracle.begin(), oracle.end(), 0);
  auto p1 = [&](std::size_t i) {
    return 1.0L / (1.0L + std::exp(static_cast<long double>(logits[i].first) - logits[i].second));
  };
  std::sort(oracle.begin(), oracle.end(), [&](std::size_t a, std::size_t b) {
    const long double ma = static_cast<long double>(logits[a].second) - logits[a].first;
    const long double mb = static_cast<long double>(logits[b].second) - logits[b].first;
    if (ma != mb) return ma > mb;
    return ids[a] < ids[b];
  });
  for (std::size_t k = 0; k < ids.size(); ++k) {
    EXPECT_EQ(ranked[k].photo_id, ids[oracle[k]]) << k;
    EXPECT_NEAR(ranked[k].p1, static_cast<double>(p1(oracle[k])), 1e-15);
    if (k) {
      EXPECT_LE(ranked[k].p1, ranked[k - 1].p1);
    }
  }
}

TEST(Ranking, IdenticalImagesTieOnPhotoId) {
  const auto spec = tiny_spec();
  const auto params = nn::init_params(spec, 1).values;
  auto samples = tiny_samples(1, 1);
  std::vector<Sample> same;
  for (const char* id : {"c", "a", "b"}) {
    Sample s = samples[0];
    s.photo_id = id;
    same.push_back(s);
  }
  const auto r = rank_by_aesthetics(spec, params, same);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].photo_id, "a");
  EXPECT_EQ(r[1].photo_id, "b");
  EXPECT_EQ(r[2].photo_id, "c");
  EXPECT_EQ(r[0].p1, r[2].p1);
}

TEST(Ranking, CsvRoundTrip) {
  std::vector<RankedPhoto> r = {{"x", 0.9, 2.2}, {"y", 1.0 / 3.0, -0.69}};
  const auto back = parse_ranking(format_ranking(r));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].photo_id, "x");
  EXPECT_EQ(back[1].p1, 1.0 / 3.0);
  EXPECT_THROW(parse_ranking("id,score\nx,1\n"), ParseError);
}

TEST(LearningCurves, FileLayoutAndRoundTrip) {
  const auto spec = tiny_spec();
  const auto r = train(spec, nn::init_params(spec, 1), tiny_samples(20, 1), tiny_samples(10, 2), quick_config());
  test_support::TempDir dir("curves");
  export_learning_curves(r.log, dir / "curves.csv");
  const auto text = util::read_file(dir / "curves.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
  EXPECT_EQ(text.substr(0, text.find('\n')), "iteration,train_loss,test_loss,test_accuracy");
  EXPECT_EQ(parse_learning_curves(text).rows, r.log.rows);
}

TEST(LearningCurves, MonotoneIterationsEnforced) {
  TrainingLog log;
  log.rows = {{10, 0.5, 0.5, 0.5}, {10, 0.4, 0.4, 0.6}};
  EXPECT_THROW(format_learning_curves(log), ValidationError);
  EXPECT_THROW(format_learning_curves(TrainingLog{}), DomainError);
  EXPECT_THROW(parse_learning_curves("iteration,train_loss,test_loss,test_accuracy\n5,1,1,1\n3,1,1,1\n"), ParseError);
  EXPECT_THROW(parse_learning_curves("iteration,train_loss,test_loss,test_accuracy\n5,1,1\n"), ParseError);
}

TEST(LoadImages, MissingImageNamesPhoto) {
  test_support::TempDir dir("load");
  const auto spec = nn::toy_reference_architecture();
  imaging::write_ppm((dir / "ok.ppm").string(), test_support::random_image(20, 20, 1));
  std::vector<dataset::LabeledRow> rows = {{{"good", 1, {}, "ok.ppm"}, 0.0, 1}};
  const auto imgs = load_images(rows, dir.path(), spec);
  ASSERT_EQ(imgs.size(), 1u);
  EXPECT_EQ(imgs[0].image.width, 16u);
  EXPECT_EQ(imgs[0].label, 1);
  rows.push_back({{"ghost", 1, {}, "nope.ppm"}, 0.0, 0});
  try {
    load_images(rows, dir.path(), spec);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(DatasetMean, AveragesAllPixels) {
  std::vector<LabeledImage> imgs(2);
  imgs[0].image = imaging::Image(2, 2, 0);
  imgs[1].image = imaging::Image(2, 2, 255);
  const auto m = dataset_mean(imgs);
  for (double c : m) EXPECT_DOUBLE_EQ(c, 0.5);
  const auto s = to_samples(imgs, m);
  EXPECT_FLOAT_EQ(s[0].input[0], -0.5f);
  EXPECT_THROW(dataset_mean({}), DomainError);
}

TEST(FeatureTap, DefaultLayerFollowsFirstFcRelu) {
  const auto spec = nn::reference_architecture(32);
  EXPECT_EQ(default_feature_layer(spec), spec.first_fc_index() + 1);
  const auto params = nn::init_params(spec, 1).values;
  std::vector<Sample> samples(3);
  for (std::size_t i = 0; i < 3; ++i) samples[i].input = test_support::random_tensor({3, 32, 32}, i);
  const auto m = extract_feature_matrix(spec, params, samples, default_feature_layer(spec));
  EXPECT_EQ(m.rows, 3u);
  EXPECT_EQ(m.cols, 256u);
}

TEST(HueBucket, PrimaryColours) {
  auto solid = [](std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    imaging::Image img(4, 4);
    for (std::size_t p = 0; p < 16; ++p) {
      img.data[p * 3] = r;
      img.data[p * 3 + 1] = g;
      img.data[p * 3 + 2] = b;
    }
    return img;
  };
  EXPECT_EQ(hue_bucket(solid(255, 0, 0)), 0);    // 0
  EXPECT_EQ(hue_bucket(solid(255, 255, 0)), 0);  // 60
  EXPECT_EQ(hue_bucket(solid(0, 255, 0)), 0);    // 120
  EXPECT_EQ(hue_bucket(solid(0, 255, 255)), 0);  // 180 boundary, atan2 gives +pi
  EXPECT_EQ(hue_bucket(solid(0, 0, 255)), 1);    // 240
  EXPECT_EQ(hue_bucket(solid(255, 0, 255)), 1);  // 300
  EXPECT_EQ(hue_bucket(solid(128, 128, 128)), 0);
}

TEST(HueBucket, SyntheticCorpusIsNotOneSided) {
  synthetic::Options o;
  o.n = 60;
  o.image_size = 24;
  std::size_t ones = 0;
  for (const auto& p : synthetic::generate(o)) ones += static_cast<std::size_t>(hue_bucket(p.image));
  EXPECT_GT(ones, 10u);
  EXPECT_LT(ones, 50u);
}
