// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Oracles below are written independently of the library
// code they check.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aesthetics/baselines/forest.hpp"
#include "aesthetics/baselines/metrics.hpp"
#include "aesthetics/baselines/svm.hpp"
#include "aesthetics/cli.hpp"
#include "aesthetics/dataset.hpp"
#include "aesthetics/error.hpp"
#include "aesthetics/imaging.hpp"
#include "aesthetics/nn/gradient_check.hpp"
#include "aesthetics/nn/network.hpp"
#include "aesthetics/nn/weights_io.hpp"
#include "aesthetics/service/backend.hpp"
#include "aesthetics/service/web.hpp"
#include "aesthetics/simd/kernels.hpp"
#include "aesthetics/synthetic.hpp"
#include "aesthetics/training.hpp"
#include "aesthetics/util.hpp"
#include "../unit/helpers.hpp"

using namespace aesthetics;
using Clock = std::chrono::steady_clock;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------------------
// Shared synthetic corpus: 500 photos, 20% tails labeled, default split.

struct Corpus {
  test_support::TempDir dir{"acceptance"};
  std::vector<synthetic::Photo> photos;
  std::vector<dataset::PhotoRecord> records;
  dataset::LabeledDataset train_part, test_part;
  nn::NetworkSpec spec;
  std::vector<training::LabeledImage> train_images, test_images;
  std::vector<training::Sample> train_set, test_set;

  Corpus() {
    synthetic::Options opt;
    photos = synthetic::generate(opt);
    synthetic::write_corpus(dir.path(), photos);
    records = dataset::parse_manifest(dir / "manifest.csv");
    const auto labeled = dataset::label_by_percentile(dataset::score_records(records, opt.reference_date),
                                                      dataset::kDefaultLabelFraction);
    std::tie(train_part, test_part) = dataset::split_train_test(labeled, dataset::kDefaultTrainFraction, 1);
    spec = nn::reference_architecture(64);
    train_images = training::load_images(dataset::to_rows(train_part), dir.path(), spec);
    test_images = training::load_images(dataset::to_rows(test_part), dir.path(), spec);
    spec.input_mean = training::dataset_mean(train_images);
    train_set = training::to_samples(train_images, spec.input_mean);
    test_set = training::to_samples(test_images, spec.input_mean);
  }
};

training::TrainConfig corpus_config() {
  training::TrainConfig c;
  c.max_iterations = 60;
  c.eval_interval = 10;
  c.batch_size = 50;
  c.seed = 1;
  return c;
}

// ---------------------------------------------------------------------------

Verdict score_formula() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    // Mix of magnitudes: small counts, typical counts, and near-2^40 view counts.
    const int bucket = i % 3;
    const std::int64_t v = static_cast<std::int64_t>(rng() % (bucket == 0 ? 100 : bucket == 1 ? 10'000'000 : (1ULL << 40)));
    const std::int64_t d = static_cast<std::int64_t>(rng() % (bucket == 0 ? 10 : 20000));
    const long double oracle = std::log2(static_cast<long double>(v) + 1.0L) - std::log2(static_cast<long double>(d) + 1.0L);
    worst = std::max(worst, std::abs(dataset::compute_score(v, d) - static_cast<double>(oracle)));
  }
  const bool anchors = dataset::compute_score(0, 0) == 0.0 && dataset::compute_score(7, 3) == 1.0 &&
                       dataset::compute_score(1048575, 0) == 20.0;
  return {worst < 1e-12 && anchors,
          "max abs error " + fmt("%.3g", worst) + " over 1000 cases; anchors " + (anchors ? "exact" : "WRONG")};
}

Verdict labeling() {
  std::mt19937_64 rng(99);
  const auto ref = dataset::parse_date("2017-06-01");
  const auto ref_days = std::chrono::sys_days(ref);
  std::vector<dataset::PhotoRecord> recs;
  for (int i = 0; i < 10000; ++i) {
    dataset::PhotoRecord r;
    r.photo_id = "r" + std::to_string(100000 + (i * 7919) % 10000);
    // Coarse view counts so that ties occur and the id tie-break matters.
    r.n_views = static_cast<std::int64_t>(rng() % 400) * 25;
    r.upload_date = dataset::Date{ref_days - std::chrono::days(static_cast<int>(rng() % 300))};
    r.image_path = r.photo_id + ".ppm";
    recs.push_back(r);
  }
  const auto labeled = dataset::label_by_percentile(dataset::score_records(recs, ref), 0.2);

  // Oracle: own score computation, full sort by (score desc, id asc).
  struct Row {
    std::string id;
    long double score;
  };
  std::vector<Row> rows;
  for (const auto& r : recs) {
    const auto days = (ref_days - std::chrono::sys_days(r.upload_date)).count();
    rows.push_back({r.photo_id, std::log2((static_cast<long double>(r.n_views) + 1) / (static_cast<long double>(days) + 1))});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  std::set<std::string> want_pos, want_neg, got_pos, got_neg;
  for (int i = 0; i < 2000; ++i) {
    want_pos.insert(rows[i].id);
    want_neg.insert(rows[rows.size() - 1 - i].id);
  }
  double min_pos = INFINITY, max_neg = -INFINITY;
  for (const auto& p : labeled.positives) {
    got_pos.insert(p.record.photo_id);
    min_pos = std::min(min_pos, p.score);
  }
  for (const auto& p : labeled.negatives) {
    got_neg.insert(p.record.photo_id);
    max_neg = std::max(max_neg, p.score);
  }
  const bool ok = labeled.positives.size() == 2000 && labeled.negatives.size() == 2000 && min_pos >= max_neg &&
                  got_pos == want_pos && got_neg == want_neg;
  return {ok, std::to_string(labeled.positives.size()) + "/" + std::to_string(labeled.negatives.size()) +
                  ", min pos " + fmt("%.4f", min_pos) + " >= max neg " + fmt("%.4f", max_neg) +
                  ", oracle sets " + (got_pos == want_pos && got_neg == want_neg ? "match" : "DIFFER")};
}

using Coverage = std::set<std::pair<std::size_t, bool>>;

void add_coverage(Coverage& covered, const nn::GradientCheckResult& r) {
  for (const auto& t : r.tensors) {
    if (t.checked > 0) covered.insert({t.layer, t.is_bias});
  }
}

bool all_tensors_covered(const nn::NetworkSpec& spec, const Coverage& covered) {
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!spec.layers[i].has_params()) continue;
    if (!covered.count({i, false}) || !covered.count({i, true})) return false;
  }
  return true;
}

Verdict gradients() {
  const auto t0 = Clock::now();
  double fc_worst = 0.0, toy_worst = 0.0;
  bool covered = true;

  std::vector<nn::NetworkSpec> fc_nets(2);
  fc_nets[0].input_shape = {3, 3, 3};
  fc_nets[0].layers = {nn::LayerSpec::fc(7), nn::LayerSpec::fc(2)};
  fc_nets[1].input_shape = {3, 4, 4};
  fc_nets[1].layers = {nn::LayerSpec::fc(9), nn::LayerSpec::relu(), nn::LayerSpec::fc(5), nn::LayerSpec::relu(),
                       nn::LayerSpec::fc(2)};
  for (std::size_t n = 0; n < fc_nets.size(); ++n) {
    const auto params = nn::init_params(fc_nets[n], 10 + n);
    for (int label : {0, 1}) {
      const auto x = test_support::random_tensor(fc_nets[n].input_shape, 20 + n * 2 + label);
      const auto r = nn::gradient_check(fc_nets[n], params.values, x, label);
      fc_worst = std::max(fc_worst, r.max_relative_error);
      Coverage c;
      add_coverage(c, r);
      covered &= all_tensors_covered(fc_nets[n], c);
    }
  }

  // A dropout mask can zero every input of a layer, leaving its biases on a
  // ReLU kink for that run; coverage is counted over all toy runs.
  const auto toy = nn::toy_reference_architecture();
  Coverage toy_covered;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto params = nn::init_params(toy, seed);
    nn::GradientCheckOptions opts;
    opts.dropout_seed = seed * 17;
    const auto r = nn::gradient_check(toy, params.values, test_support::random_tensor({3, 16, 16}, seed + 40),
                                      static_cast<int>(seed % 2), opts);
    toy_worst = std::max(toy_worst, r.max_relative_error);
    add_coverage(toy_covered, r);
  }
  covered &= all_tensors_covered(toy, toy_covered);

  nn::GradientCheckOptions broken;
  broken.analytic = [](const nn::NetworkSpec& s, const nn::ParamSet<float>& p, const Tensor& x, int label,
                       std::uint64_t seed) {
    auto g = nn::analytic_gradient(s, p, x, label, seed, nn::Precision::kFloat64);
    // Drop the bias gradient of the first conv layer.
    for (auto& block : g) {
      if (!block.empty()) {
        block.bias.fill(0.0);
        break;
      }
    }
    return g;
  };
  const auto neg = nn::gradient_check(toy, nn::init_params(toy, 1).values,
                                      test_support::random_tensor({3, 16, 16}, 41), 1, broken);
  const double elapsed = seconds_since(t0);
  const bool ok = fc_worst < 1e-6 && toy_worst < 1e-3 && covered && neg.max_relative_error > 1e-1 && elapsed < 60;
  return {ok, "fc-only " + fmt("%.2e", fc_worst) + " (<1e-6), toy 5-conv/3-fc " + fmt("%.2e", toy_worst) +
                  " (<1e-3), all tensors " + (covered ? "covered" : "NOT covered") + ", corrupted backward " +
                  fmt("%.2f", neg.max_relative_error) + " (>0.1), " + fmt("%.1f", elapsed) + " s (<60)"};
}

Verdict loss_anchors() {
  double worst_ln2 = 0.0;
  for (double z : {-1e4, -3.5, 0.0, 0.25, 7.0, 1e4}) {
    for (int label : {0, 1}) worst_ln2 = std::max(worst_ln2, std::abs(nn::cross_entropy(z, z, label) - std::numbers::ln2));
  }
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  double worst_sum = 0.0;
  bool finite = true;
  for (int i = 0; i < 10000; ++i) {
    double z0 = dist(rng), z1 = dist(rng);
    if (i % 10 == 0) z0 = (i % 20 == 0) ? 1e4 : -1e4;
    if (i % 15 == 0) z1 = (i % 30 == 0) ? -1e4 : 1e4;
    const auto p = nn::softmax_prob(z0, z1);
    finite &= std::isfinite(p.p0) && std::isfinite(p.p1) && std::isfinite(nn::cross_entropy(z0, z1, 0)) &&
              std::isfinite(nn::cross_entropy(z0, z1, 1));
    worst_sum = std::max(worst_sum, std::abs(p.p0 + p.p1 - 1.0));
  }
  return {worst_ln2 < 1e-9 && worst_sum < 1e-9 && finite,
          "uniform-logit loss off ln2 by " + fmt("%.2e", worst_ln2) + ", max |p0+p1-1| " + fmt("%.2e", worst_sum) +
              " over 10k logits incl. +/-1e4, " + (finite ? "no overflow" : "NON-FINITE values")};
}

Verdict finetune_mechanism() {
  // 1000 steps with three layers frozen.
  const auto spec = nn::toy_reference_architecture();
  const auto init = nn::init_params(spec, 5);
  std::vector<training::Sample> data;
  for (int i = 0; i < 8; ++i) data.push_back({"s" + std::to_string(i), test_support::random_tensor({3, 16, 16}, 200 + i), i % 2});
  training::TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.max_iterations = 1000;
  cfg.eval_interval = 1000;
  const std::vector<std::size_t> frozen = {0, 3, spec.first_fc_index()};
  for (auto l : frozen) cfg.lr_multipliers[l] = 0.0;
  const auto r = training::train(spec, init, data, {}, cfg);
  bool frozen_ok = true, others_moved = true;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (init.values[i].empty()) continue;
    const auto& a = init.values[i];
    const auto& b = r.params.values[i];
    const bool same = std::memcmp(a.weight.data(), b.weight.data(), a.weight.size() * sizeof(float)) == 0 &&
                      std::memcmp(a.bias.data(), b.bias.data(), a.bias.size() * sizeof(float)) == 0;
    if (std::find(frozen.begin(), frozen.end(), i) != frozen.end()) {
      frozen_ok &= same;
    } else {
      others_moved &= !same;
    }
  }

  // One step, momentum 0: w' = w - (lr * multiplier) * g, each operation rounded to float.
  auto one = nn::toy_reference_architecture();
  for (std::size_t i = 0; i < one.layers.size(); ++i) {
    if (one.layers[i].has_params()) one.layers[i].lr_multiplier = (i == one.last_fc_index()) ? 1.0 : 0.1;
  }
  auto params = nn::init_params(one, 6);
  const auto before = params.values;
  auto grads = nn::zero_params<float>(one);
  std::uint64_t k = 300;
  for (auto& g : grads) {
    if (g.empty()) continue;
    g.weight = test_support::random_tensor(g.weight.shape(), k++);
    g.bias = test_support::random_tensor(g.bias.shape(), k++);
  }
  const double lr = 0.01;
  nn::sgd_step(params, grads, lr, 0.0, one);
  std::size_t mismatches = 0, total = 0;
  for (std::size_t i = 0; i < one.layers.size(); ++i) {
    if (before[i].empty()) continue;
    const float step = static_cast<float>(lr * one.layers[i].lr_multiplier);
    auto check = [&](const Tensor& w0, const Tensor& g, const Tensor& w1) {
      for (std::size_t j = 0; j < w0.size(); ++j) {
        const float delta = step * g[j];
        const float want = w0[j] - delta;
        mismatches += std::memcmp(&want, &w1[j], sizeof(float)) != 0;
        ++total;
      }
    };
    check(before[i].weight, grads[i].weight, params.values[i].weight);
    check(before[i].bias, grads[i].bias, params.values[i].bias);
  }
  return {frozen_ok && others_moved && mismatches == 0,
          std::string("frozen layers ") + (frozen_ok ? "bit-identical" : "CHANGED") + " after 1000 steps, other layers " +
              (others_moved ? "updated" : "NOT updated") + "; one-step update exact on " +
              std::to_string(total - mismatches) + "/" + std::to_string(total) + " entries"};
}

struct TrainabilityOutcome {
  Verdict verdict;
  training::TrainResult scratch;
};

double accuracy_of(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                   const std::vector<training::Sample>& samples) {
  std::size_t correct = 0;
  const auto pred = training::predict(spec, params, samples);
  for (std::size_t i = 0; i < samples.size(); ++i) correct += pred[i] == samples[i].label;
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

TrainabilityOutcome trainability(const Corpus& corpus) {
  // Overfit: 25 + 25 labeled photos at 32 px, one epoch per iteration.
  auto small = nn::reference_architecture(32);
  std::vector<dataset::LabeledRow> rows;
  const auto all = dataset::to_rows(corpus.train_part);
  std::size_t pos = 0, neg = 0;
  for (const auto& r : all) {
    if (r.label == 1 && pos < 25) {
      rows.push_back(r);
      ++pos;
    } else if (r.label == 0 && neg < 25) {
      rows.push_back(r);
      ++neg;
    }
  }
  const auto imgs = training::load_images(rows, corpus.dir.path(), small);
  small.input_mean = training::dataset_mean(imgs);
  const auto overfit_set = training::to_samples(imgs, small.input_mean);
  training::TrainConfig oc;
  oc.batch_size = 50;
  oc.max_iterations = 200;
  oc.eval_interval = 1;
  oc.seed = 3;
  const auto t0 = Clock::now();
  const auto over = training::train(small, nn::init_params(small, oc.seed), overfit_set, overfit_set, oc,
                                    [](const training::LogRow& r) { return r.test_accuracy >= 0.95; });
  const double overfit_secs = seconds_since(t0);
  const double overfit_acc = accuracy_of(small, over.params.values, overfit_set);
  const std::size_t epochs = over.log.rows.back().iteration;

  // Full corpus, scratch training at 64 px.
  const auto cfg = corpus_config();
  const auto t1 = Clock::now();
  auto scratch = training::train(corpus.spec, nn::init_params(corpus.spec, cfg.seed), corpus.train_set,
                                 corpus.test_set, cfg);
  const double corpus_secs = seconds_since(t1);
  const double test_acc = accuracy_of(scratch.spec, scratch.params.values, corpus.test_set);

  const bool ok = overfit_acc >= 0.95 && epochs <= 200 && overfit_secs < 300 && test_acc >= 0.85;
  return {{ok, "overfit 50 samples: " + fmt("%.0f%%", overfit_acc * 100) + " train accuracy after " +
                   std::to_string(epochs) + " epochs in " + fmt("%.1f", overfit_secs) + " s; 500-image corpus (" +
                   std::to_string(corpus.train_set.size()) + " train / " + std::to_string(corpus.test_set.size()) +
                   " test): test accuracy " + fmt("%.1f%%", test_acc * 100) + " after " +
                   std::to_string(cfg.max_iterations) + " iterations (" + fmt("%.1f", corpus_secs) + " s)"},
          std::move(scratch)};
}

template <typename Features>
bool all_correct(const baselines::FeatureMatrix& x, const std::vector<int>& y, Features predict) {
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (predict(x.row(i)) != y[i]) return false;
  }
  return true;
}

Verdict baselines_check() {
  using namespace baselines;
  // XOR.
  FeatureMatrix xor_x(0, 2);
  std::vector<int> xor_y;
  for (auto [a, b, l] : {std::tuple{0.f, 0.f, 0}, {1.f, 1.f, 0}, {0.f, 1.f, 1}, {1.f, 0.f, 1}}) {
    xor_x.append_row(std::vector<float>{a, b});
    xor_y.push_back(l);
  }
  SvmParams xp;
  xp.gamma = 2.0;
  xp.C = 100.0;
  std::vector<double> xor_alpha;
  const auto xm = svm_train_with_alphas(xor_x, xor_y, xp, xor_alpha);
  const double xor_kkt = svm_kkt_residual(xm, xor_x, xor_y, xor_alpha);
  const bool xor_ok = all_correct(xor_x, xor_y, [&](auto r) { return svm_predict(xm, r).label; }) && xor_kkt < xp.tol;

  // Separable blobs (and 4-sigma blobs for the forest).
  auto blobs = [](std::size_t per_class, std::size_t dims, double sep, std::uint64_t seed) {
    std::pair<FeatureMatrix, std::vector<int>> out{FeatureMatrix(0, dims), {}};
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> noise(0.0f, 1.0f);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
      const int label = static_cast<int>(i % 2);
      std::vector<float> row(dims);
      for (auto& v : row) v = noise(rng);
      row[0] += static_cast<float>(label ? sep / 2 : -sep / 2);
      out.first.append_row(row);
      out.second.push_back(label);
    }
    return out;
  };
  const auto [bx, by] = blobs(50, 5, 8.0, 11);
  SvmParams bp;
  bp.gamma = scale_gamma(bx);
  bp.C = 10.0;
  std::vector<double> blob_alpha;
  const auto bm = svm_train_with_alphas(bx, by, bp, blob_alpha);
  const double blob_kkt = svm_kkt_residual(bm, bx, by, blob_alpha);
  const bool blob_ok = all_correct(bx, by, [&](auto r) { return svm_predict(bm, r).label; }) && blob_kkt < bp.tol;

  const auto [fx, fy] = blobs(200, 8, 4.0, 12);
  const auto forest = rf_train(fx, fy, 50, 12, 13);
  const double oob = oob_accuracy(forest, fx, fy);

  // Metrics against hand-counted confusion matrices.
  struct Case {
    std::vector<int> pred, act;
    std::size_t tp, fp, fn, tn;
  };
  const std::vector<Case> cases = {
      {{1, 1, 1, 0, 0, 0, 0, 0, 0, 0}, {1, 1, 0, 1, 0, 0, 0, 0, 0, 0}, 2, 1, 1, 6},
      {{1, 0, 1, 0}, {0, 1, 0, 1}, 0, 2, 2, 0},
      {{1, 1, 1}, {1, 1, 1}, 3, 0, 0, 0},
      {{0, 0, 1, 1, 0}, {0, 1, 1, 0, 0}, 1, 1, 1, 2},
  };
  bool metrics_ok = true;
  for (const auto& c : cases) {
    const auto m = compute_metrics(c.pred, c.act);
    const double p = c.tp + c.fp ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    const double r = c.tp + c.fn ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    const double acc = static_cast<double>(c.tp + c.tn) / c.pred.size();
    metrics_ok &= m.tp == c.tp && m.fp == c.fp && m.fn == c.fn && m.tn == c.tn && std::abs(m.precision - p) < 1e-15 &&
                  std::abs(m.recall - r) < 1e-15 && std::abs(m.f1 - f1) < 1e-15 && std::abs(m.accuracy - acc) < 1e-15;
  }
  const bool ok = xor_ok && blob_ok && oob > 0.9 && metrics_ok;
  return {ok, std::string("SVM XOR ") + (xor_ok ? "4/4" : "FAILED") + " (KKT " + fmt("%.1e", xor_kkt) +
                  "), blobs " + (blob_ok ? "100%" : "NOT 100%") + " (KKT " + fmt("%.1e", blob_kkt) + " < tol " +
                  fmt("%.0e", bp.tol) + "); RF OOB " + fmt("%.3f", oob) + " (>0.9); metrics " +
                  (metrics_ok ? "exact on 4 hand-built matrices" : "MISMATCH")};
}

struct OrderingOutcome {
  Verdict verdict;
  std::string report;
};

OrderingOutcome baseline_vs_cnn(const Corpus& corpus, const training::TrainResult& scratch) {
  // Proxy pretraining: hue buckets on every photo outside the test split.
  std::set<std::string> held_out;
  for (const auto& s : corpus.test_set) held_out.insert(s.photo_id);
  std::vector<dataset::LabeledRow> rows;
  for (const auto& r : corpus.records) {
    if (!held_out.count(r.photo_id)) rows.push_back({r, 0.0, 0});
  }
  auto proxy_spec = corpus.spec;
  auto proxy_images = training::load_images(rows, corpus.dir.path(), proxy_spec);
  for (auto& li : proxy_images) li.label = training::hue_bucket(li.image);
  proxy_spec.input_mean = training::dataset_mean(proxy_images);
  auto cfg = corpus_config();
  const auto t0 = Clock::now();
  const auto proxy = training::train(proxy_spec, nn::init_params(proxy_spec, 11),
                                     training::to_samples(proxy_images, proxy_spec.input_mean), {}, cfg);
  const double proxy_secs = seconds_since(t0);

  // Fine-tune on the aesthetics labels for 43 epochs at batch 50.
  auto tune_cfg = cfg;
  tune_cfg.max_iterations = (43 * corpus.train_set.size() + tune_cfg.batch_size - 1) / tune_cfg.batch_size;
  const auto t1 = Clock::now();
  const auto tuned =
      training::finetune(corpus.spec, proxy.params.values, corpus.train_set, corpus.test_set, tune_cfg);
  const double tune_secs = seconds_since(t1);
  const double cnn_acc = accuracy_of(tuned.spec, tuned.params.values, corpus.test_set);

  // Features from the proxy-pretrained network + RBF SVM.
  const auto layer = training::default_feature_layer(proxy.spec);
  const auto as_proxy_input = [&](const std::vector<training::LabeledImage>& imgs) {
    return training::to_samples(imgs, proxy.spec.input_mean);
  };
  const auto ftrain = training::extract_feature_matrix(proxy.spec, proxy.params.values,
                                                       as_proxy_input(corpus.train_images), layer);
  const auto ftest = training::extract_feature_matrix(proxy.spec, proxy.params.values,
                                                      as_proxy_input(corpus.test_images), layer);
  std::vector<int> ytrain, ytest;
  for (const auto& s : corpus.train_set) ytrain.push_back(s.label);
  for (const auto& s : corpus.test_set) ytest.push_back(s.label);
  baselines::SvmParams sp;
  sp.gamma = baselines::scale_gamma(ftrain);
  const auto svm = baselines::svm_train(ftrain, ytrain, sp);
  std::vector<int> svm_pred;
  for (std::size_t i = 0; i < ftest.rows; ++i) svm_pred.push_back(baselines::svm_predict(svm, ftest.row(i)).label);
  const double svm_acc = baselines::compute_metrics(svm_pred, ytest).accuracy;

  // Report only: iterations the fine-tuned run needs to reach the scratch run's final accuracy.
  const double scratch_final = scratch.log.rows.back().test_accuracy;
  const std::size_t scratch_iters = scratch.log.rows.back().iteration;
  std::size_t reached = 0;
  for (const auto& row : tuned.log.rows) {
    if (row.iteration > scratch_iters) break;
    if (row.test_accuracy >= scratch_final) {
      reached = row.iteration;
      break;
    }
  }
  std::string report = "finetune vs scratch: scratch final test accuracy " + fmt("%.1f%%", scratch_final * 100) +
                       " at " + std::to_string(scratch.log.rows.back().iteration) + " iterations; finetune ";
  if (reached) {
    report += "reaches it at iteration " + std::to_string(reached) + " (" +
              (2 * reached <= scratch.log.rows.back().iteration ? "within" : "NOT within") + " half the budget)";
  } else {
    report += "does not reach it within " + std::to_string(cfg.max_iterations) + " iterations";
  }
  report += "; proxy hue pretraining " + fmt("%.1f", proxy_secs) + " s, finetune " + fmt("%.1f", tune_secs) + " s";

  return {{cnn_acc >= svm_acc, "fine-tuned CNN test accuracy " + fmt("%.1f%%", cnn_acc * 100) +
                                   " vs proxy features + RBF SVM " + fmt("%.1f%%", svm_acc * 100) + " (" +
                                   std::to_string(ytest.size()) + " test photos, finetune " +
                                   std::to_string(tune_cfg.max_iterations) + " iterations)"},
          report};
}

Verdict serialization(const training::TrainResult& trained) {
  test_support::TempDir dir("acceptance_weights");
  nn::save_weights(dir / "model.bin", trained.spec, trained.params);
  const auto loaded = nn::load_weights(dir / "model.bin");
  bool exact = loaded.spec == trained.spec;
  for (std::size_t i = 0; i < trained.params.values.size() && exact; ++i) {
    const auto& a = trained.params.values[i];
    const auto& b = loaded.params.values[i];
    if (a.empty()) continue;
    exact = a.weight.size() == b.weight.size() && a.bias.size() == b.bias.size() &&
            std::memcmp(a.weight.data(), b.weight.data(), a.weight.size() * sizeof(float)) == 0 &&
            std::memcmp(a.bias.data(), b.bias.data(), a.bias.size() * sizeof(float)) == 0;
  }
  const auto bytes = util::read_file(dir / "model.bin");
  exact &= nn::serialize_weights(loaded.spec, loaded.params) == bytes;

  // Corruption sweep: every byte and every truncation of a small model, sampled
  // positions of the trained one.
  const auto toy = nn::toy_reference_architecture();
  const auto toy_bytes = nn::serialize_weights(toy, nn::init_params(toy, 1));
  std::size_t attempts = 0, rejected = 0, other = 0;
  auto probe = [&](const std::string& b) {
    ++attempts;
    try {
      nn::deserialize_weights(b);
    } catch (const LoadError&) {
      ++rejected;
    } catch (...) {
      ++other;
    }
  };
  for (std::size_t pos = 0; pos < toy_bytes.size(); ++pos) {
    auto bad = toy_bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x5a);
    probe(bad);
    probe(toy_bytes.substr(0, pos));
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    auto bad = bytes;
    bad[rng() % bad.size()] ^= static_cast<char>(1 + rng() % 255);
    probe(bad);
    probe(bytes.substr(0, rng() % bytes.size()));
  }
  return {exact && rejected == attempts,
          std::string("save/load ") + (exact ? "bit-exact" : "NOT exact") + " (" + std::to_string(bytes.size()) +
              " bytes); " + std::to_string(rejected) + "/" + std::to_string(attempts) +
              " corrupt or truncated files rejected with load errors" +
              (other ? ", " + std::to_string(other) + " with other errors" : "")};
}

Verdict service_check(const Corpus& corpus, const training::TrainResult& trained) {
  using namespace service;
  auto model = std::make_shared<nn::LoadedModel>();
  model->spec = trained.spec;
  model->params = trained.params;

  BackendServer backend(model, Endpoint{"127.0.0.1", 0});
  backend.start();
  const Endpoint be{"127.0.0.1", backend.port()};

  std::vector<std::string> images;
  for (std::size_t i = 0; i < 20; ++i) images.push_back(imaging::encode_ppm(corpus.photos[i * 25].image));

  // Protocol path.
  std::size_t proto_equal = 0;
  BackendClient client(be);
  for (std::size_t i = 0; i < images.size(); ++i) {
    proto_equal += client.score(images[i], i + 1).score == score_image(*model, images[i]);
  }

  // Malformed frame followed by a valid one on the same connection.
  bool resync_ok = false;
  {
    auto sock = Socket::connect(be, 2s);
    FrameDecoder dec;
    auto bad = encode_frame({FrameKind::kRequest, 7, images[0]});
    bad[0] = 'X';
    sock.send_all(bad + encode_frame({FrameKind::kRequest, 8, images[1]}));
    const auto f1 = read_frame(sock, dec, 2s);
    const auto f2 = read_frame(sock, dec, 2s);
    resync_ok = f1.kind == FrameKind::kError && f2.kind == FrameKind::kReply && f2.request_id == 8 &&
                parse_reply(f2).score == score_image(*model, images[1]);
  }

  // HTTP path.
  WebOptions wo;
  wo.backend = be;
  WebServer web(wo);
  const auto web_port = web.bind(Endpoint{"127.0.0.1", 0});
  web.start();
  httplib::Client http("127.0.0.1", web_port);
  std::size_t http_equal = 0;
  for (const auto& img : images) {
    auto res = http.Post("/api/score", img, "image/x-portable-pixmap");
    if (res && res->status == 200 &&
        nlohmann::json::parse(res->body).at("score").get<double>() == score_image(*model, img)) {
      ++http_equal;
    }
  }
  web.stop();

  // Backend down: refused connection and a peer that never answers.
  auto down_case = [&](std::uint16_t port) {
    WebOptions o;
    o.backend = Endpoint{"127.0.0.1", port};
    WebServer w(o);
    const auto p = w.bind(Endpoint{"127.0.0.1", 0});
    w.start();
    httplib::Client c("127.0.0.1", p);
    c.set_read_timeout(10, 0);
    const auto t0 = Clock::now();
    auto res = c.Post("/api/score", images[0], "image/x-portable-pixmap");
    const double secs = seconds_since(t0);
    w.stop();
    return std::pair{res ? res->status : -1, secs};
  };
  std::uint16_t refused_port;
  {
    Listener tmp(Endpoint{"127.0.0.1", 0});
    refused_port = tmp.port();
  }
  const auto [refused_status, refused_secs] = down_case(refused_port);
  Listener silent(Endpoint{"127.0.0.1", 0});
  const auto [silent_status, silent_secs] = down_case(silent.port());
  backend.stop();

  const bool down_ok = refused_status == 503 && refused_secs < 2.5 && silent_status == 503 && silent_secs < 2.5;
  const bool ok = proto_equal == 20 && resync_ok && http_equal == 20 && down_ok;
  return {ok, "protocol scores bit-exact " + std::to_string(proto_equal) + "/20; malformed-then-valid " +
                  (resync_ok ? "error then correct reply" : "FAILED") + "; HTTP scores equal " +
                  std::to_string(http_equal) + "/20; backend down -> " + std::to_string(refused_status) + " in " +
                  fmt("%.2f", refused_secs) + " s (refused), " + std::to_string(silent_status) + " in " +
                  fmt("%.2f", silent_secs) + " s (silent)"};
}

Verdict ranking_check(const Corpus& corpus, const training::TrainResult& trained) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<float> dist(-20.0f, 20.0f);
  std::vector<std::string> ids;
  std::vector<std::pair<float, float>> logits;
  for (int i = 0; i < 1000; ++i) {
    ids.push_back("p" + std::to_string((i * 389) % 1000 + 1000));
    float z0 = dist(rng), z1 = dist(rng);
    if (i % 50 == 0) z1 = z0;                           // zero margin
    if (i % 71 == 0) z0 = z1 + 1e-6f;                   // tiny margins
    if (i % 97 == 0) std::tie(z0, z1) = std::pair{-18.0f, 19.5f};  // saturated, tied
    logits.emplace_back(z0, z1);
  }
  const auto ranked = training::rank_logits(ids, logits);
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const long double ma = static_cast<long double>(logits[a].second) - logits[a].first;
    const long double mb = static_cast<long double>(logits[b].second) - logits[b].first;
    if (ma != mb) return ma > mb;
    return ids[a] < ids[b];
  });
  bool order_ok = ranked.size() == ids.size();
  for (std::size_t k = 0; k < ranked.size() && order_ok; ++k) order_ok = ranked[k].photo_id == ids[order[k]];

  // On real network outputs as well.
  const auto net_ranked = training::rank_by_aesthetics(trained.spec, trained.params.values, corpus.test_set);
  std::vector<std::pair<long double, std::string>> net_oracle;
  for (const auto& s : corpus.test_set) {
    const auto z = nn::infer_logits(trained.spec, trained.params.values, s.input);
    net_oracle.emplace_back(static_cast<long double>(z[1]) - z[0], s.photo_id);
  }
  std::sort(net_oracle.begin(), net_oracle.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t k = 0; k < net_ranked.size() && order_ok; ++k) order_ok = net_ranked[k].photo_id == net_oracle[k].second;

  // Top/bottom 100 mosaics through the command-line tool.
  std::vector<std::string> all_ids;
  std::vector<std::pair<float, float>> all_logits;
  for (const auto& p : corpus.photos) {
    const auto z = nn::infer_logits(trained.spec, trained.params.values, nn::preprocess(trained.spec, p.image));
    all_ids.push_back(p.record.photo_id);
    all_logits.emplace_back(z[0], z[1]);
  }
  const auto full = training::rank_logits(all_ids, all_logits);
  training::write_ranking(corpus.dir / "ranking.csv", full);
  std::ostringstream out, err;
  const int code = cli::run({"aesthetics", "mosaic", "--ranking", (corpus.dir / "ranking.csv").string(), "--manifest",
                             (corpus.dir / "manifest.csv").string(), "--count", "100", "--columns", "10", "--cell",
                             "32", "--out-dir", (corpus.dir / "mosaic").string()},
                            out, err);
  bool mosaic_ok = code == 0;
  std::string dims = "not written";
  if (mosaic_ok) {
    const auto top = imaging::read_ppm((corpus.dir / "mosaic" / "top.ppm").string());
    const auto bottom = imaging::read_ppm((corpus.dir / "mosaic" / "bottom.ppm").string());
    dims = std::to_string(top.width) + "x" + std::to_string(top.height) + " / " + std::to_string(bottom.width) + "x" +
           std::to_string(bottom.height);
    // First cell of each grid holds the best (resp. worst) photo.
    std::map<std::string, const imaging::Image*> by_id;
    for (const auto& p : corpus.photos) by_id[p.record.photo_id] = &p.image;
    const auto best = imaging::resize_bilinear(*by_id[full.front().photo_id], 32, 32);
    const auto worst = imaging::resize_bilinear(*by_id[full.back().photo_id], 32, 32);
    bool cells = true;
    for (std::size_t y = 0; y < 32; ++y) {
      for (std::size_t x = 0; x < 32; ++x) {
        for (std::size_t c = 0; c < 3; ++c) {
          cells &= top.at(x, y, c) == best.at(x, y, c) && bottom.at(x, y, c) == worst.at(x, y, c);
        }
      }
    }
    mosaic_ok = top.width == 320 && top.height == 320 && bottom.width == 320 && bottom.height == 320 && cells;
  }
  return {order_ok && mosaic_ok, std::string("ordering ") + (order_ok ? "equals" : "DIFFERS FROM") +
                                     " logit-difference oracle on 1000 pairs and " +
                                     std::to_string(net_ranked.size()) + " network outputs; top/bottom-100 mosaics " +
                                     dims + " (expected 320x320)" + (mosaic_ok ? "" : " FAILED")};
}

}  // namespace

int main() {
  const auto start = Clock::now();
  std::printf("kernels: %s\n", std::string(simd::active_kernels().name).c_str());
  std::fflush(stdout);
  int failures = 0;
  auto report = [&](const char* name, const std::function<Verdict()>& fn) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };

  report("score formula", score_formula);
  report("labeling", labeling);
  report("gradient correctness", gradients);
  report("loss anchors", loss_anchors);
  report("fine-tuning mechanism", finetune_mechanism);
  report("baselines", baselines_check);

  std::unique_ptr<Corpus> corpus;
  std::optional<training::TrainResult> scratch;
  report("trainability", [&] {
    corpus = std::make_unique<Corpus>();
    auto outcome = trainability(*corpus);
    scratch = std::move(outcome.scratch);
    return outcome.verdict;
  });
  auto need_corpus = [&]() -> const training::TrainResult& {
    if (!corpus || !scratch) throw std::runtime_error("corpus training did not complete");
    return *scratch;
  };
  std::string finetune_report;
  report("baseline-vs-CNN ordering", [&] {
    const auto& s = need_corpus();
    auto outcome = baseline_vs_cnn(*corpus, s);
    finetune_report = outcome.report;
    return outcome.verdict;
  });
  report("serialization", [&] { return serialization(need_corpus()); });
  report("service", [&] { return service_check(*corpus, need_corpus()); });
  report("ranking", [&] { return ranking_check(*corpus, need_corpus()); });

  if (!finetune_report.empty()) std::printf("INFO %s\n", finetune_report.c_str());
  std::printf("%d of 11 criteria failed; total %.1f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
