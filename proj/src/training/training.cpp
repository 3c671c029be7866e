#include "aesthetics/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "aesthetics/csv.hpp"
#include "aesthetics/error.hpp"
#include "aesthetics/util.hpp"

namespace aesthetics::training {

namespace {

constexpr std::string_view kCurvesHeader = "iteration,train_loss,test_loss,test_accuracy";
constexpr std::string_view kRankingHeader = "photo_id,p1";

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

nn::NetworkSpec apply_overrides(nn::NetworkSpec spec, const TrainConfig& config) {
  for (const auto& [layer, multiplier] : config.lr_multipliers) {
    if (layer >= spec.layers.size() || !spec.layers[layer].has_params()) {
      throw DomainError("lr multiplier override for layer " + std::to_string(layer) +
                        ", which has no parameters");
    }
    spec.layers[layer].lr_multiplier = multiplier;
  }
  return spec;
}

void accumulate(nn::ParamSet<double>& acc, const nn::ParamSet<float>& grads) {
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc[i].empty()) continue;
    for (std::size_t j = 0; j < acc[i].weight.size(); ++j) acc[i].weight[j] += grads[i].weight[j];
    for (std::size_t j = 0; j < acc[i].bias.size(); ++j) acc[i].bias[j] += grads[i].bias[j];
  }
}

nn::ParamSet<float> averaged(const nn::ParamSet<double>& acc, std::size_t n) {
  nn::ParamSet<float> out = nn::cast_params<float>(acc);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc[i].empty()) continue;
    for (std::size_t j = 0; j < acc[i].weight.size(); ++j) {
      out[i].weight[j] = static_cast<float>(acc[i].weight[j] * scale);
    }
    for (std::size_t j = 0; j < acc[i].bias.size(); ++j) out[i].bias[j] = static_cast<float>(acc[i].bias[j] * scale);
  }
  return out;
}

}  // namespace

std::string_view mode_name(TrainMode mode) { return mode == TrainMode::kScratch ? "scratch" : "finetune"; }

TrainMode mode_from_name(std::string_view name) {
  if (name == "scratch") return TrainMode::kScratch;
  if (name == "finetune") return TrainMode::kFinetune;
  throw DomainError("unknown training mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw DomainError("batch_size must be at least 1");
  if (max_iterations < 1) throw DomainError("max_iterations must be at least 1");
  if (eval_interval < 1) throw DomainError("eval_interval must be at least 1");
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw DomainError("base_lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
  for (const auto& [layer, multiplier] : lr_multipliers) {
    if (!(multiplier >= 0.0) || !std::isfinite(multiplier)) {
      throw DomainError("lr multiplier for layer " + std::to_string(layer) + " must be non-negative");
    }
  }
}

std::vector<LabeledImage> load_images(const std::vector<dataset::LabeledRow>& rows,
                                      const std::filesystem::path& image_root, const nn::NetworkSpec& spec) {
  if (spec.input_shape.size() != 3) throw ShapeError("network input must be (3, H, W)");
  const std::size_t h = spec.input_shape[1];
  const std::size_t w = spec.input_shape[2];
  std::vector<LabeledImage> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    std::filesystem::path path(row.record.image_path);
    if (path.is_relative()) path = image_root / path;
    try {
      const auto image = imaging::read_ppm(path.string());
      out.push_back({row.record.photo_id, imaging::resize_bilinear(image, w, h), row.label});
    } catch (const Error& e) {
      throw DataError("photo " + row.record.photo_id + " (" + path.string() + "): " + e.what());
    }
  }
  return out;
}

imaging::ChannelMean dataset_mean(const std::vector<LabeledImage>& images) {
  if (images.empty()) throw DomainError("mean of an empty image set");
  imaging::ChannelMean sum{0.0, 0.0, 0.0};
  std::size_t pixels = 0;
  for (const auto& li : images) {
    const std::size_t n = li.image.width * li.image.height;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t c = 0; c < 3; ++c) sum[c] += li.image.data[p * 3 + c];
    }
    pixels += n;
  }
  for (auto& s : sum) s /= 255.0 * static_cast<double>(pixels);
  return sum;
}

std::vector<Sample> to_samples(const std::vector<LabeledImage>& images, const imaging::ChannelMean& mean) {
  std::vector<Sample> out;
  out.reserve(images.size());
  for (const auto& li : images) out.push_back({li.photo_id, imaging::to_tensor(li.image, mean), li.label});
  return out;
}

TrainResult train(const nn::NetworkSpec& spec, nn::Parameters params, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& test_set, const TrainConfig& config, const EvalHook& hook) {
  config.validate();
  spec.validate();
  if (train_set.empty()) throw DomainError("training set is empty");
  nn::check_params(spec, params.values);

  TrainResult result;
  result.spec = apply_overrides(spec, config);
  const auto& net = result.spec;

  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;
  auto next_index = [&] {
    if (cursor == order.size()) {
      order = permutation(train_set.size(), util::mix(config.seed, epoch++));
      cursor = 0;
    }
    return order[cursor++];
  };

  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    auto acc = nn::zero_params<double>(net);
    double batch_loss = 0.0;
    const std::uint64_t iteration_key = util::mix(config.seed, it);
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      const auto& sample = train_set[next_index()];
      const auto pass = nn::forward(net, params.values, sample.input, nn::Mode::kTrain, util::mix(iteration_key, b));
      const auto back = nn::backward(net, params.values, pass, sample.label);
      accumulate(acc, back.grads);
      batch_loss += back.loss;
    }
    nn::sgd_step(params, averaged(acc, config.batch_size), config.base_lr, config.momentum, net);
    loss_sum += batch_loss / static_cast<double>(config.batch_size);
    ++loss_count;

    if (it % config.eval_interval == 0 || it == config.max_iterations) {
      LogRow row;
      row.iteration = it;
      row.train_loss = loss_sum / static_cast<double>(loss_count);
      if (test_set.empty()) {
        row.test_loss = row.test_accuracy = std::numeric_limits<double>::quiet_NaN();
      } else {
        std::tie(row.test_loss, row.test_accuracy) = loss_and_accuracy(net, params.values, test_set);
      }
      loss_sum = 0.0;
      loss_count = 0;
      result.log.rows.push_back(row);
      if (hook && hook(row)) break;
    }
  }
  result.params = std::move(params);
  return result;
}

TrainResult finetune(const nn::NetworkSpec& spec, const nn::ParamSet<float>& pretrained,
                     const std::vector<Sample>& train_set, const std::vector<Sample>& test_set,
                     const TrainConfig& config, const EvalHook& hook) {
  config.validate();
  spec.validate();
  const std::size_t head = spec.last_fc_index();
  if (pretrained.size() != spec.layers.size()) {
    throw ShapeError("pretrained weights have " + std::to_string(pretrained.size()) + " layers, network has " +
                     std::to_string(spec.layers.size()));
  }
  const auto expected = nn::zero_params<float>(spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (i == head) continue;
    const auto& got = pretrained[i];
    const auto& want = expected[i];
    if (got.weight.shape() != want.weight.shape() || got.bias.shape() != want.bias.shape()) {
      throw ShapeError("layer " + std::to_string(i) + " (" + std::string(nn::kind_name(spec.layers[i].kind)) +
                       "): pretrained weight " + shape_string(got.weight.shape()) + " does not match " +
                       shape_string(want.weight.shape()));
    }
  }

  nn::NetworkSpec tuned = spec;
  for (std::size_t i = 0; i < tuned.layers.size(); ++i) {
    if (tuned.layers[i].has_params()) tuned.layers[i].lr_multiplier = i == head ? 1.0 : kFinetuneMultiplier;
  }
  nn::Parameters params;
  params.values = pretrained;
  params.values[head] = expected[head];
  params.velocity = expected;
  nn::reinit_layer(tuned, params, head, config.seed);
  return train(tuned, std::move(params), train_set, test_set, config, hook);
}

std::vector<int> predict(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                         const std::vector<Sample>& samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const auto logits = nn::infer_logits(spec, params, s.input);
    out.push_back(logits[1] > logits[0] ? 1 : 0);
  }
  return out;
}

baselines::Metrics evaluate(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                            const std::vector<Sample>& samples) {
  if (samples.empty()) throw DomainError("cannot evaluate on an empty dataset");
  const auto predicted = predict(spec, params, samples);
  std::vector<int> actual;
  actual.reserve(samples.size());
  for (const auto& s : samples) actual.push_back(s.label);
  return baselines::compute_metrics(predicted, actual);
}

std::pair<double, double> loss_and_accuracy(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                                            const std::vector<Sample>& samples) {
  if (samples.empty()) throw DomainError("cannot evaluate on an empty dataset");
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    const auto logits = nn::infer_logits(spec, params, s.input);
    loss += nn::cross_entropy(logits[0], logits[1], s.label);
    correct += (logits[1] > logits[0] ? 1 : 0) == s.label ? 1 : 0;
  }
  const auto n = static_cast<double>(samples.size());
  return {loss / n, static_cast<double>(correct) / n};
}

std::vector<RankedPhoto> rank_logits(const std::vector<std::string>& ids,
                                     const std::vector<std::pair<float, float>>& logits) {
  if (ids.size() != logits.size()) throw ShapeError("id and logit counts differ");
  std::vector<RankedPhoto> out;
  out.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double z0 = logits[i].first;
    const double z1 = logits[i].second;
    out.push_back({ids[i], nn::softmax_prob(z0, z1).p1, z1 - z0});
  }
  std::sort(out.begin(), out.end(), [](const RankedPhoto& a, const RankedPhoto& b) {
    if (a.logit_margin != b.logit_margin) return a.logit_margin > b.logit_margin;
    return a.photo_id < b.photo_id;
  });
  return out;
}

std::vector<RankedPhoto> rank_by_aesthetics(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                                            const std::vector<Sample>& samples) {
  std::vector<std::string> ids;
  std::vector<std::pair<float, float>> logits;
  for (const auto& s : samples) {
    const auto z = nn::infer_logits(spec, params, s.input);
    ids.push_back(s.photo_id);
    logits.emplace_back(z[0], z[1]);
  }
  return rank_logits(ids, logits);
}

std::string format_learning_curves(const TrainingLog& log) {
  if (log.rows.empty()) throw DomainError("learning-curve log is empty");
  std::string out(kCurvesHeader);
  out += '\n';
  std::size_t last = 0;
  for (const auto& r : log.rows) {
    if (r.iteration <= last) throw ValidationError("iterations must be strictly increasing");
    last = r.iteration;
    out += std::to_string(r.iteration) + "," + csv::format_double(r.train_loss) + "," +
           csv::format_double(r.test_loss) + "," + csv::format_double(r.test_accuracy) + "\n";
  }
  return out;
}

void export_learning_curves(const TrainingLog& log, const std::filesystem::path& path) {
  util::write_file(path, format_learning_curves(log));
}

TrainingLog parse_learning_curves(std::string_view text) {
  const auto lines = csv::split_lines(text);
  if (lines.empty() || lines[0].second != kCurvesHeader) throw ParseError("expected header " + std::string(kCurvesHeader), 1);
  TrainingLog log;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [number, line] = lines[i];
    const auto f = csv::split_fields(line);
    LogRow r;
    if (f.size() != 4) throw ParseError("expected 4 fields", number);
    const bool ok = csv::parse_number(f[0], r.iteration) && csv::parse_number(f[1], r.train_loss) &&
                    csv::parse_number(f[2], r.test_loss) && csv::parse_number(f[3], r.test_accuracy);
    if (!ok) throw ParseError("malformed number", number);
    if (!log.rows.empty() && r.iteration <= log.rows.back().iteration) {
      throw ParseError("iterations must be strictly increasing", number);
    }
    log.rows.push_back(r);
  }
  return log;
}

std::string format_ranking(const std::vector<RankedPhoto>& ranking) {
  std::string out(kRankingHeader);
  out += '\n';
  for (const auto& r : ranking) out += r.photo_id + "," + csv::format_double(r.p1) + "\n";
  return out;
}

void write_ranking(const std::filesystem::path& path, const std::vector<RankedPhoto>& ranking) {
  util::write_file(path, format_ranking(ranking));
}

std::vector<RankedPhoto> parse_ranking(std::string_view text) {
  const auto lines = csv::split_lines(text);
  if (lines.empty() || lines[0].second != kRankingHeader) throw ParseError("expected header " + std::string(kRankingHeader), 1);
  std::vector<RankedPhoto> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [number, line] = lines[i];
    const auto f = csv::split_fields(line);
    RankedPhoto r;
    if (f.size() != 2 || f[0].empty() || !csv::parse_number(f[1], r.p1)) throw ParseError("malformed ranking row", number);
    r.photo_id = std::string(f[0]);
    out.push_back(std::move(r));
  }
  return out;
}

std::size_t default_feature_layer(const nn::NetworkSpec& spec) {
  const std::size_t fc = spec.first_fc_index();
  if (fc + 1 < spec.layers.size() && spec.layers[fc + 1].kind == nn::LayerKind::kRelu) return fc + 1;
  return fc;
}

baselines::FeatureMatrix extract_feature_matrix(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                                                const std::vector<Sample>& samples, std::size_t layer) {
  baselines::FeatureMatrix m;
  for (const auto& s : samples) {
    const auto f = nn::extract_features(spec, params, s.input, layer);
    if (m.rows == 0) m.cols = f.size();
    m.append_row(f.span());
  }
  return m;
}

int hue_bucket(const imaging::Image& image) {
  double sx = 0.0, sy = 0.0;
  const std::size_t n = image.width * image.height;
  for (std::size_t p = 0; p < n; ++p) {
    const double r = image.data[p * 3] / 255.0;
    const double g = image.data[p * 3 + 1] / 255.0;
    const double b = image.data[p * 3 + 2] / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double chroma = mx - mn;
    if (chroma <= 0.0) continue;
    double h;
    if (mx == r) {
      h = std::fmod((g - b) / chroma, 6.0);
    } else if (mx == g) {
      h = (b - r) / chroma + 2.0;
    } else {
      h = (r - g) / chroma + 4.0;
    }
    const double angle = h * std::numbers::pi / 3.0;
    sx += chroma * std::cos(angle);
    sy += chroma * std::sin(angle);
  }
  return std::atan2(sy, sx) < 0.0 ? 1 : 0;
}

}  // namespace aesthetics::training
