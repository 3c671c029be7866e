#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "aesthetics/baselines/features.hpp"
#include "aesthetics/baselines/metrics.hpp"
#include "aesthetics/dataset.hpp"
#include "aesthetics/imaging.hpp"
#include "aesthetics/nn/network.hpp"

namespace aesthetics::training {

enum class TrainMode { kScratch, kFinetune };

std::string_view mode_name(TrainMode mode);
TrainMode mode_from_name(std::string_view name);

struct TrainConfig {
  double base_lr = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 50;
  std::size_t max_iterations = 1000;
  std::size_t eval_interval = 50;
  std::uint64_t seed = 1;
  // Layer index -> lr multiplier, applied on top of the network's own values.
  std::map<std::size_t, double> lr_multipliers;
  TrainMode mode = TrainMode::kScratch;

  void validate() const;
};

struct LogRow {
  std::size_t iteration = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;

  bool operator==(const LogRow&) const = default;
};

struct TrainingLog {
  std::vector<LogRow> rows;
};

// A decoded image already resized to the network input, with its label.
struct LabeledImage {
  std::string photo_id;
  imaging::Image image;
  int label = 0;
};

struct Sample {
  std::string photo_id;
  Tensor input;
  int label = 0;
};

// Resolves image_path against `image_root` unless it is absolute. Any failure
// is rethrown with the photo_id in the message.
std::vector<LabeledImage> load_images(const std::vector<dataset::LabeledRow>& rows,
                                      const std::filesystem::path& image_root, const nn::NetworkSpec& spec);

// Mean of sample / 255 per channel over every pixel of every image.
imaging::ChannelMean dataset_mean(const std::vector<LabeledImage>& images);

std::vector<Sample> to_samples(const std::vector<LabeledImage>& images, const imaging::ChannelMean& mean);

// Called after each log row; returning true stops training early.
using EvalHook = std::function<bool(const LogRow&)>;

struct TrainResult {
  nn::NetworkSpec spec;  // with the lr multipliers that were in effect
  nn::Parameters params;
  TrainingLog log;
};

// Minibatch SGD with momentum. Each epoch visits the training set in a
// permutation seeded by mix(seed, epoch); batches may straddle epochs. Dropout
// masks are keyed by (seed, iteration, position in batch). A log row is
// emitted every eval_interval iterations and after the last one; test metrics
// are NaN when `test` is empty.
TrainResult train(const nn::NetworkSpec& spec, nn::Parameters params, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& test_set, const TrainConfig& config, const EvalHook& hook = {});

inline constexpr double kFinetuneMultiplier = 0.1;

// Copies every parametric layer of `pretrained` except the last fc, which is
// re-initialised from config.seed. Transferred layers run at
// kFinetuneMultiplier, the new head at 1.0, unless overridden in config.
TrainResult finetune(const nn::NetworkSpec& spec, const nn::ParamSet<float>& pretrained,
                     const std::vector<Sample>& train_set, const std::vector<Sample>& test_set,
                     const TrainConfig& config, const EvalHook& hook = {});

// Predicted label is 1 iff z1 > z0.
std::vector<int> predict(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                         const std::vector<Sample>& samples);

baselines::Metrics evaluate(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                            const std::vector<Sample>& samples);

// Mean cross-entropy and accuracy in infer mode.
std::pair<double, double> loss_and_accuracy(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                                            const std::vector<Sample>& samples);

struct RankedPhoto {
  std::string photo_id;
  double p1 = 0.0;
  double logit_margin = 0.0;  // z1 - z0
};

// Sorted by p1 descending, photo_id ascending. p1 is compared through the
// logit margin so that probabilities that round to the same double still
// keep their true order.
std::vector<RankedPhoto> rank_logits(const std::vector<std::string>& ids, const std::vector<std::pair<float, float>>& logits);

std::vector<RankedPhoto> rank_by_aesthetics(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                                            const std::vector<Sample>& samples);

std::string format_learning_curves(const TrainingLog& log);
void export_learning_curves(const TrainingLog& log, const std::filesystem::path& path);
TrainingLog parse_learning_curves(std::string_view text);

std::string format_ranking(const std::vector<RankedPhoto>& ranking);
void write_ranking(const std::filesystem::path& path, const std::vector<RankedPhoto>& ranking);
std::vector<RankedPhoto> parse_ranking(std::string_view text);

// Layer whose output feeds the classical baselines: the first fc, taken after
// its ReLU when one follows.
std::size_t default_feature_layer(const nn::NetworkSpec& spec);

baselines::FeatureMatrix extract_feature_matrix(const nn::NetworkSpec& spec, const nn::ParamSet<float>& params,
                                                const std::vector<Sample>& samples, std::size_t layer);

// Proxy pretraining label: 1 when the saturation-weighted circular mean hue
// falls in [180, 360) degrees, 0 otherwise.
int hue_bucket(const imaging::Image& image);

}  // namespace aesthetics::training
