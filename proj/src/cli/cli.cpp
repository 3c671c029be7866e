#include "aesthetics/cli.hpp"

#include <csignal>
#include <pthread.h>

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <json.hpp>
#include <memory>

#include "aesthetics/baselines/forest.hpp"
#include "aesthetics/baselines/svm.hpp"
#include "aesthetics/csv.hpp"
#include "aesthetics/dataset.hpp"
#include "aesthetics/error.hpp"
#include "aesthetics/nn/weights_io.hpp"
#include "aesthetics/service/backend.hpp"
#include "aesthetics/service/web.hpp"
#include "aesthetics/synthetic.hpp"
#include "aesthetics/training.hpp"
#include "aesthetics/util.hpp"

namespace aesthetics::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kLabeledHeader = "photo_id,n_views,upload_date,image_path,score,label";

struct Context {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
};

// Where the run record goes: next to a file output, or inside an output dir.
fs::path run_json_for_file(const fs::path& out) { return fs::path(out.string() + ".run.json"); }
fs::path run_json_for_dir(const fs::path& dir) { return dir / "run.json"; }

json option_config(const CLI::App& sub) {
  json config = json::object();
  for (const auto* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      config[name] = r.size() == 1 && opt->get_items_expected_max() <= 1 ? json(r.front()) : json(r);
    } else {
      config[name] = opt->get_default_str();
    }
  }
  return config;
}

void write_run_json(const Context& ctx, const CLI::App& sub, const fs::path& where) {
  json j;
  j["tool"] = "aesthetics";
  j["subcommand"] = sub.get_name();
  j["argv"] = std::vector<std::string>(ctx.args.begin() + 1, ctx.args.end());
  j["config"] = option_config(sub);
  util::write_file(where, j.dump(2) + "\n");
}

std::vector<dataset::LabeledRow> read_any_manifest(const fs::path& path) {
  const auto text = util::read_file(path);
  const auto first = text.substr(0, text.find('\n'));
  const auto header = !first.empty() && first.back() == '\r' ? first.substr(0, first.size() - 1) : first;
  if (header == kLabeledHeader) return dataset::parse_labeled_manifest_text(text);
  std::vector<dataset::LabeledRow> rows;
  for (auto& r : dataset::parse_manifest_text(text)) rows.push_back({std::move(r), 0.0, 0});
  return rows;
}

fs::path image_root_for(const std::string& flag, const fs::path& manifest) {
  if (!flag.empty()) return flag;
  return manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
}

// Rewrites relative image paths so they stay valid from the output's directory.
void rebase_paths(std::vector<dataset::LabeledRow>& rows, const fs::path& from_file, const fs::path& to_file) {
  const auto from = fs::absolute(from_file).parent_path().lexically_normal();
  const auto to = fs::absolute(to_file).parent_path().lexically_normal();
  if (from == to) return;
  for (auto& r : rows) {
    const fs::path p(r.record.image_path);
    if (p.is_absolute()) continue;
    r.record.image_path = (from / p).lexically_normal().lexically_relative(to).generic_string();
  }
}

std::vector<int> labels_of(const std::vector<dataset::LabeledRow>& rows) {
  std::vector<int> out;
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

struct TrainFlags {
  std::string train_manifest;
  std::string test_manifest;
  std::string image_root;
  std::string out;
  std::string curves;
  std::string task = "aesthetics";
  std::string model_id = "aesthetics-ref";
  std::size_t input_side = 64;
  std::vector<std::string> lr_mult;
  training::TrainConfig config;
};

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--train", f.train_manifest, "Training manifest (labeled, or plain with --task hue)")->required();
  sub->add_option("--test", f.test_manifest, "Held-out manifest for the learning curves");
  sub->add_option("--image-root", f.image_root, "Base directory for relative image paths [manifest dir]");
  sub->add_option("--out", f.out, "Output weights file")->required();
  sub->add_option("--curves", f.curves, "Learning-curve CSV [<out>.curves.csv]");
  sub->add_option("--task", f.task, "aesthetics (manifest labels) or hue (proxy labels)")
      ->check(CLI::IsMember({"aesthetics", "hue"}));
  sub->add_option("--lr", f.config.base_lr, "Base learning rate");
  sub->add_option("--momentum", f.config.momentum, "Momentum");
  sub->add_option("--batch-size", f.config.batch_size, "Minibatch size");
  sub->add_option("--iterations", f.config.max_iterations, "Number of SGD steps");
  sub->add_option("--eval-interval", f.config.eval_interval, "Iterations between log rows");
  sub->add_option("--seed", f.config.seed, "Seed for init, shuffling and dropout");
  sub->add_option("--lr-mult", f.lr_mult, "Per-layer override LAYER=MULT (repeatable)");
}

void parse_lr_mults(TrainFlags& f) {
  for (const auto& s : f.lr_mult) {
    const auto eq = s.find('=');
    std::size_t layer = 0;
    double mult = 0.0;
    if (eq == std::string::npos || !csv::parse_number(std::string_view(s).substr(0, eq), layer) ||
        !csv::parse_number(std::string_view(s).substr(eq + 1), mult)) {
      throw UsageError("--lr-mult expects LAYER=MULT, got '" + s + "'");
    }
    f.config.lr_multipliers[layer] = mult;
  }
}

std::vector<training::LabeledImage> load_for_task(const TrainFlags& f, const std::string& manifest,
                                                  const nn::NetworkSpec& spec) {
  auto rows = read_any_manifest(manifest);
  auto images = training::load_images(rows, image_root_for(f.image_root, manifest), spec);
  if (f.task == "hue") {
    for (auto& li : images) li.label = training::hue_bucket(li.image);
  }
  return images;
}

void report_training(const Context& ctx, const TrainFlags& f, const training::TrainResult& result) {
  const fs::path curves = f.curves.empty() ? fs::path(f.out + ".curves.csv") : fs::path(f.curves);
  nn::save_weights(f.out, result.spec, result.params);
  training::export_learning_curves(result.log, curves);
  const auto& last = result.log.rows.back();
  json j;
  j["weights"] = f.out;
  j["curves"] = curves.string();
  j["iterations"] = last.iteration;
  j["train_loss"] = last.train_loss;
  if (!std::isnan(last.test_accuracy)) {
    j["test_loss"] = last.test_loss;
    j["test_accuracy"] = last.test_accuracy;
  }
  ctx.out << j.dump() << "\n";
}

training::EvalHook progress(const Context& ctx) {
  return [&ctx](const training::LogRow& r) {
    ctx.err << "iter " << r.iteration << " train_loss " << r.train_loss << " test_loss " << r.test_loss
            << " test_acc " << r.test_accuracy << "\n";
    return false;
  };
}

// Blocks SIGINT/SIGTERM for every thread started afterwards and waits for one.
class SignalWait {
 public:
  SignalWait() {
    sigemptyset(&set_);
    sigaddset(&set_, SIGINT);
    sigaddset(&set_, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set_, &old_);
  }
  ~SignalWait() { pthread_sigmask(SIG_SETMASK, &old_, nullptr); }
  void wait() {
    int sig = 0;
    sigwait(&set_, &sig);
  }

 private:
  sigset_t set_{};
  sigset_t old_{};
};

int dispatch(const Context& ctx, CLI::App& app);

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{args, out, err};
  CLI::App app{"Photo aesthetics toolkit: dataset curation, CNN training, baselines and scoring service",
               "aesthetics"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  try {
    return dispatch(ctx, app);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.category()) {
      case Error::Category::kUsage: return 1;
      case Error::Category::kData: return 2;
      case Error::Category::kRuntime: return 3;
    }
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

namespace {

int dispatch(const Context& ctx, CLI::App& app) {
  std::function<void()> action;
  int exit_code = 0;

  // score-dataset
  std::string manifest, ref_date = "2017-06-01", out;
  double fraction = dataset::kDefaultLabelFraction;
  auto* score = app.add_subcommand("score-dataset", "Score a manifest and keep the top/bottom fraction as labels");
  score->add_option("--manifest", manifest, "Photo manifest CSV")->required();
  score->add_option("--reference-date", ref_date, "Date the view counts were collected (YYYY-MM-DD)");
  score->add_option("--fraction", fraction, "Fraction labeled positive and negative each");
  score->add_option("--out", out, "Labeled manifest CSV")->required();
  score->callback([&] {
    action = [&] {
      const auto scored = dataset::score_records(dataset::parse_manifest(manifest), dataset::parse_date(ref_date));
      const auto labeled = dataset::label_by_percentile(scored, fraction);
      auto rows = dataset::to_rows(labeled);
      rebase_paths(rows, manifest, out);
      dataset::write_labeled_manifest(out, rows);
      write_run_json(ctx, *score, run_json_for_file(out));
      ctx.out << json{{"positives", labeled.positives.size()},
                      {"negatives", labeled.negatives.size()},
                      {"discarded", labeled.discarded_count}}
                     .dump()
              << "\n";
    };
  });

  // split
  std::string labeled_path, out_dir;
  double train_fraction = dataset::kDefaultTrainFraction;
  std::uint64_t split_seed = 1;
  auto* split = app.add_subcommand("split", "Stratified train/test split of a labeled manifest");
  split->add_option("--labeled", labeled_path, "Labeled manifest CSV")->required();
  split->add_option("--train-fraction", train_fraction, "Share of each class that goes to train");
  split->add_option("--seed", split_seed, "Shuffle seed");
  split->add_option("--out-dir", out_dir, "Receives train.csv and test.csv")->required();
  split->callback([&] {
    action = [&] {
      const auto pool = dataset::from_rows(dataset::parse_labeled_manifest(labeled_path), dataset::SplitTag::kPool);
      const auto [tr, te] = dataset::split_train_test(pool, train_fraction, split_seed);
      for (const auto& [part, name] : {std::pair{&tr, "train.csv"}, std::pair{&te, "test.csv"}}) {
        auto rows = dataset::to_rows(*part);
        rebase_paths(rows, labeled_path, fs::path(out_dir) / name);
        dataset::write_labeled_manifest(fs::path(out_dir) / name, rows);
      }
      write_run_json(ctx, *split, run_json_for_dir(out_dir));
      ctx.out << json{{"train", tr.size()}, {"test", te.size()}}.dump() << "\n";
    };
  });

  // train
  TrainFlags tf;
  auto* train = app.add_subcommand("train", "Train the network from scratch");
  add_train_flags(train, tf);
  train->add_option("--input-side", tf.input_side, "Network input is 3 x side x side");
  train->add_option("--model-id", tf.model_id, "Identifier stored with the weights");
  train->callback([&] {
    action = [&] {
      parse_lr_mults(tf);
      auto spec = nn::reference_architecture(tf.input_side);
      spec.model_id = tf.model_id;
      const auto train_images = load_for_task(tf, tf.train_manifest, spec);
      spec.input_mean = training::dataset_mean(train_images);
      const auto train_set = training::to_samples(train_images, spec.input_mean);
      std::vector<training::Sample> test_set;
      if (!tf.test_manifest.empty()) test_set = training::to_samples(load_for_task(tf, tf.test_manifest, spec), spec.input_mean);
      tf.config.mode = training::TrainMode::kScratch;
      const auto result = training::train(spec, nn::init_params(spec, tf.config.seed), train_set, test_set,
                                          tf.config, progress(ctx));
      report_training(ctx, tf, result);
      write_run_json(ctx, *train, run_json_for_file(tf.out));
    };
  });

  // finetune
  TrainFlags ff;
  std::string pretrained_path;
  auto* fine = app.add_subcommand("finetune", "Fine-tune pretrained weights with a fresh classifier head");
  add_train_flags(fine, ff);
  fine->add_option("--pretrained", pretrained_path, "Weights to start from")->required();
  fine->add_option("--model-id", ff.model_id, "Identifier stored with the weights");
  fine->callback([&] {
    action = [&] {
      parse_lr_mults(ff);
      const auto pretrained = nn::load_weights(pretrained_path);
      auto spec = pretrained.spec;
      spec.model_id = ff.model_id;
      const auto train_images = load_for_task(ff, ff.train_manifest, spec);
      spec.input_mean = training::dataset_mean(train_images);
      const auto train_set = training::to_samples(train_images, spec.input_mean);
      std::vector<training::Sample> test_set;
      if (!ff.test_manifest.empty()) test_set = training::to_samples(load_for_task(ff, ff.test_manifest, spec), spec.input_mean);
      ff.config.mode = training::TrainMode::kFinetune;
      const auto result = training::finetune(spec, pretrained.params.values, train_set, test_set, ff.config,
                                             progress(ctx));
      report_training(ctx, ff, result);
      write_run_json(ctx, *fine, run_json_for_file(ff.out));
    };
  });

  // extract-features
  std::string weights, image_root, feat_out;
  int layer = -1;
  auto* extract = app.add_subcommand("extract-features", "Dump network activations for the classical baselines");
  extract->add_option("--weights", weights, "Network weights")->required();
  extract->add_option("--manifest", manifest, "Manifest of the photos to encode")->required();
  extract->add_option("--image-root", image_root, "Base directory for relative image paths [manifest dir]");
  extract->add_option("--layer", layer, "Layer index [first fc after its ReLU]");
  extract->add_option("--out", feat_out, "Feature matrix file")->required();
  extract->callback([&] {
    action = [&] {
      const auto model = nn::load_weights(weights);
      const auto rows = read_any_manifest(manifest);
      const auto samples = training::to_samples(
          training::load_images(rows, image_root_for(image_root, manifest), model.spec), model.spec.input_mean);
      const std::size_t idx = layer < 0 ? training::default_feature_layer(model.spec) : static_cast<std::size_t>(layer);
      const auto m = training::extract_feature_matrix(model.spec, model.params.values, samples, idx);
      baselines::write_features(feat_out, m);
      write_run_json(ctx, *extract, run_json_for_file(feat_out));
      ctx.out << json{{"rows", m.rows}, {"cols", m.cols}, {"layer", idx}}.dump() << "\n";
    };
  });

  // train-svm
  std::string features_path, model_out, gamma_text = "1e-6";
  baselines::SvmParams svm_params;
  auto* tsvm = app.add_subcommand("train-svm", "RBF SVM on extracted features");
  tsvm->add_option("--features", features_path, "Feature matrix file")->required();
  tsvm->add_option("--labeled", labeled_path, "Labeled manifest in the same row order")->required();
  tsvm->add_option("--C", svm_params.C, "Box constraint");
  tsvm->add_option("--gamma", gamma_text, "RBF width, or 'scale' for 1 / (d * var)");
  tsvm->add_option("--tol", svm_params.tol, "KKT tolerance");
  tsvm->add_option("--max-passes", svm_params.max_passes, "Iteration cap in units of max(n, 100)");
  tsvm->add_option("--out", model_out, "Model JSON")->required();
  tsvm->callback([&] {
    action = [&] {
      const auto m = baselines::read_features(features_path);
      const auto labels = labels_of(dataset::parse_labeled_manifest(labeled_path));
      if (gamma_text == "scale") {
        svm_params.gamma = baselines::scale_gamma(m);
      } else if (!csv::parse_number(std::string_view(gamma_text), svm_params.gamma)) {
        throw UsageError("--gamma expects a number or 'scale'");
      }
      const auto model = baselines::svm_train(m, labels, svm_params);
      util::write_file(model_out, baselines::svm_to_json(model));
      write_run_json(ctx, *tsvm, run_json_for_file(model_out));
      ctx.out << json{{"support_vectors", model.support_vectors.rows},
                      {"iterations", model.iterations},
                      {"converged", model.converged},
                      {"gamma", model.gamma}}
                     .dump()
              << "\n";
    };
  });

  // train-rf
  std::size_t n_trees = 10, max_depth = 12;
  std::uint64_t rf_seed = 1;
  auto* trf = app.add_subcommand("train-rf", "Random forest on extracted features");
  trf->add_option("--features", features_path, "Feature matrix file")->required();
  trf->add_option("--labeled", labeled_path, "Labeled manifest in the same row order")->required();
  trf->add_option("--trees", n_trees, "Number of trees");
  trf->add_option("--max-depth", max_depth, "Depth limit");
  trf->add_option("--seed", rf_seed, "Bootstrap and feature-sampling seed");
  trf->add_option("--out", model_out, "Model JSON")->required();
  trf->callback([&] {
    action = [&] {
      const auto m = baselines::read_features(features_path);
      const auto labels = labels_of(dataset::parse_labeled_manifest(labeled_path));
      const auto model = baselines::rf_train(m, labels, n_trees, max_depth, rf_seed);
      util::write_file(model_out, baselines::forest_to_json(model));
      write_run_json(ctx, *trf, run_json_for_file(model_out));
      ctx.out << json{{"trees", model.trees.size()}, {"oob_accuracy", baselines::oob_accuracy(model, m, labels)}}.dump()
              << "\n";
    };
  });

  // evaluate
  std::string svm_path, rf_path, metrics_out;
  auto* eval = app.add_subcommand("evaluate", "Classification metrics of a network or baseline on a labeled set");
  eval->add_option("--labeled", labeled_path, "Labeled manifest")->required();
  auto* w_opt = eval->add_option("--weights", weights, "Network weights");
  auto* s_opt = eval->add_option("--svm", svm_path, "SVM model JSON");
  auto* r_opt = eval->add_option("--rf", rf_path, "Random forest model JSON");
  w_opt->excludes(s_opt)->excludes(r_opt);
  s_opt->excludes(r_opt);
  eval->add_option("--features", features_path, "Feature matrix for --svm / --rf");
  eval->add_option("--image-root", image_root, "Base directory for relative image paths [manifest dir]");
  eval->add_option("--out", metrics_out, "Also write the metrics JSON here");
  eval->callback([&] {
    action = [&] {
      const auto rows = dataset::parse_labeled_manifest(labeled_path);
      const auto actual = labels_of(rows);
      baselines::Metrics metrics;
      if (!weights.empty()) {
        const auto model = nn::load_weights(weights);
        const auto samples = training::to_samples(
            training::load_images(rows, image_root_for(image_root, labeled_path), model.spec), model.spec.input_mean);
        metrics = training::evaluate(model.spec, model.params.values, samples);
      } else if (!svm_path.empty() || !rf_path.empty()) {
        if (features_path.empty()) throw UsageError("--features is required with --svm or --rf");
        const auto m = baselines::read_features(features_path);
        if (m.rows != rows.size()) throw ShapeError("feature rows do not match the labeled manifest");
        std::vector<int> predicted;
        if (!svm_path.empty()) {
          const auto model = baselines::svm_from_json(util::read_file(svm_path));
          for (std::size_t i = 0; i < m.rows; ++i) predicted.push_back(baselines::svm_predict(model, m.row(i)).label);
        } else {
          const auto model = baselines::forest_from_json(util::read_file(rf_path));
          for (std::size_t i = 0; i < m.rows; ++i) predicted.push_back(baselines::rf_predict(model, m.row(i)));
        }
        metrics = baselines::compute_metrics(predicted, actual);
      } else {
        throw UsageError("evaluate needs one of --weights, --svm or --rf");
      }
      const auto text = baselines::metrics_to_json(metrics);
      if (!metrics_out.empty()) {
        util::write_file(metrics_out, text + "\n");
        write_run_json(ctx, *eval, run_json_for_file(metrics_out));
      }
      ctx.out << text << "\n";
    };
  });

  // rank
  auto* rank = app.add_subcommand("rank", "Order photos by the network's aesthetics probability");
  rank->add_option("--weights", weights, "Network weights")->required();
  rank->add_option("--manifest", manifest, "Manifest (plain or labeled)")->required();
  rank->add_option("--image-root", image_root, "Base directory for relative image paths [manifest dir]");
  rank->add_option("--out", out, "Ranking CSV (photo_id,p1)")->required();
  rank->callback([&] {
    action = [&] {
      const auto model = nn::load_weights(weights);
      const auto rows = read_any_manifest(manifest);
      const auto samples = training::to_samples(
          training::load_images(rows, image_root_for(image_root, manifest), model.spec), model.spec.input_mean);
      const auto ranking = training::rank_by_aesthetics(model.spec, model.params.values, samples);
      training::write_ranking(out, ranking);
      write_run_json(ctx, *rank, run_json_for_file(out));
      ctx.out << json{{"ranked", ranking.size()}}.dump() << "\n";
    };
  });

  // mosaic
  std::string ranking_path;
  std::size_t count = 100, columns = 10, cell = 32;
  auto* mos = app.add_subcommand("mosaic", "Thumbnail grids of the best and worst ranked photos");
  mos->add_option("--ranking", ranking_path, "Ranking CSV from 'rank'")->required();
  mos->add_option("--manifest", manifest, "Manifest holding the image paths")->required();
  mos->add_option("--image-root", image_root, "Base directory for relative image paths [manifest dir]");
  mos->add_option("--count", count, "Photos per grid");
  mos->add_option("--columns", columns, "Grid columns");
  mos->add_option("--cell", cell, "Thumbnail side in pixels");
  mos->add_option("--out-dir", out_dir, "Receives top.ppm and bottom.ppm")->required();
  mos->callback([&] {
    action = [&] {
      const auto ranking = training::parse_ranking(util::read_file(ranking_path));
      const auto rows = read_any_manifest(manifest);
      const auto root = image_root_for(image_root, manifest);
      std::map<std::string, std::string> paths;
      for (const auto& r : rows) paths[r.record.photo_id] = r.record.image_path;
      auto load = [&](const std::string& id) {
        const auto it = paths.find(id);
        if (it == paths.end()) throw DataError("photo " + id + " is ranked but not in the manifest");
        fs::path p(it->second);
        if (p.is_relative()) p = root / p;
        try {
          return imaging::read_ppm(p.string());
        } catch (const Error& e) {
          throw DataError("photo " + id + " (" + p.string() + "): " + e.what());
        }
      };
      const std::size_t n = std::min(count, ranking.size());
      std::vector<imaging::Image> top, bottom;
      for (std::size_t i = 0; i < n; ++i) top.push_back(load(ranking[i].photo_id));
      for (std::size_t i = 0; i < n; ++i) bottom.push_back(load(ranking[ranking.size() - 1 - i].photo_id));
      const auto top_img = imaging::mosaic(top, columns, cell);
      const auto bottom_img = imaging::mosaic(bottom, columns, cell);
      imaging::write_ppm((fs::path(out_dir) / "top.ppm").string(), top_img);
      imaging::write_ppm((fs::path(out_dir) / "bottom.ppm").string(), bottom_img);
      write_run_json(ctx, *mos, run_json_for_dir(out_dir));
      ctx.out << json{{"count", n}, {"width", top_img.width}, {"height", top_img.height}}.dump() << "\n";
    };
  });

  // histogram
  std::size_t bins = 20;
  auto* hist = app.add_subcommand("histogram", "Histogram of aesthetics scores over a manifest");
  hist->add_option("--manifest", manifest, "Photo manifest CSV")->required();
  hist->add_option("--reference-date", ref_date, "Date the view counts were collected (YYYY-MM-DD)");
  hist->add_option("--bins", bins, "Number of equal-width bins");
  hist->add_option("--out", out, "CSV low,high,count (stdout when absent)");
  hist->callback([&] {
    action = [&] {
      const auto scored = dataset::score_records(dataset::parse_manifest(manifest), dataset::parse_date(ref_date));
      std::string text = "low,high,count\n";
      for (const auto& b : dataset::score_histogram(scored, bins)) {
        text += csv::format_double(b.low) + "," + csv::format_double(b.high) + "," + std::to_string(b.count) + "\n";
      }
      if (out.empty()) {
        ctx.out << text;
      } else {
        util::write_file(out, text);
        write_run_json(ctx, *hist, run_json_for_file(out));
      }
    };
  });

  // serve-backend
  std::string bind = "127.0.0.1:9100";
  std::size_t max_payload = service::kDefaultMaxPayload;
  auto* sb = app.add_subcommand("serve-backend", "Framed-protocol inference server");
  sb->add_option("--weights", weights, "Network weights loaded at startup")->required();
  sb->add_option("--bind", bind, "host:port to listen on");
  sb->add_option("--max-payload", max_payload, "Largest accepted request payload in bytes");
  sb->callback([&] {
    action = [&] {
      auto model = std::make_shared<const nn::LoadedModel>(nn::load_weights(weights));
      SignalWait signals;
      service::BackendServer server(model, service::parse_endpoint(bind), {max_payload});
      server.start();
      ctx.err << "backend " << model->spec.model_id << " listening on port " << server.port() << "\n";
      signals.wait();
      server.stop();
    };
  });

  // serve-web
  std::string backend = "127.0.0.1:9100", web_bind = "127.0.0.1:8080", static_dir;
  std::size_t max_upload = service::kDefaultMaxPayload;
  auto* sw = app.add_subcommand("serve-web", "HTTP front end: /api/score, /api/health and static files");
  sw->add_option("--backend", backend, "host:port of the scoring backend");
  sw->add_option("--bind", web_bind, "host:port to listen on");
  sw->add_option("--static-dir", static_dir, "Directory served at /");
  sw->add_option("--max-upload", max_upload, "Largest accepted upload in bytes");
  sw->callback([&] {
    action = [&] {
      service::WebOptions options;
      options.backend = service::parse_endpoint(backend);
      options.static_dir = static_dir;
      options.max_upload = max_upload;
      SignalWait signals;
      service::WebServer server(options);
      const auto port = server.bind(service::parse_endpoint(web_bind));
      server.probe_backend();
      server.start();
      ctx.err << "web server listening on port " << port << "\n";
      signals.wait();
      server.stop();
    };
  });

  // gen-synthetic
  synthetic::Options synth;
  auto* gen = app.add_subcommand("gen-synthetic", "Render a deterministic stand-in corpus");
  gen->add_option("--n", synth.n, "Number of photos");
  gen->add_option("--seed", synth.seed, "Generator seed");
  gen->add_option("--size", synth.image_size, "Image side in pixels");
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->callback([&] {
    action = [&] {
      if (synth.n == 0) throw DomainError("--n must be at least 1");
      if (synth.image_size < 8) throw DomainError("--size must be at least 8");
      synthetic::write_corpus(out_dir, synthetic::generate(synth));
      write_run_json(ctx, *gen, run_json_for_dir(out_dir));
      ctx.out << json{{"photos", synth.n}, {"dir", out_dir}}.dump() << "\n";
    };
  });

  // replay
  std::string run_json_path;
  auto* replay = app.add_subcommand("replay", "Re-run a command from its run.json");
  replay->add_option("run_json", run_json_path, "run.json written by an earlier command")->required();
  replay->callback([&] {
    action = [&] {
      std::vector<std::string> argv{ctx.args.front()};
      try {
        const auto j = json::parse(util::read_file(run_json_path));
        for (const auto& a : j.at("argv")) argv.push_back(a.get<std::string>());
      } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed run.json: ") + e.what());
      }
      if (argv.size() > 1 && argv[1] == "replay") throw ValidationError("refusing to replay a replay");
      exit_code = run(argv, ctx.out, ctx.err);
    };
  });

  std::vector<const char*> argv;
  for (const auto& a : ctx.args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, ctx.out, ctx.err);
    return code == 0 ? 0 : 1;
  }
  if (action) action();
  return exit_code;
}

}  // namespace

}  // namespace aesthetics::cli
