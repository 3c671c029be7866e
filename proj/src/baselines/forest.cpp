#include "aesthetics/baselines/forest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

#include "aesthetics/error.hpp"
#include "aesthetics/util.hpp"

namespace aesthetics::baselines {

namespace {

double gini(double n0, double n1) {
  const double n = n0 + n1;
  if (n <= 0) return 0.0;
  const double p0 = n0 / n;
  const double p1 = n1 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct Split {
  int feature = -1;
  float threshold = 0.0f;
  double impurity = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int> y, std::size_t max_depth, std::uint64_t seed)
      : x_(x), y_(y), max_depth_(max_depth), rng_(seed) {
    mtry_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols)))));
  }

  DecisionTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::array<std::uint32_t, 2> counts{0, 0};
    for (auto r : rows) ++counts[static_cast<std::size_t>(y_[r])];
    tree_.nodes[id].counts = counts;
    if (counts[0] == 0 || counts[1] == 0 || depth >= max_depth_ || rows.size() < 2) return id;

    const auto split = choose_split(rows);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) {
      (x_.row(r)[static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const auto l = grow(std::move(left), depth + 1);
    const auto r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  Split choose_split(const std::vector<std::size_t>& rows) {
    // Random feature order: the first mtry are the candidates, the rest are a
    // fallback when no candidate has two distinct values.
    std::vector<std::size_t> order(x_.cols);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_() % (order.size() - i));
      std::swap(order[i], order[j]);
    }
    Split best;
    best.impurity = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k >= mtry_ && best.feature >= 0) break;
      evaluate_feature(rows, order[k], best);
    }
    return best;
  }

  void evaluate_feature(const std::vector<std::size_t>& rows, std::size_t f, Split& best) {
    std::vector<std::pair<float, int>> vals;
    vals.reserve(rows.size());
    for (auto r : rows) vals.emplace_back(x_.row(r)[f], y_[r]);
    std::sort(vals.begin(), vals.end());
    double total[2] = {0, 0};
    for (const auto& v : vals) total[v.second] += 1;
    double left[2] = {0, 0};
    const double n = static_cast<double>(vals.size());
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      left[vals[i].second] += 1;
      if (vals[i].first == vals[i + 1].first) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      const double imp = (nl * gini(left[0], left[1]) + nr * gini(total[0] - left[0], total[1] - left[1])) / n;
      if (imp < best.impurity) {
        float mid = static_cast<float>((static_cast<double>(vals[i].first) + vals[i + 1].first) / 2.0);
        if (!(mid < vals[i + 1].first)) mid = vals[i].first;
        best = {static_cast<int>(f), mid, imp};
      }
    }
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  std::size_t max_depth_;
  std::size_t mtry_ = 1;
  std::mt19937_64 rng_;
  DecisionTree tree_;
};

std::vector<std::size_t> bootstrap_rows(std::uint64_t tree_seed, std::size_t n) {
  std::mt19937_64 rng(util::mix(tree_seed, 0xb007));
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(rng() % n);
  return rows;
}

}  // namespace

int DecisionTree::predict(std::span<const float> x) const {
  std::uint32_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[i].counts[1] > nodes[i].counts[0] ? 1 : 0;
}

ForestModel rf_train(const FeatureMatrix& features, std::span<const int> labels, std::size_t n_trees,
                     std::size_t max_depth, std::uint64_t seed) {
  if (features.rows == 0) throw DomainError("rf_train needs at least one sample");
  if (labels.size() != features.rows) throw ShapeError("label count does not match feature rows");
  if (n_trees == 0) throw DomainError("n_trees must be at least 1");
  bool has[2] = {false, false};
  for (int l : labels) {
    if (l != 0 && l != 1) throw DomainError("labels must be 0 or 1");
    has[l] = true;
  }
  if (!has[0] || !has[1]) throw DomainError("training data must contain both classes");

  ForestModel model;
  model.n_trees = n_trees;
  model.n_features = features.cols;
  model.max_depth = max_depth;
  model.seed = seed;
  for (std::size_t t = 0; t < n_trees; ++t) {
    const std::uint64_t tree_seed = util::mix(seed, t);
    TreeBuilder builder(features, labels, max_depth, tree_seed);
    auto tree = builder.build(bootstrap_rows(tree_seed, features.rows));
    tree.seed = tree_seed;
    model.trees.push_back(std::move(tree));
  }
  return model;
}

int rf_predict(const ForestModel& model, std::span<const float> x) {
  if (x.size() != model.n_features) {
    throw ShapeError("rf_predict: expected " + std::to_string(model.n_features) + " features, got " +
                     std::to_string(x.size()));
  }
  std::size_t ones = 0;
  for (const auto& tree : model.trees) ones += static_cast<std::size_t>(tree.predict(x));
  return 2 * ones > model.trees.size() ? 1 : 0;
}

std::vector<std::uint32_t> bootstrap_counts(const DecisionTree& tree, std::size_t n_rows) {
  std::vector<std::uint32_t> counts(n_rows, 0);
  for (auto r : bootstrap_rows(tree.seed, n_rows)) ++counts[r];
  return counts;
}

double oob_accuracy(const ForestModel& model, const FeatureMatrix& features, std::span<const int> labels) {
  std::vector<std::vector<std::uint32_t>> in_bag;
  for (const auto& tree : model.trees) in_bag.push_back(bootstrap_counts(tree, features.rows));
  std::size_t correct = 0, voted = 0;
  for (std::size_t i = 0; i < features.rows; ++i) {
    std::size_t ones = 0, n = 0;
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      if (in_bag[t][i] != 0) continue;
      ones += static_cast<std::size_t>(model.trees[t].predict(features.row(i)));
      ++n;
    }
    if (n == 0) continue;
    const int pred = 2 * ones > n ? 1 : 0;
    correct += pred == labels[i] ? 1 : 0;
    ++voted;
  }
  return voted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(voted);
}

std::string forest_to_json(const ForestModel& model) {
  nlohmann::json j;
  j["type"] = "random_forest";
  j["n_trees"] = model.n_trees;
  j["n_features"] = model.n_features;
  j["max_depth"] = model.max_depth;
  j["seed"] = model.seed;
  j["trees"] = nlohmann::json::array();
  for (const auto& tree : model.trees) {
    nlohmann::json t;
    t["seed"] = tree.seed;
    t["nodes"] = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
      t["nodes"].push_back({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1]});
    }
    j["trees"].push_back(std::move(t));
  }
  return j.dump();
}

ForestModel forest_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("type") != "random_forest") throw LoadError("model file is not a random forest");
    ForestModel m;
    m.n_trees = j.at("n_trees").get<std::size_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.max_depth = j.at("max_depth").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      tree.seed = t.at("seed").get<std::uint64_t>();
      for (const auto& n : t.at("nodes")) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<float>();
        node.left = n.at(2).get<std::uint32_t>();
        node.right = n.at(3).get<std::uint32_t>();
        node.counts = {n.at(4).get<std::uint32_t>(), n.at(5).get<std::uint32_t>()};
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw LoadError("tree without nodes");
      for (const auto& node : tree.nodes) {
        if (!node.is_leaf() && (node.left >= tree.nodes.size() || node.right >= tree.nodes.size() ||
                                static_cast<std::size_t>(node.feature) >= m.n_features)) {
          throw LoadError("tree node references out of range");
        }
      }
      m.trees.push_back(std::move(tree));
    }
    if (m.trees.size() != m.n_trees) throw LoadError("tree count mismatch");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed forest model: ") + e.what());
  }
}

}  // namespace aesthetics::baselines
