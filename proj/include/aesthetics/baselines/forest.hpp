#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aesthetics/baselines/features.hpp"

namespace aesthetics::baselines {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  float threshold = 0.0f;  // x[feature] <= threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::array<std::uint32_t, 2> counts{0, 0};  // class counts of the bootstrap rows reaching this node

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::uint64_t seed = 0;       // derives the bootstrap sample and feature draws

  int predict(std::span<const float> x) const;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::size_t n_trees = 0;
  std::size_t n_features = 0;
  std::size_t max_depth = 12;
  std::uint64_t seed = 0;
};

// Each tree: bootstrap of n rows, Gini splits over floor(sqrt(d)) randomly
// drawn candidate features per node (falling back to the remaining features
// when none of the drawn ones can split), grown until pure or max_depth.
ForestModel rf_train(const FeatureMatrix& features, std::span<const int> labels, std::size_t n_trees,
                     std::size_t max_depth, std::uint64_t seed);

// Majority vote; ties go to 0.
int rf_predict(const ForestModel& model, std::span<const float> x);

// Bootstrap membership of each training row for tree `t`, regenerated from the
// tree's seed.
std::vector<std::uint32_t> bootstrap_counts(const DecisionTree& tree, std::size_t n_rows);

// Out-of-bag accuracy: every row is voted on only by trees that did not draw
// it. Rows drawn by every tree are skipped.
double oob_accuracy(const ForestModel& model, const FeatureMatrix& features, std::span<const int> labels);

std::string forest_to_json(const ForestModel& model);
ForestModel forest_from_json(std::string_view text);

}  // namespace aesthetics::baselines
