#pragma once

#include <span>
#include <vector>

#include "emal/rng.hpp"
#include "emal/training_set.hpp"

namespace emal {

/// Internal nodes send x[feature] <= threshold left, everything else right.
struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;  // leaf prediction
  bool is_leaf() const { return feature < 0; }
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::size_t dim, std::vector<TreeNode> nodes) : dim_(dim), nodes_(std::move(nodes)) {}

  int predict(std::span<const double> x) const;
  /// Longest root-to-leaf path in edges; a single leaf has depth 0.
  int depth() const;
  std::size_t dim() const { return dim_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& root() const { return nodes_.front(); }

 private:
  std::size_t dim_ = 0;
  std::vector<TreeNode> nodes_;  // nodes_[0] is the root
};

struct ForestModel {
  std::size_t dim = 0;
  std::vector<DecisionTree> trees;
};

/// floor(log2(dim + 1)), at least 1.
std::size_t split_feature_count(std::size_t dim);

/// Grows an unpruned tree on `rows` of `examples` (duplicates allowed).
/// Each split examines `features_per_split` random features by Gini gain;
/// when none of them helps, the remaining features are tried in random
/// order before giving up and emitting a leaf.
DecisionTree grow_tree(const TrainingSet& examples, std::span<const std::size_t> rows,
                       std::size_t features_per_split, Rng& rng);

/// Each tree is grown on a bootstrap resample with its own child stream, so
/// the forest does not depend on training order.
ForestModel train_forest(const TrainingSet& examples, int n_trees, Rng& rng);

struct Votes {
  int positive = 0;
  int total = 0;
};

Votes forest_votes(const ForestModel& model, std::span<const double> x);
/// Majority vote; a split vote predicts 1.
int forest_predict(const ForestModel& model, std::span<const double> x);

}  // namespace emal
