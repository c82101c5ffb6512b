#include "emal/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace emal {

int DecisionTree::predict(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw ValidationError("tree expects dimension " + std::to_string(dim_) + ", got " + std::to_string(x.size()));
  }
  const TreeNode* n = &nodes_.front();
  while (!n->is_leaf()) {
    n = &nodes_[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
  }
  return n->label;
}

int DecisionTree::depth() const {
  std::vector<int> depth(nodes_.size(), 0);
  int best = 0;
  // Children are always stored after their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    best = std::max(best, depth[i]);
    if (!n.is_leaf()) {
      depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
    }
  }
  return best;
}

std::size_t split_feature_count(std::size_t dim) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(dim) + 1.0))));
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

double gini(double pos, double total) {
  if (total <= 0.0) return 0.0;
  const double p = pos / total;
  return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& ex, std::size_t mtry, Rng& rng) : ex_(ex), mtry_(mtry), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    nodes_.clear();
    nodes_.emplace_back();
    grow(0, std::move(rows));
    return DecisionTree(ex_.dim(), std::move(nodes_));
  }

 private:
  // Best threshold for one feature, by weighted Gini decrease.
  Split best_for_feature(std::size_t f, std::vector<std::size_t>& rows, double parent_impurity) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      const double va = ex_.row(a)[f], vb = ex_.row(b)[f];
      return va < vb || (va == vb && a < b);
    });
    const double n = static_cast<double>(rows.size());
    double total_pos = 0;
    for (std::size_t r : rows) total_pos += ex_.label(r);
    Split best;
    double left_pos = 0;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      left_pos += ex_.label(rows[i]);
      const double v = ex_.row(rows[i])[f];
      const double next = ex_.row(rows[i + 1])[f];
      if (v == next) continue;
      const double nl = static_cast<double>(i + 1);
      const double nr = n - nl;
      const double impurity = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / n;
      const double gain = parent_impurity - impurity;
      if (gain > best.gain + 1e-12) {
        best.feature = static_cast<int>(f);
        best.threshold = v + (next - v) / 2.0;
        best.gain = gain;
      }
    }
    return best;
  }

  void grow(std::size_t node, std::vector<std::size_t> rows) {
    std::size_t pos = 0;
    for (std::size_t r : rows) pos += static_cast<std::size_t>(ex_.label(r));
    const int majority = 2 * pos >= rows.size() ? 1 : 0;
    if (pos == 0 || pos == rows.size()) {
      nodes_[node].label = majority;
      return;
    }
    const double parent = gini(static_cast<double>(pos), static_cast<double>(rows.size()));

    std::vector<std::size_t> features(ex_.dim());
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(features);
    const std::size_t first = std::min(mtry_, features.size());

    auto scan = [&](std::size_t begin, std::size_t end) {
      Split best;
      // Ascending feature order so that equal gains go to the lowest index.
      std::vector<std::size_t> batch(features.begin() + static_cast<std::ptrdiff_t>(begin),
                                     features.begin() + static_cast<std::ptrdiff_t>(end));
      std::sort(batch.begin(), batch.end());
      for (std::size_t f : batch) {
        Split s = best_for_feature(f, rows, parent);
        if (s.feature >= 0 && s.gain > best.gain + 1e-12) best = s;
      }
      return best;
    };

    Split best = scan(0, first);
    for (std::size_t k = first; best.feature < 0 && k < features.size(); ++k) best = scan(k, k + 1);
    if (best.feature < 0) {
      nodes_[node].label = majority;
      return;
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      (ex_.row(r)[static_cast<std::size_t>(best.feature)] <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    const int l = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    const int r = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[node].feature = best.feature;
    nodes_[node].threshold = best.threshold;
    nodes_[node].left = l;
    nodes_[node].right = r;
    nodes_[node].label = majority;
    rows.clear();
    rows.shrink_to_fit();
    grow(static_cast<std::size_t>(l), std::move(left_rows));
    grow(static_cast<std::size_t>(r), std::move(right_rows));
  }

  const TrainingSet& ex_;
  std::size_t mtry_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree grow_tree(const TrainingSet& examples, std::span<const std::size_t> rows,
                       std::size_t features_per_split, Rng& rng) {
  if (rows.empty()) throw ValidationError("grow_tree: no rows");
  TreeBuilder b(examples, features_per_split, rng);
  return b.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

ForestModel train_forest(const TrainingSet& examples, int n_trees, Rng& rng) {
  if (n_trees < 1) throw ValidationError("train_forest: n_trees must be >= 1");
  if (!examples.has_both_classes()) throw ValidationError("train_forest: need examples of both classes");
  ForestModel forest;
  forest.dim = examples.dim();
  const std::size_t mtry = split_feature_count(examples.dim());
  const std::size_t n = examples.size();
  const Rng base(rng.next());
  for (int t = 0; t < n_trees; ++t) {
    Rng tree_rng = base.child(static_cast<std::uint64_t>(t));
    std::vector<std::size_t> sample(n);
    for (auto& s : sample) s = tree_rng.below(n);
    forest.trees.push_back(grow_tree(examples, sample, mtry, tree_rng));
  }
  return forest;
}

Votes forest_votes(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.dim) {
    throw ValidationError("forest expects dimension " + std::to_string(model.dim) + ", got " + std::to_string(x.size()));
  }
  Votes v;
  v.total = static_cast<int>(model.trees.size());
  for (const auto& t : model.trees) v.positive += t.predict(x);
  return v;
}

int forest_predict(const ForestModel& model, std::span<const double> x) {
  const Votes v = forest_votes(model, x);
  return 2 * v.positive >= v.total ? 1 : 0;
}

}  // namespace emal
