#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "emal/forest.hpp"
#include "emal/mlp.hpp"
#include "emal/rng.hpp"
#include "emal/rules.hpp"

namespace oracle {

inline double relative_error(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-8});
  return std::fabs(a - b) / scale;
}

/// Max relative error between analytic and central-difference gradients for
/// each parameter group.
inline std::array<double, 6> mlp_gradient_errors(emal::MlpModel model, const emal::TrainingSet& set,
                                                 std::span<const std::size_t> rows, emal::NormMode mode,
                                                 double h = 1e-6) {
  emal::MlpGradients analytic;
  emal::mlp_batch_loss(model, set, rows, mode, nullptr, 0.0, &analytic);
  std::array<double, 6> worst{};
  auto params = emal::parameter_groups(model);
  auto grads = analytic.groups();
  for (std::size_t g = 0; g < params.size(); ++g) {
    for (std::size_t k = 0; k < params[g].size(); ++k) {
      const double saved = params[g][k];
      params[g][k] = saved + h;
      const double up = emal::mlp_batch_loss(model, set, rows, mode, nullptr, 0.0, nullptr);
      params[g][k] = saved - h;
      const double down = emal::mlp_batch_loss(model, set, rows, mode, nullptr, 0.0, nullptr);
      params[g][k] = saved;
      const double numeric = (up - down) / (2 * h);
      // Differences below the finite-difference noise floor carry no signal.
      if (std::fabs(numeric) < 1e-9 && std::fabs(grads[g][k]) < 1e-9) continue;
      worst[g] = std::max(worst[g], relative_error(grads[g][k], numeric));
    }
  }
  return worst;
}

struct BestConjunction {
  std::vector<std::size_t> atoms;
  double precision = 0.0;
};

/// Exhaustive search over conjunctions of up to `max_size` atoms covering at
/// least `min_coverage` positives.
inline BestConjunction best_conjunction(const emal::BooleanSet& set, std::size_t max_size, std::size_t min_coverage) {
  BestConjunction best;
  std::vector<std::size_t> chosen;
  std::function<void(std::size_t)> go = [&](std::size_t start) {
    std::size_t pos = 0, matched = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
      bool ok = true;
      for (auto a : chosen) ok = ok && set.rows[i][a];
      if (!ok) continue;
      ++matched;
      pos += set.labels[i] == 1;
    }
    if (pos >= std::max<std::size_t>(1, min_coverage)) {
      const double p = static_cast<double>(pos) / static_cast<double>(matched);
      if (p > best.precision) best = {chosen, p};
    }
    if (chosen.size() == max_size) return;
    for (std::size_t a = start; a < set.atoms; ++a) {
      chosen.push_back(a);
      go(a + 1);
      chosen.pop_back();
    }
  };
  go(0);
  return best;
}

/// Random tree over `dim` features. Thresholds are multiples of 0.05, so half
/// of them sit exactly on the 0.1 grid and exercise the x <= t edge.
inline emal::DecisionTree random_tree(emal::Rng& rng, std::size_t dim, int max_depth) {
  std::vector<emal::TreeNode> nodes;
  std::function<int(int)> grow = [&](int depth) -> int {
    const int idx = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const bool leaf = depth == max_depth || (depth > 0 && rng.uniform() < 0.25);
    if (leaf) {
      nodes[static_cast<std::size_t>(idx)].label = static_cast<int>(rng.below(2));
      return idx;
    }
    const int f = static_cast<int>(rng.below(dim));
    const double thr = static_cast<double>(rng.below(20) + 1) / 20.0;
    const int l = grow(depth + 1);
    const int r = grow(depth + 1);
    auto& n = nodes[static_cast<std::size_t>(idx)];
    n.feature = f;
    n.threshold = thr;
    n.left = l;
    n.right = r;
    return idx;
  };
  grow(0);
  return emal::DecisionTree(dim, std::move(nodes));
}

inline int recursive_depth(const emal::DecisionTree& t, int node = 0) {
  const auto& n = t.nodes()[static_cast<std::size_t>(node)];
  if (n.is_leaf()) return 0;
  return 1 + std::max(recursive_depth(t, n.left), recursive_depth(t, n.right));
}

/// Calls f on every point of a grid with `steps` values in [0, 1] per feature.
inline void for_each_grid_point(std::size_t dim, int steps, const std::function<void(std::span<const double>)>& f) {
  std::vector<int> idx(dim, 0);
  std::vector<double> x(dim, 0.0);
  while (true) {
    for (std::size_t d = 0; d < dim; ++d) x[d] = static_cast<double>(idx[d]) / static_cast<double>(steps - 1);
    f(x);
    std::size_t d = 0;
    while (d < dim && ++idx[d] == steps) idx[d++] = 0;
    if (d == dim) return;
  }
}

}  // namespace oracle
