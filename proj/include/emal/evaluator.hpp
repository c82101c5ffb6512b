#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emal/forest.hpp"
#include "emal/rules.hpp"

namespace emal {

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Confusion counts over paired prediction/gold vectors. Precision with no
/// predicted positives is 0, and F1 is 0 when P + R = 0.
Metrics prf1(std::span<const int> predictions, std::span<const int> gold);
Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn = 0);

/// Threshold test taken from a tree path: x[feature] <= threshold when
/// `at_most`, x[feature] > threshold otherwise.
struct NumericAtom {
  std::size_t feature = 0;
  bool at_most = true;
  double threshold = 0.0;
  bool holds(std::span<const double> x) const { return at_most ? x[feature] <= threshold : x[feature] > threshold; }
  bool operator==(const NumericAtom&) const = default;
};

struct NumericDnf {
  std::vector<std::vector<NumericAtom>> conjuncts;
  int evaluate(std::span<const double> x) const;
};

/// One conjunct per positive leaf, one atom per edge on its path; no
/// simplification.
NumericDnf tree_to_dnf(const DecisionTree& tree);

std::size_t count_atoms(const NumericDnf& dnf);
std::size_t count_atoms(const DnfModel& model);
/// Sum over trees of their path-DNF atom counts.
std::size_t count_atoms(const ForestModel& forest);
int forest_depth(const ForestModel& forest);

std::string describe(const NumericDnf& dnf, const FeatureSchema* schema = nullptr);

/// Point of an F1 trajectory.
struct LabelPoint {
  std::size_t labels = 0;
  double f1 = 0.0;
};

/// Smallest labels_used L at row i such that F1 varies by at most epsilon
/// over rows [i, i + window). Falls back to the last row's labels when no
/// such row exists.
std::size_t labels_to_convergence(std::span<const LabelPoint> series, double epsilon = 0.005, std::size_t window = 10);

/// First labels_used at which F1 reaches `target`, if ever.
std::optional<std::size_t> labels_to_reach(std::span<const LabelPoint> series, double target);

}  // namespace emal
