#include "emal/evaluator.hpp"

#include <algorithm>
#include <cstdio>

namespace emal {

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m;
  m.tp = tp, m.fp = fp, m.fn = fn, m.tn = tn;
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

Metrics prf1(std::span<const int> predictions, std::span<const int> gold) {
  if (predictions.size() != gold.size()) throw ValidationError("prf1: prediction and gold sizes differ");
  if (gold.empty()) throw ValidationError("prf1: empty evaluation set");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i] == 1) {
      (gold[i] == 1 ? tp : fp)++;
    } else {
      (gold[i] == 1 ? fn : tn)++;
    }
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

int NumericDnf::evaluate(std::span<const double> x) const {
  for (const auto& c : conjuncts) {
    if (std::all_of(c.begin(), c.end(), [&](const NumericAtom& a) { return a.holds(x); })) return 1;
  }
  return 0;
}

namespace {
void collect(const DecisionTree& tree, int node, std::vector<NumericAtom>& path, NumericDnf& out) {
  const TreeNode& n = tree.nodes()[static_cast<std::size_t>(node)];
  if (n.is_leaf()) {
    if (n.label == 1) out.conjuncts.push_back(path);
    return;
  }
  const auto f = static_cast<std::size_t>(n.feature);
  path.push_back({f, true, n.threshold});
  collect(tree, n.left, path, out);
  path.back() = {f, false, n.threshold};
  collect(tree, n.right, path, out);
  path.pop_back();
}
}  // namespace

NumericDnf tree_to_dnf(const DecisionTree& tree) {
  NumericDnf out;
  if (tree.nodes().empty()) return out;
  std::vector<NumericAtom> path;
  collect(tree, 0, path, out);
  return out;
}

std::size_t count_atoms(const NumericDnf& dnf) {
  std::size_t n = 0;
  for (const auto& c : dnf.conjuncts) n += c.size();
  return n;
}

std::size_t count_atoms(const DnfModel& model) {
  std::size_t n = 0;
  for (const auto& r : model.rules) n += r.atoms.size();
  return n;
}

std::size_t count_atoms(const ForestModel& forest) {
  std::size_t n = 0;
  for (const auto& t : forest.trees) n += count_atoms(tree_to_dnf(t));
  return n;
}

int forest_depth(const ForestModel& forest) {
  int d = 0;
  for (const auto& t : forest.trees) d = std::max(d, t.depth());
  return d;
}

std::string describe(const NumericDnf& dnf, const FeatureSchema* schema) {
  if (dnf.conjuncts.empty()) return "FALSE";
  std::string s;
  char buf[64];
  for (std::size_t k = 0; k < dnf.conjuncts.size(); ++k) {
    if (k) s += "\nOR ";
    s += "(";
    if (dnf.conjuncts[k].empty()) s += "TRUE";
    for (std::size_t i = 0; i < dnf.conjuncts[k].size(); ++i) {
      const auto& a = dnf.conjuncts[k][i];
      if (i) s += " AND ";
      s += schema ? schema->name(a.feature) : "x" + std::to_string(a.feature);
      std::snprintf(buf, sizeof buf, " %s %.4g", a.at_most ? "<=" : ">", a.threshold);
      s += buf;
    }
    s += ")";
  }
  return s;
}

std::size_t labels_to_convergence(std::span<const LabelPoint> series, double epsilon, std::size_t window) {
  if (series.empty()) return 0;
  if (window == 0) window = 1;
  for (std::size_t i = 0; i + window <= series.size(); ++i) {
    double lo = series[i].f1, hi = series[i].f1;
    for (std::size_t k = i; k < i + window; ++k) {
      lo = std::min(lo, series[k].f1);
      hi = std::max(hi, series[k].f1);
    }
    if (hi - lo <= epsilon) return series[i].labels;
  }
  return series.back().labels;
}

std::optional<std::size_t> labels_to_reach(std::span<const LabelPoint> series, double target) {
  for (const auto& p : series) {
    if (p.f1 >= target) return p.labels;
  }
  return std::nullopt;
}

}  // namespace emal
