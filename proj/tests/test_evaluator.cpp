#include <doctest.h>

#include <algorithm>

#include "emal/evaluator.hpp"
#include "support/oracles.hpp"

using namespace emal;

TEST_CASE("prf1") {
  std::vector<int> gold{1, 1, 0, 0, 1};
  CHECK(prf1(gold, gold).f1 == 1.0);
  std::vector<int> zeros(5, 0);
  auto m = prf1(zeros, gold);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  auto c = metrics_from_counts(90, 10, 10);
  CHECK(c.precision == doctest::Approx(0.9));
  CHECK(c.recall == doctest::Approx(0.9));
  CHECK(c.f1 == doctest::Approx(0.9));
  CHECK_THROWS_AS(prf1(std::vector<int>{}, std::vector<int>{}), ValidationError);

  // permutation invariance
  Rng rng(1);
  std::vector<int> p(50), g(50);
  for (int i = 0; i < 50; ++i) p[i] = rng.below(2), g[i] = rng.below(2);
  auto base = prf1(p, g);
  std::vector<std::size_t> order(50);
  for (std::size_t i = 0; i < 50; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<int> p2, g2;
  for (auto i : order) p2.push_back(p[i]), g2.push_back(g[i]);
  CHECK(prf1(p2, g2).f1 == base.f1);
}

TEST_CASE("tree to DNF") {
  // stump: x0 <= 0.5 -> 0 else 1
  DecisionTree stump(1, {TreeNode{0, 0.5, 1, 2, 0}, TreeNode{-1, 0, -1, -1, 0}, TreeNode{-1, 0, -1, -1, 1}});
  auto d = tree_to_dnf(stump);
  CHECK(d.conjuncts.size() == 1);
  CHECK(count_atoms(d) == 1);

  // depth 2, three positive leaves
  DecisionTree t(2, {TreeNode{0, 0.5, 1, 4, 0}, TreeNode{1, 0.5, 2, 3, 0}, TreeNode{-1, 0, -1, -1, 1},
                     TreeNode{-1, 0, -1, -1, 1}, TreeNode{1, 0.3, 5, 6, 0}, TreeNode{-1, 0, -1, -1, 0},
                     TreeNode{-1, 0, -1, -1, 1}});
  auto dt = tree_to_dnf(t);
  CHECK(dt.conjuncts.size() == 3);
  CHECK(count_atoms(dt) == 6);
  CHECK(t.depth() == 2);

  Rng rng(5);
  for (int k = 0; k < 30; ++k) {
    auto tree = oracle::random_tree(rng, 3, 4);
    auto dnf = tree_to_dnf(tree);
    oracle::for_each_grid_point(3, 11, [&](std::span<const double> x) { REQUIRE(dnf.evaluate(x) == tree.predict(x)); });
    CHECK(tree.depth() == oracle::recursive_depth(tree));
  }
}

TEST_CASE("atom counting and depth") {
  ForestModel empty;
  CHECK(count_atoms(empty) == 0);
  CHECK(count_atoms(DnfModel{}) == 0);
  DnfModel rules{AtomSpace(1), {ConjunctiveRule{{1, 2}}, ConjunctiveRule{{2, 3, 4}}}};
  CHECK(count_atoms(rules) == 5);

  Rng rng(2);
  ForestModel f;
  f.dim = 4;
  std::size_t sum = 0;
  int depth = 0;
  for (int k = 0; k < 8; ++k) {
    f.trees.push_back(oracle::random_tree(rng, 4, 5));
    sum += count_atoms(tree_to_dnf(f.trees.back()));
    depth = std::max(depth, oracle::recursive_depth(f.trees.back()));
  }
  CHECK(count_atoms(f) == sum);
  CHECK(forest_depth(f) == depth);

  ForestModel leaf{1, {DecisionTree(1, {TreeNode{-1, 0, -1, -1, 1}})}};
  CHECK(forest_depth(leaf) == 0);
  ForestModel stumps{1, {DecisionTree(1, {TreeNode{0, 0.5, 1, 2, 0}, TreeNode{}, TreeNode{-1, 0, -1, -1, 1}})}};
  CHECK(forest_depth(stumps) == 1);
}

TEST_CASE("labels to convergence") {
  std::vector<LabelPoint> flat;
  for (int i = 0; i < 30; ++i) flat.push_back({static_cast<std::size_t>(30 + 10 * i), 0.8});
  CHECK(labels_to_convergence(flat) == 30);

  std::vector<LabelPoint> rising;
  for (int i = 0; i < 30; ++i) rising.push_back({static_cast<std::size_t>(30 + 10 * i), 0.01 * i});
  CHECK(labels_to_convergence(rising) == rising.back().labels);

  // improves until iteration 50, then plateaus with tiny wiggle
  std::vector<LabelPoint> plateau;
  for (int i = 0; i <= 80; ++i) {
    const double f1 = i < 50 ? 0.3 + 0.01 * i : 0.8 + (i % 2 ? 0.002 : 0.0);
    plateau.push_back({static_cast<std::size_t>(30 + 10 * i), f1});
  }
  const auto got = labels_to_convergence(plateau, 0.005, 10);
  CHECK(got == 30 + 10 * 50);
  // scan oracle
  std::size_t expect = plateau.back().labels;
  for (std::size_t i = 0; i + 10 <= plateau.size(); ++i) {
    double lo = 1, hi = 0;
    for (std::size_t k = i; k < i + 10; ++k) lo = std::min(lo, plateau[k].f1), hi = std::max(hi, plateau[k].f1);
    if (hi - lo <= 0.005) {
      expect = plateau[i].labels;
      break;
    }
  }
  CHECK(got == expect);
  CHECK(labels_to_reach(plateau, 0.8) == 530u);
  CHECK_FALSE(labels_to_reach(plateau, 0.9));
}
