#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "emal/dataset.hpp"
#include "emal/selectors.hpp"

using namespace emal;

namespace {

std::vector<PairId> all_ids(std::size_t n) {
  std::vector<PairId> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t dim, Rng& rng) {
  FeatureMatrix m(rows, dim);
  for (std::size_t i = 0; i < rows; ++i) {
    for (auto& v : m.row(i)) v = rng.uniform();
  }
  return m;
}

LinearModel random_linear(std::size_t dim, Rng& rng) {
  LinearModel m;
  m.weights.resize(dim);
  for (auto& w : m.weights) w = rng.normal(0, 1);
  m.bias = rng.normal(0, 0.5);
  return m;
}

// Smallest |w.x + b| first, ties by id, from a full scan.
std::vector<PairId> scan_margin(const LinearModel& m, const FeatureMatrix& x, std::span<const PairId> pool,
                                std::size_t batch) {
  std::vector<std::pair<double, PairId>> s;
  for (PairId id : pool) {
    double v = m.bias;
    auto row = x.row(static_cast<std::size_t>(id));
    for (std::size_t d = 0; d < row.size(); ++d) v += m.weights[d] * row[d];
    s.emplace_back(std::fabs(v), id);
  }
  std::sort(s.begin(), s.end());
  std::vector<PairId> out;
  for (std::size_t i = 0; i < std::min(batch, s.size()); ++i) out.push_back(s[i].second);
  return out;
}

TrainingSet labeled_from(const Dataset& d, std::size_t n) {
  TrainingSet ts(d.features.dim());
  for (std::size_t i = 0; i < n; ++i) ts.add(static_cast<PairId>(i), d.features.row(i), d.gold_label(static_cast<PairId>(i)));
  return ts;
}

}  // namespace

TEST_CASE("variance matches the committee vote variance") {
  for (int c = 1; c <= 25; ++c) {
    for (int p = 0; p <= c; ++p) {
      // population variance of the 0/1 vote vector
      double mean = static_cast<double>(p) / c, acc = 0.0;
      for (int i = 0; i < c; ++i) {
        const double v = i < p ? 1.0 : 0.0;
        acc += (v - mean) * (v - mean);
      }
      CHECK(variance(p, c) == doctest::Approx(acc / c).epsilon(1e-12));
    }
  }
  CHECK(variance(10, 20) == 0.25);
  CHECK_THROWS_AS(variance(3, 2), ValidationError);
  CHECK_THROWS_AS(variance(0, 0), ValidationError);
}

TEST_CASE("select_by_variance: top of the full ranking, ties at the cut are random") {
  std::vector<PairId> ids{0, 1, 2, 3, 4, 5, 6};
  std::vector<double> var{0.1, 0.25, 0.0, 0.25, 0.16, 0.16, 0.16};
  std::map<PairId, int> seen;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(s);
    auto got = select_by_variance(ids, var, 3, rng);
    REQUIRE(got.size() == 3);
    CHECK(got[0] == 1);
    CHECK(got[1] == 3);
    CHECK((got[2] == 4 || got[2] == 5 || got[2] == 6));
    ++seen[got[2]];
  }
  CHECK(seen.size() == 3);
  for (auto& [id, n] : seen) CHECK(n > 30);

  Rng rng(1);
  CHECK(select_by_variance(ids, var, 20, rng).size() == ids.size());
  CHECK(select_by_variance(ids, var, 0, rng).empty());
}

TEST_CASE("forest_qbc over a forest equals committee selection over its trees") {
  auto d = make_synthetic({.pairs = 400, .seed = 3});
  MatrixFeatureSource src(d.features);
  auto ts = labeled_from(d, 120);
  Rng train(9);
  auto forest = train_forest(ts, 20, train);
  std::vector<Model> committee;
  for (const auto& t : forest.trees) committee.push_back(ForestModel{forest.dim, {t}});
  std::vector<PairId> pool;
  for (PairId id = 120; id < 400; ++id) pool.push_back(id);
  Rng a(4), b(4);
  auto f = forest_qbc_select(forest, src, pool, 10, a);
  auto c = committee_select(committee, src, pool, 10, b);
  CHECK(f.chosen == c.chosen);
  CHECK(f.committee_creation_ms == 0.0);
}

TEST_CASE("qbc committee is independent of the worker count") {
  auto d = make_synthetic({.pairs = 300, .seed = 5});
  auto ts = labeled_from(d, 80);
  for (auto kind : {LearnerKind::linear, LearnerKind::forest}) {
    Rng a(2), b(2);
    auto one = build_committee(kind, ts, {}, 6, a, 1);
    auto three = build_committee(kind, ts, {}, 6, b, 3);
    MatrixFeatureSource src(d.features);
    std::vector<double> x(src.dim());
    for (PairId id = 80; id < 300; ++id) {
      src.fill(id, x);
      for (std::size_t m = 0; m < one.size(); ++m) CHECK(predict(one[m], x) == predict(three[m], x));
    }
  }
  TrainingSet single(2);
  single.add(0, std::vector<double>{0.1, 0.1}, 0);
  single.add(1, std::vector<double>{0.2, 0.1}, 0);
  Rng r(1);
  CHECK_THROWS_AS(build_committee(LearnerKind::linear, single, {}, 4, r), ValidationError);
  CHECK_THROWS_AS(build_committee(LearnerKind::linear, ts, {}, 1, r), ValidationError);
}

TEST_CASE("margin selection agrees with a full scan") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_matrix(150, 7, rng);
    auto m = random_linear(7, rng);
    MatrixFeatureSource src(x);
    auto pool = all_ids(150);
    auto got = margin_select(m, src, pool, 12);
    CHECK(got.chosen == scan_margin(m, x, pool, 12));
    CHECK(got.dot_products == 150);
    CHECK(got.committee_creation_ms == 0.0);
  }
  Rng r(1);
  CHECK_THROWS_AS(margin_select(ForestModel{}, MatrixFeatureSource(random_matrix(3, 2, r)), all_ids(3), 1),
                  ValidationError);
}

TEST_CASE("blocked margin: K=Dim reproduces margin selection, K=1 skips null rows") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_matrix(120, 5, rng);
    for (std::size_t i = 0; i < 120; i += 4) std::fill(x.row(i).begin(), x.row(i).end(), 0.0);
    auto m = random_linear(5, rng);
    MatrixFeatureSource src(x);
    auto pool = all_ids(120);
    auto full = margin_select(m, src, pool, 10);
    auto all = blocked_margin_select(m, src, pool, 10, 5);
    CHECK(all.chosen == full.chosen);
    auto one = blocked_margin_select(m, src, pool, 10, 1);
    CHECK(one.chosen == full.chosen);
    CHECK(one.skipped == 30);
    CHECK(one.dot_products == 90);
  }
  LinearModel m{{0.5, -2.0, 2.0, 0.1}, 0.0};
  CHECK(blocking_dims(m, 2) == std::vector<std::size_t>{1, 2});
  CHECK(blocking_dims(m, 9).size() == 4);
  CHECK_THROWS_AS(blocking_dims(m, 0), ValidationError);
}

TEST_CASE("lfp/lfn selection") {
  auto d = make_synthetic({.pairs = 600, .seed = 11});
  MatrixFeatureSource src(d.features);
  DnfModel accepted{d.atoms, {}};
  // JaroWinkler(attr0) >= 0.6 AND JaccardSim(attr1) >= 0.5
  ConjunctiveRule cand{{AtomSpace::id(0, 1, 6), AtomSpace::id(1, 2, 5)}};
  std::sort(cand.atoms.begin(), cand.atoms.end());
  auto pool = all_ids(600);

  auto r = lfp_lfn_select(accepted, cand, src, pool, 9);
  REQUIRE(r.chosen.size() == 9);
  REQUIRE(r.tags.size() == 9);
  CHECK(std::count(r.tags.begin(), r.tags.end(), "LFP") == 5);
  const auto relaxed = rule_minus(cand);
  std::vector<double> x(src.dim());
  double prev_lfp = -1, prev_lfn = 2;
  for (std::size_t i = 0; i < 9; ++i) {
    src.fill(r.chosen[i], x);
    const bool in_rule = rule_matches_features(cand, d.atoms, x);
    if (r.tags[i] == "LFP") {
      CHECK(in_rule);
      CHECK(agg_score(x) >= prev_lfp);
      prev_lfp = agg_score(x);
    } else {
      CHECK_FALSE(in_rule);
      CHECK(std::any_of(relaxed.begin(), relaxed.end(),
                        [&](const ConjunctiveRule& q) { return rule_matches_features(q, d.atoms, x); }));
      CHECK(agg_score(x) <= prev_lfn);
      prev_lfn = agg_score(x);
    }
  }
  // the LFP head is the lowest-scoring matched pair overall
  double lowest = 2;
  for (PairId id : pool) {
    src.fill(id, x);
    if (rule_matches_features(cand, d.atoms, x)) lowest = std::min(lowest, agg_score(x));
  }
  src.fill(r.chosen[0], x);
  CHECK(agg_score(x) == lowest);

  // pairs covered by an accepted rule are never proposed
  accepted.rules.push_back(cand);
  auto r2 = lfp_lfn_select(accepted, cand, src, pool, 9);
  CHECK(std::count(r2.tags.begin(), r2.tags.end(), "LFP") == 0);
  for (PairId id : r2.chosen) {
    src.fill(id, x);
    CHECK_FALSE(dnf_predict_features(accepted, x));
  }

  CHECK(lfp_lfn_select(accepted, cand, src, std::vector<PairId>{}, 9).chosen.empty());
}

TEST_CASE("random selection draws distinct pool members uniformly") {
  auto pool = all_ids(20);
  std::vector<int> freq(20, 0);
  for (std::uint64_t s = 0; s < 2000; ++s) {
    Rng rng(s);
    auto r = random_select(pool, 5, rng);
    REQUIRE(r.chosen.size() == 5);
    CHECK(std::set<PairId>(r.chosen.begin(), r.chosen.end()).size() == 5);
    for (auto id : r.chosen) ++freq[static_cast<std::size_t>(id)];
  }
  // expected 500 each; chi-square with 19 dof, 0.999 quantile ~ 43.8
  double chi = 0;
  for (int f : freq) chi += (f - 500.0) * (f - 500.0) / 500.0;
  CHECK(chi < 43.8);
  Rng rng(1);
  auto small = random_select(all_ids(3), 5, rng);
  CHECK(small.chosen.size() == 3);
  CHECK(small.short_batch);
}

TEST_CASE("ensemble gate") {
  // candidate: match iff x0 >= 0.5
  LinearModel cand{{1.0}, -0.5};
  FeatureMatrix x(20, 1);
  for (std::size_t i = 0; i < 20; ++i) x.row(i)[0] = static_cast<double>(i) / 20.0;
  MatrixFeatureSource src(x);

  SUBCASE("precision 0.9 is accepted and predicted matches leave both pools") {
    EnsembleState st;
    st.tau = 0.85;
    std::vector<PairId> batch{10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 0};
    std::vector<int> labels{1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0};
    std::vector<PairId> labeled = batch;
    std::vector<PairId> pool{1, 2, 3, 4, 5, 6, 7, 8, 9};
    auto out = ensemble_step(st, cand, src, batch, labels, labeled, pool, 3);
    CHECK(out.accepted);
    CHECK(*out.precision == doctest::Approx(0.9));
    CHECK(labeled == std::vector<PairId>{0});
    CHECK(pool == std::vector<PairId>{1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(st.accepted.size() == 1);
    CHECK(st.accepted[0].iteration == 3);
    CHECK(st.predict(std::vector<double>{0.7}) == 1);
    CHECK(st.predict(std::vector<double>{0.2}) == 0);
  }
  SUBCASE("precision 0.5 is rejected and nothing moves") {
    EnsembleState st;
    st.tau = 0.85;
    std::vector<PairId> batch{10, 11, 12, 13};
    std::vector<int> labels{1, 0, 1, 0};
    std::vector<PairId> labeled = batch, pool{14, 15, 1};
    auto out = ensemble_step(st, cand, src, batch, labels, labeled, pool);
    CHECK_FALSE(out.accepted);
    CHECK(*out.precision == 0.5);
    CHECK(labeled.size() == 4);
    CHECK(pool.size() == 3);
    CHECK(st.accepted.empty());
  }
  SUBCASE("no predicted match in the batch means no decision") {
    EnsembleState st;
    std::vector<PairId> batch{1, 2}, labeled = batch, pool{15};
    std::vector<int> labels{0, 0};
    auto out = ensemble_step(st, cand, src, batch, labels, labeled, pool);
    CHECK_FALSE(out.accepted);
    CHECK_FALSE(out.precision.has_value());
  }
}

TEST_CASE("scoring time grows roughly linearly with the pool") {
  Rng rng(3);
  auto x = random_matrix(100000, 20, rng);
  MatrixFeatureSource src(x);
  auto m = random_linear(20, rng);
  auto timed = [&](std::size_t n) {
    auto pool = all_ids(n);
    std::vector<double> t;
    for (int k = 0; k < 5; ++k) t.push_back(margin_select(m, src, pool, 10).scoring_ms);
    std::sort(t.begin(), t.end());
    return t[2];
  };
  const double t10k = timed(10000), t100k = timed(100000);
  CHECK(t100k / t10k > 4.0);
  CHECK(t100k / t10k < 25.0);
}
