#include <doctest.h>

#include <set>
#include <sstream>

#include "emal/session.hpp"

using namespace emal;

namespace {

std::shared_ptr<const Dataset> synthetic(std::size_t pairs = 600, double skew = 0.1, std::uint64_t seed = 1) {
  SyntheticSpec s;
  s.pairs = pairs;
  s.skew = skew;
  s.seed = seed;
  return std::make_shared<const Dataset>(make_synthetic(s));
}

SessionConfig config(LearnerKind l, SelectorKind s) {
  SessionConfig c;
  c.name = "t";
  c.learner = l;
  c.selector = s;
  return c;
}

std::string untimed_log(const Session& s) {
  std::ostringstream out;
  for (auto row : s.logs()) {
    row.train_time_ms = row.committee_creation_ms = row.scoring_ms = row.user_wait_ms = 0.0;
    write_log_row(out, row);
  }
  return out.str();
}

}  // namespace

TEST_CASE("validate rejects incompatible learner/selector pairs") {
  auto bad = [](SessionConfig c) { CHECK_THROWS_AS(validate(c), ValidationError); };
  bad(config(LearnerKind::forest, SelectorKind::margin));
  bad(config(LearnerKind::linear, SelectorKind::forest_qbc));
  bad(config(LearnerKind::linear, SelectorKind::lfp_lfn));
  auto c = config(LearnerKind::mlp, SelectorKind::margin);
  c.blocking_k = 2;
  bad(c);
  c = config(LearnerKind::rules, SelectorKind::lfp_lfn);
  c.ensemble_tau = 0.85;
  bad(c);
  c = config(LearnerKind::linear, SelectorKind::qbc);
  c.committee_size = 1;
  bad(c);
  c = config(LearnerKind::linear, SelectorKind::random);
  c.oracle = {OracleMode::noisy, 1.5};
  bad(c);
  CHECK_NOTHROW(validate(config(LearnerKind::mlp, SelectorKind::qbc)));
  CHECK_NOTHROW(validate(config(LearnerKind::rules, SelectorKind::random)));
}

TEST_CASE("seed holds both classes even at low skew") {
  auto d = synthetic(1000, 0.01);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto c = config(LearnerKind::linear, SelectorKind::random);
    c.master_seed = seed;
    Session s(d, c);
    REQUIRE(s.pending().size() == 30);
    std::set<int> classes;
    for (PairId id : s.pending()) classes.insert(d->gold_label(id));
    CHECK(classes.size() == 2);
  }
}

TEST_CASE("label accounting and budget termination") {
  auto c = config(LearnerKind::linear, SelectorKind::margin);
  c.label_budget = 75;
  c.f1_target.reset();
  Session s(synthetic(), c);
  s.run();
  const auto& logs = s.logs();
  REQUIRE(logs.size() == 6);
  CHECK(logs[0].labels_used == 30);
  for (std::size_t i = 1; i < 5; ++i) CHECK(logs[i].labels_used == 30 + 10 * i);
  CHECK(logs.back().labels_used == 75);
  CHECK(s.termination() == TerminationReason::label_budget);
  CHECK(s.phase() == Phase::terminated);
  CHECK(s.pending().empty());
  CHECK(s.partition_holds());
}

TEST_CASE("runs are deterministic apart from timings") {
  auto d = synthetic();
  for (auto [l, sel] : {std::pair{LearnerKind::forest, SelectorKind::forest_qbc},
                        std::pair{LearnerKind::linear, SelectorKind::qbc},
                        std::pair{LearnerKind::rules, SelectorKind::lfp_lfn},
                        std::pair{LearnerKind::mlp, SelectorKind::margin}}) {
    auto c = config(l, sel);
    c.committee_size = 4;
    c.max_iterations = 8;
    c.oracle = {OracleMode::noisy, 0.1};
    c.master_seed = 5;
    Session a(d, c), b(d, c);
    a.run();
    b.run();
    CHECK(untimed_log(a) == untimed_log(b));
    CHECK(a.answer_log() == b.answer_log());
    c.master_seed = 6;
    Session other(d, c);
    other.run();
    CHECK(other.answer_log() != a.answer_log());
  }
}

TEST_CASE("every iteration keeps labeled, pool and covered disjoint and complete") {
  auto c = config(LearnerKind::linear, SelectorKind::margin);
  c.ensemble_tau = 0.85;
  c.f1_target.reset();
  c.label_budget = 300;
  Session s(synthetic(), c);
  std::size_t rounds = 0;
  s.run([&](const IterationLog& row) {
    CHECK(s.partition_holds());
    CHECK(row.covered == s.covered_pool().size());
    ++rounds;
  });
  CHECK(rounds > 5);
  CHECK_FALSE(s.ensemble().accepted.empty());
  CHECK_FALSE(s.covered_pool().empty());
  for (PairId id : s.covered_pool()) CHECK(s.ensemble().predict(s.dataset().features.row(static_cast<std::size_t>(id))) == 1);
}

TEST_CASE("perfect oracle stops at the F1 target") {
  auto c = config(LearnerKind::forest, SelectorKind::forest_qbc);
  c.params.n_trees = 20;
  c.f1_target = 0.9;
  Session s(synthetic(2000), c);
  s.run();
  CHECK(s.termination() == TerminationReason::f1_target);
  CHECK(s.logs().back().f1 >= 0.9);
  for (std::size_t i = 0; i + 1 < s.logs().size(); ++i) CHECK(s.logs()[i].f1 < 0.9);
  CHECK(s.logs().back().n_atoms.has_value());
}

TEST_CASE("noisy oracle ignores the F1 target") {
  auto c = config(LearnerKind::linear, SelectorKind::margin);
  c.oracle = {OracleMode::noisy, 0.0};
  c.max_iterations = 5;
  Session s(synthetic(), c);
  s.run();
  CHECK(s.termination() == TerminationReason::iteration_limit);
  CHECK(s.logs().size() == 6);
}

TEST_CASE("lfp/lfn session tags its batches") {
  auto c = config(LearnerKind::rules, SelectorKind::lfp_lfn);
  c.max_iterations = 10;
  Session s(synthetic(), c);
  s.answer_from_oracle();
  s.advance();
  REQUIRE(s.phase() == Phase::awaiting_labels);
  REQUIRE(s.pending_tags().size() == s.pending().size());
  for (const auto& t : s.pending_tags()) CHECK((t == "LFP" || t == "LFN"));
  s.run();
  CHECK(s.model_summary().kind == "dnf");
}

TEST_CASE("human sessions") {
  auto d = synthetic();
  auto c = config(LearnerKind::linear, SelectorKind::margin);
  c.oracle = {OracleMode::human, 0.0};

  SUBCASE("gold seed: the first human batch is a regular batch") {
    Session s(d, c);
    CHECK(s.logs().size() == 1);
    CHECK(s.pending().size() == 10);
  }
  SUBCASE("human seed: the seed is the first batch") {
    c.human_seed = true;
    Session s(d, c);
    CHECK(s.logs().empty());
    REQUIRE(s.pending().size() == 30);
    const auto batch = s.pending();
    s.submit(batch[0], 1);
    s.submit(batch[1], 0);
    CHECK(s.unanswered().size() == 28);
    CHECK_THROWS_AS(s.advance(), ValidationError);
    CHECK_THROWS_AS(s.answer_from_oracle(), ValidationError);
    CHECK_THROWS_AS(s.submit(batch[0], 0), ConflictError);
    CHECK(s.pending_answers().at(batch[0]) == 1);
    CHECK_NOTHROW(s.submit(batch[0], 1));
    PairId outside = 0;
    while (std::find(batch.begin(), batch.end(), outside) != batch.end()) ++outside;
    CHECK_THROWS_AS(s.submit(outside, 1), NotFoundError);
    for (PairId id : s.unanswered()) s.submit(id, d->gold_label(id));
    CHECK(s.batch_complete());
    s.advance();
    CHECK(s.logs().size() == 1);
    CHECK(s.pending().size() == 10);
    CHECK(s.answer_log().size() == 30);
  }
}
