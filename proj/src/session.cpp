#include "emal/session.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <unordered_set>

namespace emal {

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::none: return "none";
    case TerminationReason::f1_target: return "f1_target";
    case TerminationReason::pool_exhausted: return "pool_exhausted";
    case TerminationReason::label_budget: return "label_budget";
    case TerminationReason::selector_exhausted: return "selector_exhausted";
    case TerminationReason::iteration_limit: return "iteration_limit";
  }
  return "?";
}

void validate(const SessionConfig& cfg) {
  const auto learner = to_string(cfg.learner);
  const auto selector = to_string(cfg.selector);
  auto reject = [&](const std::string& why) {
    throw ValidationError("session '" + cfg.name + "': " + why);
  };
  switch (cfg.selector) {
    case SelectorKind::margin:
      if (cfg.learner != LearnerKind::linear && cfg.learner != LearnerKind::mlp) {
        reject("margin selection needs a linear or mlp learner, not " + learner);
      }
      break;
    case SelectorKind::forest_qbc:
      if (cfg.learner != LearnerKind::forest) reject("forest_qbc needs the forest learner, not " + learner);
      break;
    case SelectorKind::lfp_lfn:
      if (cfg.learner != LearnerKind::rules) reject("lfp_lfn needs the rules learner, not " + learner);
      break;
    case SelectorKind::qbc:
      if (cfg.committee_size < 2) reject("qbc needs a committee of at least 2");
      break;
    case SelectorKind::random: break;
  }
  if (cfg.blocking_k) {
    if (cfg.selector != SelectorKind::margin || cfg.learner != LearnerKind::linear) {
      reject("blocking dimensions apply to margin selection with the linear learner only");
    }
    if (*cfg.blocking_k < 1) reject("blocking K must be >= 1");
  }
  if (cfg.ensemble_tau) {
    if (cfg.learner != LearnerKind::linear && cfg.learner != LearnerKind::mlp) {
      reject("active ensembles apply to linear and mlp learners only");
    }
    if (!(*cfg.ensemble_tau > 0.0 && *cfg.ensemble_tau <= 1.0)) reject("ensemble tau must be in (0, 1]");
  }
  if (cfg.seed_size < 2) reject("seed size must be >= 2");
  if (cfg.batch_size < 1) reject("batch size must be >= 1");
  if (cfg.params.n_trees < 1) reject("forest needs at least one tree");
  if (cfg.f1_target && !(*cfg.f1_target > 0.0 && *cfg.f1_target <= 1.0)) reject("f1 target must be in (0, 1]");
  if (cfg.oracle.mode == OracleMode::noisy && !(cfg.oracle.noise >= 0.0 && cfg.oracle.noise <= 1.0)) {
    reject("oracle noise must be in [0, 1]");
  }
  if (cfg.oracle.mode == OracleMode::perfect && cfg.oracle.noise != 0.0) reject("a perfect oracle has no noise");
  if (cfg.split.mode == SplitMode::holdout &&
      !(cfg.split.holdout_fraction > 0.0 && cfg.split.holdout_fraction < 1.0)) {
    reject("holdout fraction must be in (0, 1)");
  }
}

std::vector<std::string> iteration_log_header() {
  return {"iteration",    "labels_used",     "precision",    "recall",       "f1",
          "tp",           "fp",              "fn",           "train_time_ms", "committee_creation_ms",
          "scoring_ms",   "user_wait_ms",    "n_atoms",      "depth",        "ensemble_size",
          "pool_size",    "covered",         "next_batch",   "skipped",      "dot_products"};
}

void write_log_row(std::ostream& out, const IterationLog& r) {
  char buf[512];
  auto opt = [](const auto& v) { return v ? std::to_string(*v) : std::string(); };
  std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.6f,%.6f,%zu,%zu,%zu,%.3f,%.3f,%.3f,%.3f,", r.iteration,
                r.labels_used, r.precision, r.recall, r.f1, r.tp, r.fp, r.fn, r.train_time_ms,
                r.committee_creation_ms, r.scoring_ms, r.user_wait_ms);
  out << buf << opt(r.n_atoms) << ',' << opt(r.depth) << ',' << opt(r.ensemble_size) << ',' << r.pool_size << ','
      << r.covered << ',' << r.next_batch << ',' << r.skipped << ',' << r.dot_products << '\n';
}

namespace {

std::vector<std::optional<int>> gold_vector(const Dataset& d) {
  std::vector<std::optional<int>> g(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.pairs[i].gold) g[i] = to_int(*d.pairs[i].gold);
  }
  return g;
}

}  // namespace

Session::Session(std::shared_ptr<const Dataset> data, SessionConfig cfg)
    : data_(std::move(data)),
      cfg_(std::move(cfg)),
      source_(data_->features),
      oracle_(cfg_.oracle, cfg_.master_seed, gold_vector(*data_)) {
  validate(cfg_);
  const bool human = cfg_.oracle.mode == OracleMode::human;
  if (!data_->has_gold() && !(human && cfg_.human_seed)) {
    throw ValidationError("session '" + cfg_.name + "': dataset has no gold labels");
  }
  accepted_rules_.space = data_->atoms;
  if (cfg_.ensemble_tau) ensemble_.tau = *cfg_.ensemble_tau;

  SplitSpec spec = cfg_.split;
  spec.seed = Rng::stream(cfg_.master_seed, "split").next();
  Split s;
  if (spec.mode == SplitMode::progressive) {
    for (std::size_t i = 0; i < data_->size(); ++i) s.pool.push_back(static_cast<PairId>(i));
    s.test = s.pool;
  } else {
    s = split(data_->pairs, spec);
  }
  pool_ = s.pool;
  test_ = s.test;
  initial_pool_ = pool_;
  if (pool_.size() < cfg_.seed_size) {
    throw ValidationError("session '" + cfg_.name + "': pool of " + std::to_string(pool_.size()) +
                          " pairs is smaller than the seed of " + std::to_string(cfg_.seed_size));
  }

  // Seed: random draw, repaired so both gold classes appear when gold exists.
  Rng rng = Rng::stream(cfg_.master_seed, "seed");
  std::vector<PairId> order = pool_;
  rng.shuffle(order);
  std::vector<PairId> seed(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg_.seed_size));
  if (data_->has_gold()) {
    for (int cls : {0, 1}) {
      const bool present = std::any_of(seed.begin(), seed.end(), [&](PairId id) { return data_->gold_label(id) == cls; });
      if (present) continue;
      auto it = std::find_if(order.begin() + static_cast<std::ptrdiff_t>(cfg_.seed_size), order.end(),
                             [&](PairId id) { return data_->gold_label(id) == cls; });
      if (it == order.end()) {
        throw ValidationError("session '" + cfg_.name + "': the pool holds only one class");
      }
      // replace a member of the over-represented class
      auto victim = std::find_if(seed.rbegin(), seed.rend(), [&](PairId id) { return data_->gold_label(id) != cls; });
      *victim = *it;
    }
  }
  pending_ = seed;
  pending_tags_.assign(seed.size(), "");

  if (human && !cfg_.human_seed) {
    for (PairId id : pending_) submit(id, oracle_.gold(id));
    advance();
  }
}

std::vector<PairId> Session::unanswered() const {
  std::vector<PairId> out;
  for (PairId id : pending_) {
    if (!answers_.count(id)) out.push_back(id);
  }
  return out;
}

bool Session::batch_complete() const { return !pending_.empty() && answers_.size() == pending_.size(); }

void Session::submit(PairId id, int label) {
  if (phase_ == Phase::terminated) throw ConflictError("session has terminated");
  if (std::find(pending_.begin(), pending_.end(), id) == pending_.end()) {
    throw NotFoundError("pair " + std::to_string(id) + " is not in the pending batch");
  }
  oracle_.provide(id, label);
  if (answers_.emplace(id, label).second) answer_log_.emplace_back(id, label);
}

void Session::answer_from_oracle() {
  for (PairId id : pending_) {
    if (answers_.count(id)) continue;
    const auto a = oracle_.ask(id);
    if (!a) throw ValidationError("session '" + cfg_.name + "': the human oracle has not answered pair " +
                                  std::to_string(id));
    answers_.emplace(id, *a);
    answer_log_.emplace_back(id, *a);
  }
}

TrainingSet Session::training_set(const std::vector<PairId>& ids) const {
  TrainingSet ts(data_->features.dim());
  for (PairId id : ids) ts.add(id, data_->features.row(static_cast<std::size_t>(id)), labels_.at(id));
  return ts;
}

std::optional<int> Session::label_of(PairId id) const {
  if (auto it = labels_.find(id); it != labels_.end()) return it->second;
  return std::nullopt;
}

int Session::truth(PairId id) const {
  const auto& p = data_->pairs[static_cast<std::size_t>(id)];
  if (p.gold) return to_int(*p.gold);
  return labels_.at(id);
}

void Session::retrain() {
  const std::size_t iteration = logs_.size();
  Rng rng = Rng::stream(cfg_.master_seed, "train").child(iteration);
  const TrainingSet ts = training_set(train_ids_);

  if (cfg_.selector == SelectorKind::lfp_lfn) {
    auto uncovered = [&] {
      BooleanSet b;
      b.atoms = data_->atoms.size();
      for (std::size_t i = 0; i < ts.size(); ++i) {
        if (dnf_predict_features(accepted_rules_, ts.row(i))) continue;
        b.add(data_->atoms.booleanize(ts.row(i)), ts.label(i));
      }
      return b;
    };
    auto learn = [&](const BooleanSet& b) -> std::optional<LearnedRule> {
      if (evaluate_rule({}, b).positives == 0) return std::nullopt;
      return learn_rule(b, cfg_.params.rules);
    };
    auto next = learn(uncovered());
    // A candidate that survives a round of LFP/LFN labels unchanged and
    // still meets the precision bar joins the accepted rules.
    if (next && candidate_rule_ && next->rule == candidate_rule_->rule && !next->rule.atoms.empty() &&
        next->precision >= cfg_.params.rules.min_precision) {
      accepted_rules_.rules.push_back(next->rule);
      next = learn(uncovered());
    }
    candidate_rule_ = next;
    DnfModel current = accepted_rules_;
    if (candidate_rule_ && !candidate_rule_->rule.atoms.empty() &&
        candidate_rule_->precision >= cfg_.params.rules.min_precision) {
      current.rules.push_back(candidate_rule_->rule);
    }
    model_ = std::move(current);
    model_trained_ = true;
    return;
  }

  if (ts.has_both_classes()) {
    model_ = train_model(cfg_.learner, ts, cfg_.params, rng);
    model_trained_ = true;
  } else {
    model_ = ConstantModel{ts.empty() ? 0 : ts.label(0)};
    model_trained_ = false;
  }
}

int Session::predict(PairId id) const {
  const auto x = data_->features.row(static_cast<std::size_t>(id));
  if (ensemble_.predict(x)) return 1;
  return emal::predict(model_, x);
}

Metrics Session::evaluate() const {
  std::vector<int> pred, gold;
  for (PairId id : test_) {
    const auto& p = data_->pairs[static_cast<std::size_t>(id)];
    if (!p.gold && !labels_.count(id)) continue;
    pred.push_back(predict(id));
    gold.push_back(truth(id));
  }
  if (gold.empty()) return Metrics{};
  return prf1(pred, gold);
}

bool Session::partition_holds() const {
  std::unordered_set<PairId> seen;
  for (const auto* part : {&labeled_all_, &pool_, &covered_pool_}) {
    for (PairId id : *part) {
      if (!seen.insert(id).second) return false;
    }
  }
  for (PairId id : pending_) {
    // pending pairs are still in the pool until the batch is consumed
    if (phase_ == Phase::awaiting_labels && !std::binary_search(pool_.begin(), pool_.end(), id)) return false;
  }
  if (seen.size() != initial_pool_.size()) return false;
  return std::all_of(initial_pool_.begin(), initial_pool_.end(), [&](PairId id) { return seen.count(id) > 0; });
}

void Session::finish(TerminationReason r) {
  phase_ = Phase::terminated;
  reason_ = r;
  pending_.clear();
  pending_tags_.clear();
}

void Session::select_next() {
  const std::size_t iteration = logs_.size();
  std::size_t want = std::min(cfg_.batch_size, pool_.size());
  if (cfg_.label_budget) want = std::min(want, *cfg_.label_budget - labeled_all_.size());
  Rng rng = Rng::stream(cfg_.master_seed, "select").child(iteration);

  SelectionResult r;
  std::string strategy = to_string(cfg_.selector);
  if (cfg_.selector == SelectorKind::lfp_lfn) {
    if (candidate_rule_) r = lfp_lfn_select(accepted_rules_, candidate_rule_->rule, source_, pool_, want);
  } else if (!model_trained_ || cfg_.selector == SelectorKind::random) {
    // Until both classes are labeled no model-based selector is defined.
    if (cfg_.selector != SelectorKind::random) strategy = "random_fallback";
    r = random_select(pool_, want, rng);
  } else {
    switch (cfg_.selector) {
      case SelectorKind::qbc:
        r = qbc_select(training_set(train_ids_), source_, pool_, cfg_.learner, cfg_.params, cfg_.committee_size, want,
                       rng, cfg_.jobs);
        break;
      case SelectorKind::forest_qbc:
        r = forest_qbc_select(std::get<ForestModel>(model_), source_, pool_, want, rng);
        break;
      case SelectorKind::margin:
        if (cfg_.blocking_k) {
          strategy = "margin_blocked_" + std::to_string(*cfg_.blocking_k);
          r = blocked_margin_select(std::get<LinearModel>(model_), source_, pool_, want, *cfg_.blocking_k);
        } else {
          r = margin_select(model_, source_, pool_, want);
        }
        break;
      default: break;
    }
  }
  current_.committee_creation_ms = r.committee_creation_ms;
  current_.scoring_ms = r.scoring_ms;
  current_.skipped = r.skipped;
  current_.dot_products = r.dot_products;
  current_.next_batch = r.chosen.size();
  trace_.push_back({iteration, strategy, r.chosen, r.tags, r.skipped, r.dot_products, r.committee_creation_ms,
                    r.scoring_ms, r.short_batch});
  if (r.chosen.empty()) {
    finish(TerminationReason::selector_exhausted);
    return;
  }
  pending_ = std::move(r.chosen);
  pending_tags_ = r.tags.empty() ? std::vector<std::string>(pending_.size()) : std::move(r.tags);
}

const IterationLog& Session::advance() {
  if (phase_ == Phase::terminated) throw ConflictError("session has terminated");
  if (!batch_complete()) throw ValidationError("the pending batch is not fully labeled");
  const std::size_t iteration = logs_.size();
  current_ = IterationLog{};
  current_.iteration = iteration;

  std::vector<PairId> batch = pending_;
  std::vector<int> batch_labels;
  for (PairId id : batch) batch_labels.push_back(answers_.at(id));
  const std::unordered_set<PairId> taken(batch.begin(), batch.end());
  std::erase_if(pool_, [&](PairId id) { return taken.count(id) > 0; });
  for (std::size_t i = 0; i < batch.size(); ++i) {
    labeled_all_.push_back(batch[i]);
    train_ids_.push_back(batch[i]);
    labels_[batch[i]] = batch_labels[i];
  }
  pending_.clear();
  pending_tags_.clear();
  answers_.clear();

  const auto train_start = Clock::now();
  if (cfg_.ensemble_tau && iteration > 0 && model_trained_) {
    auto outcome = ensemble_step(ensemble_, model_, source_, batch, batch_labels, train_ids_, pool_, iteration);
    covered_pool_.insert(covered_pool_.end(), outcome.removed_pool.begin(), outcome.removed_pool.end());
  }
  retrain();
  current_.train_time_ms = elapsed_ms(train_start);

  const Metrics m = evaluate();
  current_.labels_used = labeled_all_.size();
  current_.precision = m.precision;
  current_.recall = m.recall;
  current_.f1 = m.f1;
  current_.tp = m.tp;
  current_.fp = m.fp;
  current_.fn = m.fn;
  if (const auto* f = std::get_if<ForestModel>(&model_)) {
    current_.n_atoms = count_atoms(*f);
    current_.depth = forest_depth(*f);
  } else if (const auto* d = std::get_if<DnfModel>(&model_)) {
    current_.n_atoms = count_atoms(*d);
  }
  if (cfg_.ensemble_tau) current_.ensemble_size = ensemble_.accepted.size();

  if (cfg_.oracle.mode == OracleMode::perfect && cfg_.f1_target && m.f1 >= *cfg_.f1_target) {
    finish(TerminationReason::f1_target);
  } else if (pool_.empty()) {
    finish(TerminationReason::pool_exhausted);
  } else if (cfg_.label_budget && labeled_all_.size() >= *cfg_.label_budget) {
    finish(TerminationReason::label_budget);
  } else if (cfg_.max_iterations && iteration >= *cfg_.max_iterations) {
    finish(TerminationReason::iteration_limit);
  } else {
    select_next();
  }
  current_.pool_size = pool_.size();
  current_.covered = covered_pool_.size();
  current_.user_wait_ms = current_.train_time_ms + current_.committee_creation_ms + current_.scoring_ms;
  logs_.push_back(current_);
  return logs_.back();
}

void Session::run(const std::function<void(const IterationLog&)>& on_iteration) {
  while (phase_ == Phase::awaiting_labels) {
    answer_from_oracle();
    const auto& row = advance();
    if (on_iteration) on_iteration(row);
  }
}

ModelSummary Session::model_summary() const {
  ModelSummary s;
  s.kind = model_kind(model_);
  if (const auto* d = std::get_if<DnfModel>(&model_)) {
    s.text = describe(*d, data_->schema);
    s.n_atoms = count_atoms(*d);
  } else if (const auto* f = std::get_if<ForestModel>(&model_)) {
    s.n_atoms = count_atoms(*f);
    s.depth = forest_depth(*f);
    s.text = std::to_string(f->trees.size()) + " trees";
  } else if (const auto* l = std::get_if<LinearModel>(&model_)) {
    const auto dims = blocking_dims(*l, std::min<std::size_t>(5, l->weights.size()));
    char buf[128];
    for (auto d : dims) {
      std::snprintf(buf, sizeof buf, "%+.4f * %s\n", l->weights[d], data_->schema.name(d).c_str());
      s.text += buf;
    }
    std::snprintf(buf, sizeof buf, "%+.4f (bias)", l->bias);
    s.text += buf;
  } else if (const auto* c = std::get_if<ConstantModel>(&model_)) {
    s.text = "constant " + std::to_string(c->label);
  } else if (const auto* n = std::get_if<MlpModel>(&model_)) {
    s.text = "mlp with " + std::to_string(n->hidden) + " hidden units";
  }
  for (const auto& a : ensemble_.accepted) {
    s.ensemble_members.push_back(model_kind(a.model));
    s.ensemble_precisions.push_back(a.precision);
  }
  return s;
}

}  // namespace emal
