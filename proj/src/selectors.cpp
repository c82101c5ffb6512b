#include "emal/selectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_set>

namespace emal {

std::string to_string(SelectorKind k) {
  switch (k) {
    case SelectorKind::random: return "random";
    case SelectorKind::qbc: return "qbc";
    case SelectorKind::forest_qbc: return "forest_qbc";
    case SelectorKind::margin: return "margin";
    case SelectorKind::lfp_lfn: return "lfp_lfn";
  }
  return "?";
}

std::optional<SelectorKind> parse_selector(const std::string& s) {
  if (s == "random") return SelectorKind::random;
  if (s == "qbc") return SelectorKind::qbc;
  if (s == "forest_qbc") return SelectorKind::forest_qbc;
  if (s == "margin") return SelectorKind::margin;
  if (s == "lfp_lfn") return SelectorKind::lfp_lfn;
  return std::nullopt;
}

double variance(int positive, int committee) {
  if (committee < 1) throw ValidationError("variance: committee size must be >= 1");
  if (positive < 0 || positive > committee) throw ValidationError("variance: positive votes out of range");
  const double p = static_cast<double>(positive) / static_cast<double>(committee);
  return p * (1.0 - p);
}

std::vector<PairId> select_by_variance(std::span<const PairId> ids, std::span<const double> variances,
                                       std::size_t batch, Rng& rng) {
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (variances[a] != variances[b]) return variances[a] > variances[b];
    return ids[a] < ids[b];
  });
  std::vector<PairId> out;
  if (batch == 0 || order.empty()) return out;
  if (batch >= order.size()) {
    for (auto i : order) out.push_back(ids[i]);
    return out;
  }
  const double cut = variances[order[batch - 1]];
  std::size_t first_tie = 0;
  while (variances[order[first_tie]] > cut) ++first_tie;
  std::size_t end_tie = first_tie;
  while (end_tie < order.size() && variances[order[end_tie]] == cut) ++end_tie;
  for (std::size_t k = 0; k < first_tie; ++k) out.push_back(ids[order[k]]);
  std::span<std::size_t> ties(order.data() + first_tie, end_tie - first_tie);
  rng.shuffle(ties);
  for (std::size_t k = 0; out.size() < batch; ++k) out.push_back(ids[ties[k]]);
  return out;
}

std::vector<Model> build_committee(LearnerKind kind, const TrainingSet& labeled, const LearnerParams& params,
                                   std::size_t committee_size, Rng& rng, std::size_t jobs) {
  if (committee_size < 2) throw ValidationError("committee size must be >= 2");
  if (!labeled.has_both_classes()) throw ValidationError("committee needs labeled examples of both classes");
  const Rng base(rng.next());
  std::vector<Model> members(committee_size);
  auto train = [&](std::size_t b) {
    Rng r = base.child(b);
    std::vector<std::size_t> rows(labeled.size());
    for (auto& i : rows) i = r.below(labeled.size());
    members[b] = train_member(kind, labeled.subset(rows), params, r);
  };
  jobs = std::clamp<std::size_t>(jobs, 1, committee_size);
  if (jobs == 1) {
    for (std::size_t b = 0; b < committee_size; ++b) train(b);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t b = w; b < committee_size; b += jobs) train(b);
      });
    }
  }
  return members;
}

SelectionResult committee_select(std::span<const Model> committee, const FeatureSource& source,
                                 std::span<const PairId> pool, std::size_t batch, Rng& rng) {
  SelectionResult out;
  const auto start = Clock::now();
  std::vector<double> var(pool.size());
  std::vector<double> x(source.dim());
  const int c = static_cast<int>(committee.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    source.fill(pool[i], x);
    int pos = 0;
    for (const auto& m : committee) pos += predict(m, x);
    var[i] = variance(pos, c);
  }
  out.chosen = select_by_variance(pool, var, batch, rng);
  out.scoring_ms = elapsed_ms(start);
  out.short_batch = out.chosen.size() < batch;
  return out;
}

SelectionResult qbc_select(const TrainingSet& labeled, const FeatureSource& source, std::span<const PairId> pool,
                           LearnerKind kind, const LearnerParams& params, std::size_t committee_size,
                           std::size_t batch, Rng& rng, std::size_t jobs) {
  const auto start = Clock::now();
  auto committee = build_committee(kind, labeled, params, committee_size, rng, jobs);
  const double creation = elapsed_ms(start);
  auto out = committee_select(committee, source, pool, batch, rng);
  out.committee_creation_ms = creation;
  return out;
}

SelectionResult forest_qbc_select(const ForestModel& forest, const FeatureSource& source,
                                  std::span<const PairId> pool, std::size_t batch, Rng& rng) {
  if (forest.trees.empty()) throw ValidationError("forest has no trees");
  if (source.dim() != forest.dim) throw ValidationError("forest dimension does not match the features");
  SelectionResult out;
  const auto start = Clock::now();
  std::vector<double> var(pool.size());
  std::vector<double> x(source.dim());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    source.fill(pool[i], x);
    const Votes v = forest_votes(forest, x);
    var[i] = variance(v.positive, v.total);
  }
  out.chosen = select_by_variance(pool, var, batch, rng);
  out.scoring_ms = elapsed_ms(start);
  out.short_batch = out.chosen.size() < batch;
  return out;
}

namespace {

std::vector<PairId> bottom_by_margin(std::span<const PairId> pool, std::span<const double> margins,
                                     std::size_t batch) {
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    if (margins[a] != margins[b]) return margins[a] < margins[b];
    return pool[a] < pool[b];
  };
  const std::size_t k = std::min(batch, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), less);
  std::vector<PairId> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(pool[order[i]]);
  return out;
}

}  // namespace

SelectionResult margin_select(const Model& model, const FeatureSource& source, std::span<const PairId> pool,
                              std::size_t batch) {
  const auto* linear = std::get_if<LinearModel>(&model);
  const auto* mlp = std::get_if<MlpModel>(&model);
  if (!linear && !mlp) throw ValidationError("margin selection needs a linear or MLP model");
  SelectionResult out;
  const auto start = Clock::now();
  std::vector<double> margins(pool.size());
  std::vector<double> x(source.dim());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    source.fill(pool[i], x);
    margins[i] = linear ? linear_margin(*linear, x) : std::fabs(mlp_margin(*mlp, x).margin);
  }
  out.dot_products = pool.size();
  out.chosen = bottom_by_margin(pool, margins, batch);
  out.scoring_ms = elapsed_ms(start);
  out.short_batch = out.chosen.size() < batch;
  return out;
}

std::vector<std::size_t> blocking_dims(const LinearModel& model, std::size_t k) {
  if (k < 1) throw ValidationError("blocking needs K >= 1");
  std::vector<std::size_t> dims(model.weights.size());
  std::iota(dims.begin(), dims.end(), 0);
  std::stable_sort(dims.begin(), dims.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(model.weights[a]) > std::fabs(model.weights[b]);
  });
  dims.resize(std::min(k, dims.size()));
  return dims;
}

SelectionResult blocked_margin_select(const LinearModel& model, const FeatureSource& source,
                                      std::span<const PairId> pool, std::size_t batch, std::size_t k) {
  if (source.dim() != model.weights.size()) throw ValidationError("model dimension does not match the features");
  SelectionResult out;
  const auto start = Clock::now();
  const auto dims = blocking_dims(model, k);
  std::vector<double> margins(pool.size());
  std::vector<double> x(source.dim());
  const double bias_margin = std::fabs(model.bias);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const bool blocked =
        std::all_of(dims.begin(), dims.end(), [&](std::size_t d) { return source.value(pool[i], d) == 0.0; });
    if (blocked) {
      margins[i] = bias_margin;
      ++out.skipped;
      out.skipped_ids.push_back(pool[i]);
      continue;
    }
    source.fill(pool[i], x);
    margins[i] = linear_margin(model, x);
    ++out.dot_products;
  }
  out.chosen = bottom_by_margin(pool, margins, batch);
  out.scoring_ms = elapsed_ms(start);
  out.short_batch = out.chosen.size() < batch;
  return out;
}

double agg_score(std::span<const double> features) {
  if (features.empty()) return 0.0;
  return std::accumulate(features.begin(), features.end(), 0.0) / static_cast<double>(features.size());
}

SelectionResult lfp_lfn_select(const DnfModel& accepted, const ConjunctiveRule& candidate,
                               const FeatureSource& source, std::span<const PairId> pool, std::size_t batch) {
  SelectionResult out;
  const auto start = Clock::now();
  const AtomSpace& space = accepted.space;
  const auto relaxed = candidate.atoms.empty() ? std::vector<ConjunctiveRule>{} : rule_minus(candidate);
  struct Scored {
    double score;
    PairId id;
  };
  std::vector<Scored> lfp, lfn;
  std::vector<double> x(source.dim());
  for (PairId id : pool) {
    source.fill(id, x);
    if (dnf_predict_features(accepted, x)) continue;
    if (rule_matches_features(candidate, space, x)) {
      lfp.push_back({agg_score(x), id});
    } else if (std::any_of(relaxed.begin(), relaxed.end(),
                           [&](const ConjunctiveRule& r) { return rule_matches_features(r, space, x); })) {
      lfn.push_back({agg_score(x), id});
    }
  }
  std::sort(lfp.begin(), lfp.end(), [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score < b.score : a.id < b.id;
  });
  std::sort(lfn.begin(), lfn.end(), [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  std::size_t want_lfp = (batch + 1) / 2;
  std::size_t want_lfn = batch - want_lfp;
  if (lfp.size() < want_lfp) want_lfn += want_lfp - lfp.size(), want_lfp = lfp.size();
  if (lfn.size() < want_lfn) want_lfp = std::min(lfp.size(), want_lfp + (want_lfn - lfn.size())), want_lfn = lfn.size();
  for (std::size_t i = 0; i < want_lfp; ++i) out.chosen.push_back(lfp[i].id), out.tags.emplace_back("LFP");
  for (std::size_t i = 0; i < want_lfn; ++i) out.chosen.push_back(lfn[i].id), out.tags.emplace_back("LFN");
  out.scoring_ms = elapsed_ms(start);
  out.short_batch = out.chosen.size() < batch;
  return out;
}

SelectionResult random_select(std::span<const PairId> pool, std::size_t batch, Rng& rng) {
  SelectionResult out;
  const auto start = Clock::now();
  std::vector<PairId> ids(pool.begin(), pool.end());
  const std::size_t k = std::min(batch, ids.size());
  // partial Fisher-Yates: the first k slots are a uniform sample
  for (std::size_t i = 0; i < k; ++i) std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
  out.chosen.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  out.scoring_ms = elapsed_ms(start);
  out.short_batch = k < batch;
  return out;
}

int EnsembleState::predict(std::span<const double> x) const {
  for (const auto& a : accepted) {
    if (emal::predict(a.model, x)) return 1;
  }
  return 0;
}

EnsembleOutcome ensemble_step(EnsembleState& state, const Model& candidate, const FeatureSource& source,
                              std::span<const PairId> batch, std::span<const int> batch_labels,
                              std::vector<PairId>& labeled, std::vector<PairId>& pool, std::size_t iteration) {
  if (batch.size() != batch_labels.size()) throw ValidationError("ensemble_step: batch and labels differ in size");
  EnsembleOutcome out;
  std::vector<double> x(source.dim());
  std::size_t predicted = 0, correct = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    source.fill(batch[i], x);
    if (predict(candidate, x)) {
      ++predicted;
      correct += batch_labels[i] == 1;
    }
  }
  if (predicted == 0) return out;
  out.precision = static_cast<double>(correct) / static_cast<double>(predicted);
  if (*out.precision < state.tau) return out;

  out.accepted = true;
  auto prune = [&](std::vector<PairId>& ids, std::vector<PairId>& removed) {
    std::erase_if(ids, [&](PairId id) {
      source.fill(id, x);
      if (!predict(candidate, x)) return false;
      removed.push_back(id);
      return true;
    });
  };
  prune(labeled, out.removed_labeled);
  prune(pool, out.removed_pool);
  for (auto id : out.removed_labeled) state.covered_positive_ids.insert(id);
  for (auto id : out.removed_pool) state.covered_positive_ids.insert(id);
  state.accepted.push_back(
      {candidate, *out.precision, iteration, out.removed_labeled.size() + out.removed_pool.size()});
  return out;
}

}  // namespace emal
