#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "emal/features.hpp"
#include "emal/learner.hpp"

namespace emal {

enum class SelectorKind { random, qbc, forest_qbc, margin, lfp_lfn };

std::string to_string(SelectorKind k);
std::optional<SelectorKind> parse_selector(const std::string& s);

struct SelectionResult {
  std::vector<PairId> chosen;
  double committee_creation_ms = 0.0;
  double scoring_ms = 0.0;
  std::vector<std::string> tags;  // per chosen id ("LFP"/"LFN"), else empty
  std::size_t skipped = 0;        // blocked margin: examples never scored
  std::vector<PairId> skipped_ids;
  std::size_t dot_products = 0;   // full margin evaluations
  bool short_batch = false;       // fewer than the requested batch were available
};

/// (P/C)(1 - P/C)
double variance(int positive, int committee);

/// Highest-variance ids first (ties ordered by id); the ties straddling the
/// batch cut are filled by a uniform random draw.
std::vector<PairId> select_by_variance(std::span<const PairId> ids, std::span<const double> variances,
                                       std::size_t batch, Rng& rng);

/// B models, each trained on its own bootstrap resample with child stream b
/// of a stream drawn from `rng`. Members are trained on up to `jobs` threads.
std::vector<Model> build_committee(LearnerKind kind, const TrainingSet& labeled, const LearnerParams& params,
                                   std::size_t committee_size, Rng& rng, std::size_t jobs = 1);

/// Vote variance over an explicit committee.
SelectionResult committee_select(std::span<const Model> committee, const FeatureSource& source,
                                 std::span<const PairId> pool, std::size_t batch, Rng& rng);

/// Learner-agnostic query-by-committee; committee training is timed as
/// committee creation.
SelectionResult qbc_select(const TrainingSet& labeled, const FeatureSource& source, std::span<const PairId> pool,
                           LearnerKind kind, const LearnerParams& params, std::size_t committee_size,
                           std::size_t batch, Rng& rng, std::size_t jobs = 1);

/// The forest's trees are the committee; nothing extra is built.
SelectionResult forest_qbc_select(const ForestModel& forest, const FeatureSource& source,
                                  std::span<const PairId> pool, std::size_t batch, Rng& rng);

/// Smallest |margin| first, ties by pair id. Accepts linear and MLP models.
SelectionResult margin_select(const Model& model, const FeatureSource& source, std::span<const PairId> pool,
                              std::size_t batch);

/// Top-K dimensions by |weight|, ties to the lower index.
std::vector<std::size_t> blocking_dims(const LinearModel& model, std::size_t k);

/// Margin selection that first reads only the K blocking dimensions; when
/// they are all exactly 0 the full vector is not read and the example's
/// margin is taken as |b|. Skipped examples remain rankable at |b|, which is
/// their true margin whenever the whole vector is zero.
SelectionResult blocked_margin_select(const LinearModel& model, const FeatureSource& source,
                                      std::span<const PairId> pool, std::size_t batch, std::size_t k);

/// Mean feature value, the LFP/LFN ranking heuristic.
double agg_score(std::span<const double> features);

/// Likely false positives (pool pairs the candidate matches, lowest
/// agg_score first) and likely false negatives (matched by a Rule-Minus
/// relaxation but not the candidate, highest agg_score first), half a batch
/// each, topped up from the other side when one runs short. Pairs already
/// matched by `accepted` are ignored. An empty result means the selector is
/// exhausted.
SelectionResult lfp_lfn_select(const DnfModel& accepted, const ConjunctiveRule& candidate,
                               const FeatureSource& source, std::span<const PairId> pool, std::size_t batch);

SelectionResult random_select(std::span<const PairId> pool, std::size_t batch, Rng& rng);

struct AcceptedModel {
  Model model;
  double precision = 0.0;
  std::size_t iteration = 0;
  std::size_t covered = 0;  // pairs removed from the pools on acceptance
};

struct EnsembleState {
  double tau = 0.85;
  std::vector<AcceptedModel> accepted;
  std::set<PairId> covered_positive_ids;

  /// Union of the accepted models' positive predictions.
  int predict(std::span<const double> x) const;
};

struct EnsembleOutcome {
  bool accepted = false;
  std::optional<double> precision;  // unset when the candidate predicted no match in the batch
  std::vector<PairId> removed_labeled;
  std::vector<PairId> removed_pool;
};

/// Gate a candidate on its precision over the freshly labeled batch. On
/// acceptance every pair it predicts as a match leaves `labeled` and `pool`.
EnsembleOutcome ensemble_step(EnsembleState& state, const Model& candidate, const FeatureSource& source,
                              std::span<const PairId> batch, std::span<const int> batch_labels,
                              std::vector<PairId>& labeled, std::vector<PairId>& pool, std::size_t iteration = 0);

}  // namespace emal
