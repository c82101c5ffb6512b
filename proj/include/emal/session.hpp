#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emal/dataset.hpp"
#include "emal/evaluator.hpp"
#include "emal/oracle.hpp"
#include "emal/selectors.hpp"

namespace emal {

enum class TerminationReason { none, f1_target, pool_exhausted, label_budget, selector_exhausted, iteration_limit };
std::string to_string(TerminationReason r);

struct SessionConfig {
  std::string name = "session";
  LearnerKind learner = LearnerKind::forest;
  SelectorKind selector = SelectorKind::forest_qbc;
  std::size_t committee_size = 2;  // learner-agnostic QBC
  LearnerParams params;            // includes the forest size
  std::size_t seed_size = 30;
  std::size_t batch_size = 10;
  SplitSpec split;                 // split.seed is derived from master_seed
  OracleConfig oracle;
  std::optional<std::size_t> blocking_k;  // margin selection over top-K blocking dims
  std::optional<double> ensemble_tau;     // active ensemble gate
  std::optional<double> f1_target = 0.99;  // perfect oracle only; unset runs to the budget
  std::optional<std::size_t> label_budget;
  std::optional<std::size_t> max_iterations;
  std::uint64_t master_seed = 1;
  bool human_seed = false;  // human oracle also labels the seed (else gold)
  std::size_t jobs = 1;     // committee training threads
};

/// Throws ValidationError for learner/selector pairs that cannot work
/// together and for out-of-range settings.
void validate(const SessionConfig& cfg);

struct IterationLog {
  std::size_t iteration = 0;
  std::size_t labels_used = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0;
  double train_time_ms = 0.0;
  double committee_creation_ms = 0.0;
  double scoring_ms = 0.0;
  double user_wait_ms = 0.0;  // train + committee creation + scoring
  std::optional<std::size_t> n_atoms;
  std::optional<int> depth;
  std::optional<std::size_t> ensemble_size;
  std::size_t pool_size = 0;     // after this iteration's bookkeeping
  std::size_t covered = 0;       // pairs removed by accepted ensemble members so far
  std::size_t next_batch = 0;    // size of the batch selected for the next round
  std::size_t skipped = 0;
  std::size_t dot_products = 0;
};

/// Column names of the run log; timing columns end in "_ms".
std::vector<std::string> iteration_log_header();
void write_log_row(std::ostream& out, const IterationLog& row);

struct SelectionTraceRow {
  std::size_t iteration = 0;
  std::string strategy;
  std::vector<PairId> chosen;
  std::vector<std::string> tags;
  std::size_t skipped = 0;
  std::size_t dot_products = 0;
  double committee_creation_ms = 0.0;
  double scoring_ms = 0.0;
  bool short_batch = false;
};

/// Interpretable view of the current model.
struct ModelSummary {
  std::string kind;
  std::string text;  // DNF / rule text where available
  std::optional<std::size_t> n_atoms;
  std::optional<int> depth;
  std::vector<std::string> ensemble_members;
  std::vector<double> ensemble_precisions;
};

enum class Phase { awaiting_labels, terminated };

/// One active-learning run. The loop is split into pending batch -> answers
/// -> advance so a human can supply the answers between steps; run() drives
/// it from the simulated oracle.
class Session {
 public:
  Session(std::shared_ptr<const Dataset> data, SessionConfig cfg);

  const SessionConfig& config() const { return cfg_; }
  const Dataset& dataset() const { return *data_; }
  Phase phase() const { return phase_; }
  TerminationReason termination() const { return reason_; }

  /// Pairs awaiting labels, in selection order.
  const std::vector<PairId>& pending() const { return pending_; }
  const std::map<PairId, int>& pending_answers() const { return answers_; }
  std::vector<PairId> unanswered() const;
  bool batch_complete() const;
  /// Tags of the pending batch (LFP/LFN), parallel to pending().
  const std::vector<std::string>& pending_tags() const { return pending_tags_; }

  /// Human answer for a pending pair. NotFoundError when the pair is not
  /// pending, ConflictError when it contradicts an earlier answer.
  void submit(PairId id, int label);
  /// Fills every unanswered pending pair from the simulated oracle.
  void answer_from_oracle();
  /// Consumes the completed batch: retrain, evaluate, select the next batch.
  const IterationLog& advance();
  /// Runs to termination with the simulated oracle.
  void run(const std::function<void(const IterationLog&)>& on_iteration = {});

  const std::vector<IterationLog>& logs() const { return logs_; }
  const std::vector<SelectionTraceRow>& trace() const { return trace_; }
  /// Every answer in the order it was accepted.
  const std::vector<std::pair<PairId, int>>& answer_log() const { return answer_log_; }

  const std::vector<PairId>& pool() const { return pool_; }
  const std::vector<PairId>& labeled() const { return labeled_all_; }
  const std::vector<PairId>& training_ids() const { return train_ids_; }
  const std::vector<PairId>& covered_pool() const { return covered_pool_; }
  const std::vector<PairId>& test_ids() const { return test_; }
  const EnsembleState& ensemble() const { return ensemble_; }
  const Model& model() const { return model_; }
  /// Label this session holds for a pair (oracle answer), if any.
  std::optional<int> label_of(PairId id) const;

  /// Current prediction for a pair (ensemble union and current model).
  int predict(PairId id) const;
  /// Metrics of the current model on the evaluation set.
  Metrics evaluate() const;
  /// labeled, pool and ensemble-covered pool pairs partition the initial pool.
  bool partition_holds() const;
  ModelSummary model_summary() const;

 private:
  void select_next();
  void retrain();
  void finish(TerminationReason r);
  TrainingSet training_set(const std::vector<PairId>& ids) const;
  int truth(PairId id) const;

  std::shared_ptr<const Dataset> data_;
  SessionConfig cfg_;
  MatrixFeatureSource source_;
  Oracle oracle_;
  Phase phase_ = Phase::awaiting_labels;
  TerminationReason reason_ = TerminationReason::none;

  std::vector<PairId> initial_pool_;
  std::vector<PairId> pool_;
  std::vector<PairId> test_;
  std::vector<PairId> labeled_all_;
  std::vector<PairId> train_ids_;
  std::vector<PairId> covered_pool_;
  std::map<PairId, int> labels_;

  std::vector<PairId> pending_;
  std::vector<std::string> pending_tags_;
  std::map<PairId, int> answers_;
  std::vector<std::pair<PairId, int>> answer_log_;

  Model model_ = ConstantModel{0};
  bool model_trained_ = false;  // both classes were available
  EnsembleState ensemble_;
  DnfModel accepted_rules_;
  std::optional<LearnedRule> candidate_rule_;

  std::vector<IterationLog> logs_;
  std::vector<SelectionTraceRow> trace_;
  IterationLog current_;
};

}  // namespace emal
