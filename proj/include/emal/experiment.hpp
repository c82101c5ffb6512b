#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emal/dataset.hpp"
#include "emal/session.hpp"

namespace emal {

/// Environment variable consulted for relative data paths that do not
/// exist next to the config file.
inline constexpr const char* kDataDirEnv = "EMAL_DATA_DIR";

struct DatasetConfig {
  enum class Kind { tables, synthetic };
  Kind kind = Kind::synthetic;
  TableDatasetSpec tables;
  SyntheticSpec synthetic;
};

/// A YAML experiment file:
///
///   dataset:   {kind: tables, name, left: {path, id}, right: {path, id},
///               gold, align: ["name:title", ...], blocking_threshold}
///          or  {kind: synthetic, name, pairs, skew, attributes, feature_noise,
///               hard_match_fraction, hard_nonmatch_fraction,
///               attribute_spread, null_fraction, seed}
///   output:    {dir}
///   repeats:   runs per session (run r uses master_seed + r)
///   seed:      master seed for sessions that do not set one
///   jobs:      worker threads (sessions in parallel, featurization)
///   sessions:  list of SessionConfig objects (see config.hpp)
///
/// Unknown keys are errors. Relative paths resolve against the config's
/// directory, then against $EMAL_DATA_DIR.
struct ExperimentConfig {
  std::filesystem::path source;
  DatasetConfig dataset;
  std::filesystem::path output_dir = "runs";
  std::size_t repeats = 1;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::vector<SessionConfig> sessions;
};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::filesystem::path> out;
};

/// Throws ValidationError with a "file:line: " prefix.
ExperimentConfig load_experiment(const std::filesystem::path& path, const RunOverrides& overrides = {});
ExperimentConfig parse_experiment(const std::string& yaml, const std::filesystem::path& source,
                                  const RunOverrides& overrides = {});

std::shared_ptr<const Dataset> build_dataset(const DatasetConfig& cfg, std::size_t jobs = 1);

struct RunSummary {
  std::string session;
  std::size_t run = 0;
  std::uint64_t master_seed = 0;
  std::string learner;
  std::string selector;
  std::string oracle;
  double noise = 0.0;
  std::size_t iterations = 0;
  std::size_t labels_used = 0;
  double best_f1 = 0.0;
  std::size_t labels_at_best = 0;
  std::size_t labels_to_convergence = 0;
  double final_f1 = 0.0;
  std::optional<std::size_t> n_atoms;
  std::optional<int> depth;
  std::optional<std::size_t> ensemble_size;
  std::string termination;
  std::string error;  // empty on success
};

/// Best F1 and the labels at its first occurrence, convergence point, final
/// state.
RunSummary summarize(const Session& session, std::size_t run);

/// Runs every (session, repeat) on a worker pool. Each run writes
/// <out>/<session>/run-<r>/{log.csv, selection_trace.csv, manifest.json};
/// log rows are flushed per iteration so a failed run keeps what it did.
/// Writes <out>/summary.csv. A failed run is recorded, not thrown.
std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg, std::shared_ptr<const Dataset> data,
                                       const std::function<void(const std::string&)>& progress = {});
/// Summary rows plus a per-session mean row when a session ran more than once.
void write_summary(std::ostream& out, const std::vector<RunSummary>& rows);

/// "0.963 (2360 labels)"
std::string best_with_labels(double f1, std::size_t labels);

struct LogSeries {
  std::string session;
  std::size_t run = 0;
  std::vector<std::size_t> labels;
  std::vector<double> f1;
  std::vector<double> user_wait_ms;
  std::vector<double> train_time_ms;
};

/// Reads a log.csv written by run_experiment; corrupt input throws
/// ValidationError naming the file and line.
LogSeries read_log(const std::filesystem::path& path, const std::string& session = {}, std::size_t run = 0);

struct Report {
  std::vector<std::filesystem::path> files;
  std::string table;
};

/// Collects <dir>/<session>/run-<r>/log.csv and writes, under <dir>/report,
/// one <session>.series.csv per session. All series share one labels grid
/// (every labels_used value seen in any run) so they line up row by row;
/// each has the per-run F1 and user-wait columns and their mean.
Report report(const std::filesystem::path& run_dir);

/// ISO-8601 UTC timestamp with milliseconds.
std::string iso8601_now();

}  // namespace emal
