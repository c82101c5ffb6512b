#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "emal/common.hpp"

namespace emal {

enum class OracleMode { perfect, noisy, human };

std::string to_string(OracleMode m);
std::optional<OracleMode> parse_oracle_mode(const std::string& s);

struct OracleConfig {
  OracleMode mode = OracleMode::perfect;
  double noise = 0.0;  // flip probability, noisy mode only
};

/// Label source for one session. Answers are memoized: asking twice for the
/// same pair returns the first answer, so noise cannot be re-rolled.
class Oracle {
 public:
  /// `gold` is indexed by pair id; entries may be empty in human mode.
  Oracle(OracleConfig cfg, std::uint64_t master_seed, std::vector<std::optional<int>> gold);

  /// Perfect/noisy: the (possibly flipped) gold label. Human: the answer
  /// given so far, or nothing while it is pending.
  std::optional<int> ask(PairId id);
  /// Records a human answer. Re-sending the same answer is a no-op; a
  /// different one throws ConflictError and the first answer stands.
  void provide(PairId id, int label);
  /// The gold label, bypassing noise (used when a human session takes its
  /// seed from gold).
  int gold(PairId id) const;

  bool answered(PairId id) const { return answers_.count(id) > 0; }
  std::size_t flips() const { return flips_; }
  std::size_t asked() const { return answers_.size(); }
  const OracleConfig& config() const { return cfg_; }

 private:
  void check(PairId id) const;

  OracleConfig cfg_;
  std::uint64_t key_;
  std::vector<std::optional<int>> gold_;
  std::unordered_map<PairId, int> answers_;
  std::size_t flips_ = 0;
};

}  // namespace emal
