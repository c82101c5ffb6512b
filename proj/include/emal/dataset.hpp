#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "emal/corpus.hpp"
#include "emal/features.hpp"

namespace emal {

/// Everything a session needs: candidate pairs, their cached feature
/// matrix (row == pair id) and gold labels where known.
struct Dataset {
  std::string name;
  std::shared_ptr<const TablePair> tables;  // null for generated data
  std::vector<CandidatePair> pairs;
  FeatureSchema schema;
  AtomSpace atoms;
  FeatureMatrix features;
  std::optional<GoldReport> gold;
  std::string checksum;  // hex digest of the inputs

  std::size_t size() const { return pairs.size(); }
  bool has_gold() const { return gold.has_value(); }
  /// Gold label of a pair; throws when the pair has none.
  int gold_label(PairId id) const;
  const CandidatePair& pair(PairId id) const;
};

struct TableDatasetSpec {
  std::string name = "tables";
  TableSource left;
  TableSource right;
  std::optional<std::filesystem::path> gold;
  SchemaAlignment alignment;
  BlockingConfig blocking;
};

Dataset load_dataset(const TableDatasetSpec& spec);

/// Generated pairs with a known latent match score. Each pair gets a latent
/// t in [0,1]; the attribute similarities scatter around t by up to
/// `attribute_spread` while averaging to it, and each of the 21 functions is
/// a different monotone transform of an attribute similarity. Matches
/// split into easy (t high) and hard (t just above 0.5) cases, non-matches
/// into easy (t low) and hard (t just below 0.5). Classes are separable in
/// the clean features; `feature_noise` then replaces each value with a
/// uniform draw independently.
struct SyntheticSpec {
  std::size_t pairs = 2000;
  double skew = 0.1;
  std::size_t attributes = 3;
  double feature_noise = 0.1;
  double hard_match_fraction = 0.5;
  double hard_nonmatch_fraction = 0.3;
  double attribute_spread = 0.3;
  /// Share of non-matches whose features are all exactly 0 (disjoint
  /// records). Every other value is kept strictly positive.
  double null_fraction = 0.0;
  std::uint64_t seed = 1;
};

Dataset make_synthetic(const SyntheticSpec& spec);

/// 64-bit FNV-1a over a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace emal
