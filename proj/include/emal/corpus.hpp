#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emal/common.hpp"

namespace emal {

struct Record {
  std::string id;
  std::vector<std::optional<std::string>> values;  // one slot per attribute
};

/// One side of a matching task. The id column is held separately from the
/// attribute list.
class RecordTable {
 public:
  RecordTable() = default;
  RecordTable(std::string table_id, std::vector<std::string> attributes);

  void add(Record record);

  const std::string& table_id() const { return table_id_; }
  const std::vector<std::string>& attributes() const { return attributes_; }
  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const Record& at(std::size_t row) const { return records_.at(row); }

  std::optional<std::size_t> attribute_index(const std::string& name) const;
  std::optional<std::size_t> row_of(const std::string& record_id) const;

 private:
  std::string table_id_;
  std::vector<std::string> attributes_;
  std::vector<Record> records_;
  std::unordered_map<std::string, std::size_t> rows_;
};

/// Reads a header-first CSV; `id_column` names the record id column.
RecordTable load_table(const std::filesystem::path& path, const std::string& table_id,
                       const std::string& id_column);
RecordTable read_table(std::istream& in, const std::string& table_id, const std::string& id_column);

struct SchemaAlignment {
  std::vector<std::pair<std::string, std::string>> pairs;  // (left_attr, right_attr)
};

/// Alignment resolved to attribute indices on both tables.
struct ResolvedAlignment {
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  std::vector<std::string> names;  // display name per aligned pair
  std::size_t size() const { return left.size(); }
};

ResolvedAlignment resolve(const SchemaAlignment& alignment, const RecordTable& left,
                          const RecordTable& right);

/// Two tables plus their alignment. `dedup` is set when a table is matched
/// against itself; `right` is then a copy of `left`.
struct TablePair {
  RecordTable left;
  RecordTable right;
  SchemaAlignment alignment;
  ResolvedAlignment resolved;
  bool dedup = false;
};

struct TableSource {
  std::filesystem::path path;
  std::string id_column = "id";
};

TablePair load_tables(const TableSource& left, const TableSource& right, const SchemaAlignment& alignment);

struct CandidatePair {
  PairId pair_id = 0;
  std::size_t left_row = 0;
  std::size_t right_row = 0;
  std::string left_id;
  std::string right_id;
  std::optional<Label> gold;
};

struct BlockingConfig {
  double threshold = 0.1875;
  std::size_t jobs = 1;
};

/// Token set of a record: tokens of all aligned attribute values concatenated.
std::vector<std::string> blocking_tokens(const Record& record, const std::vector<std::size_t>& columns);
double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// Retains pairs whose blocking-token Jaccard reaches the threshold. Output
/// is sorted by (left_id, right_id); pair ids are dense in that order.
std::vector<CandidatePair> block_candidates(const TablePair& tables, const BlockingConfig& cfg);

struct GoldReport {
  std::size_t gold_total = 0;        // distinct gold matches in the file
  std::size_t retained_matches = 0;  // gold matches that survived blocking
  std::size_t pruned_matches = 0;    // gold matches removed by blocking
  std::size_t pairs = 0;
  double skew = 0.0;                 // retained_matches / pairs
};

/// Labels pairs from a two-column (left_id, right_id) mapping with a header.
GoldReport attach_gold(std::vector<CandidatePair>& pairs, const TablePair& tables,
                       const std::filesystem::path& gold_path);
GoldReport attach_gold(std::vector<CandidatePair>& pairs, const TablePair& tables, std::istream& gold);

enum class SplitMode { progressive, holdout };

struct SplitSpec {
  SplitMode mode = SplitMode::progressive;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<PairId> pool;  // ascending
  std::vector<PairId> test;  // ascending
};

/// Progressive: pool and test are every pair. Holdout: disjoint, stratified
/// by gold label, deterministic in `seed`.
Split split(const std::vector<CandidatePair>& pairs, const SplitSpec& spec);

void write_pairs(std::ostream& out, const std::vector<CandidatePair>& pairs);
/// Reads what write_pairs wrote; rows are matched back to `tables`.
std::vector<CandidatePair> read_pairs(std::istream& in, const TablePair& tables);

}  // namespace emal
