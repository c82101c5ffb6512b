#include "emal/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "emal/csv.hpp"
#include "emal/rng.hpp"
#include "emal/similarity.hpp"

namespace emal {

RecordTable::RecordTable(std::string table_id, std::vector<std::string> attributes)
    : table_id_(std::move(table_id)), attributes_(std::move(attributes)) {}

void RecordTable::add(Record record) {
  if (record.values.size() != attributes_.size()) {
    throw ValidationError("table '" + table_id_ + "': record '" + record.id + "' has " +
                          std::to_string(record.values.size()) + " values, expected " +
                          std::to_string(attributes_.size()));
  }
  auto [it, inserted] = rows_.emplace(record.id, records_.size());
  if (!inserted) {
    throw ValidationError("table '" + table_id_ + "': duplicate record id '" + record.id + "'");
  }
  records_.push_back(std::move(record));
}

std::optional<std::size_t> RecordTable::attribute_index(const std::string& name) const {
  auto it = std::find(attributes_.begin(), attributes_.end(), name);
  if (it == attributes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - attributes_.begin());
}

std::optional<std::size_t> RecordTable::row_of(const std::string& record_id) const {
  auto it = rows_.find(record_id);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

RecordTable read_table(std::istream& in, const std::string& table_id, const std::string& id_column) {
  csv::Reader reader(in);
  csv::Row header;
  if (!reader.next(header)) throw ValidationError("table '" + table_id + "': empty file");
  std::optional<std::size_t> id_col;
  std::vector<std::string> attributes;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = header[i].value_or("");
    if (name == id_column && !id_col) {
      id_col = i;
    } else {
      attributes.push_back(name);
    }
  }
  if (!id_col) {
    throw ValidationError("table '" + table_id + "': missing id column '" + id_column + "'");
  }
  RecordTable table(table_id, attributes);
  csv::Row row;
  while (reader.next(row)) {
    if (row.size() == 1 && !row[0]) continue;  // blank line
    if (row.size() > header.size()) {
      throw ValidationError("table '" + table_id + "' line " + std::to_string(reader.line()) +
                            ": " + std::to_string(row.size()) + " fields, header has " +
                            std::to_string(header.size()));
    }
    row.resize(header.size());
    Record rec;
    if (!row[*id_col] || row[*id_col]->empty()) {
      throw ValidationError("table '" + table_id + "' line " + std::to_string(reader.line()) +
                            ": empty record id");
    }
    rec.id = *row[*id_col];
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i != *id_col) rec.values.push_back(std::move(row[i]));
    }
    table.add(std::move(rec));
  }
  return table;
}

RecordTable load_table(const std::filesystem::path& path, const std::string& table_id,
                       const std::string& id_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open table file " + path.string());
  return read_table(in, table_id, id_column);
}

ResolvedAlignment resolve(const SchemaAlignment& alignment, const RecordTable& left,
                          const RecordTable& right) {
  if (alignment.pairs.empty()) throw ValidationError("schema alignment is empty");
  ResolvedAlignment out;
  for (const auto& [l, r] : alignment.pairs) {
    auto li = left.attribute_index(l);
    if (!li) throw ValidationError("alignment names absent attribute '" + l + "' in table '" + left.table_id() + "'");
    auto ri = right.attribute_index(r);
    if (!ri) throw ValidationError("alignment names absent attribute '" + r + "' in table '" + right.table_id() + "'");
    out.left.push_back(*li);
    out.right.push_back(*ri);
    out.names.push_back(l == r ? l : l + "/" + r);
  }
  return out;
}

TablePair load_tables(const TableSource& left, const TableSource& right, const SchemaAlignment& alignment) {
  TablePair tp;
  tp.left = load_table(left.path, left.path.stem().string(), left.id_column);
  std::error_code ec;
  tp.dedup = std::filesystem::equivalent(left.path, right.path, ec);
  tp.right = tp.dedup ? tp.left : load_table(right.path, right.path.stem().string(), right.id_column);
  tp.alignment = alignment;
  tp.resolved = resolve(alignment, tp.left, tp.right);
  return tp;
}

std::vector<std::string> blocking_tokens(const Record& record, const std::vector<std::size_t>& columns) {
  std::string text;
  for (std::size_t c : columns) {
    if (record.values[c]) {
      text += *record.values[c];
      text.push_back(' ');
    }
  }
  auto toks = tokenize(text);
  std::sort(toks.begin(), toks.end());
  toks.erase(std::unique(toks.begin(), toks.end()), toks.end());
  return toks;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() || sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

namespace {

using TokenIds = std::vector<std::uint32_t>;

struct Tokenized {
  std::vector<TokenIds> left;
  std::vector<TokenIds> right;
  std::size_t vocabulary = 0;
};

Tokenized tokenize_tables(const TablePair& tp) {
  std::unordered_map<std::string, std::uint32_t> vocab;
  auto encode = [&](const RecordTable& t, const std::vector<std::size_t>& cols) {
    std::vector<TokenIds> out;
    out.reserve(t.size());
    for (const auto& rec : t.records()) {
      TokenIds ids;
      for (auto& tok : blocking_tokens(rec, cols)) {
        auto [it, _] = vocab.emplace(std::move(tok), static_cast<std::uint32_t>(vocab.size()));
        ids.push_back(it->second);
      }
      std::sort(ids.begin(), ids.end());
      out.push_back(std::move(ids));
    }
    return out;
  };
  Tokenized tk;
  tk.left = encode(tp.left, tp.resolved.left);
  tk.right = encode(tp.right, tp.resolved.right);
  tk.vocabulary = vocab.size();
  return tk;
}

void block_range(const TablePair& tp, const Tokenized& tk,
                 const std::vector<std::vector<std::uint32_t>>& postings, double threshold,
                 std::size_t begin, std::size_t end,
                 std::vector<std::pair<std::size_t, std::size_t>>& out) {
  const std::size_t n_right = tk.right.size();
  std::vector<std::uint32_t> overlap(n_right, 0);
  std::vector<std::uint32_t> touched;
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t first_right = tp.dedup ? i + 1 : 0;
    if (threshold <= 0.0) {
      for (std::size_t j = first_right; j < n_right; ++j) out.emplace_back(i, j);
      continue;
    }
    touched.clear();
    for (std::uint32_t tok : tk.left[i]) {
      for (std::uint32_t j : postings[tok]) {
        if (j < first_right) continue;
        if (overlap[j]++ == 0) touched.push_back(j);
      }
    }
    std::sort(touched.begin(), touched.end());
    const double na = static_cast<double>(tk.left[i].size());
    for (std::uint32_t j : touched) {
      const double inter = overlap[j];
      const double jac = inter / (na + static_cast<double>(tk.right[j].size()) - inter);
      if (jac >= threshold) out.emplace_back(i, j);
      overlap[j] = 0;
    }
  }
}

}  // namespace

std::vector<CandidatePair> block_candidates(const TablePair& tp, const BlockingConfig& cfg) {
  if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) {
    throw ValidationError("blocking threshold must lie in [0,1]");
  }
  const Tokenized tk = tokenize_tables(tp);
  std::vector<std::vector<std::uint32_t>> postings(tk.vocabulary);
  for (std::size_t j = 0; j < tk.right.size(); ++j) {
    for (std::uint32_t tok : tk.right[j]) postings[tok].push_back(static_cast<std::uint32_t>(j));
  }

  const std::size_t n_left = tk.left.size();
  const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, n_left));
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> parts(jobs);
  if (jobs == 1) {
    block_range(tp, tk, postings, cfg.threshold, 0, n_left, parts[0]);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      const std::size_t b = n_left * w / jobs, e = n_left * (w + 1) / jobs;
      workers.emplace_back([&, w, b, e] { block_range(tp, tk, postings, cfg.threshold, b, e, parts[w]); });
    }
  }

  std::vector<CandidatePair> pairs;
  for (auto& part : parts) {
    for (auto [i, j] : part) {
      CandidatePair p;
      p.left_row = i;
      p.right_row = j;
      p.left_id = tp.left.at(i).id;
      p.right_id = tp.right.at(j).id;
      pairs.push_back(std::move(p));
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const CandidatePair& a, const CandidatePair& b) {
    return std::tie(a.left_id, a.right_id) < std::tie(b.left_id, b.right_id);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) pairs[k].pair_id = static_cast<PairId>(k);
  return pairs;
}

GoldReport attach_gold(std::vector<CandidatePair>& pairs, const TablePair& tables, std::istream& gold) {
  csv::Reader reader(gold);
  csv::Row row;
  if (!reader.next(row)) {
    // Empty file: no matches.
    row.clear();
  }
  std::set<std::pair<std::size_t, std::size_t>> matches;
  while (reader.next(row)) {
    if (row.size() == 1 && !row[0]) continue;
    if (row.size() < 2 || !row[0] || !row[1]) {
      throw ValidationError("gold line " + std::to_string(reader.line()) + ": expected left_id,right_id");
    }
    auto l = tables.left.row_of(*row[0]);
    if (!l) throw ValidationError("gold line " + std::to_string(reader.line()) + ": unknown left record id '" + *row[0] + "'");
    auto r = tables.right.row_of(*row[1]);
    if (!r) throw ValidationError("gold line " + std::to_string(reader.line()) + ": unknown right record id '" + *row[1] + "'");
    std::size_t a = *l, b = *r;
    if (tables.dedup) {
      if (a == b) continue;
      if (a > b) std::swap(a, b);
    }
    matches.emplace(a, b);
  }

  GoldReport report;
  report.gold_total = matches.size();
  report.pairs = pairs.size();
  for (auto& p : pairs) {
    std::size_t a = p.left_row, b = p.right_row;
    if (tables.dedup && a > b) std::swap(a, b);
    const bool is_match = matches.count({a, b}) > 0;
    p.gold = is_match ? Label::match : Label::non_match;
    if (is_match) ++report.retained_matches;
  }
  report.pruned_matches = report.gold_total - report.retained_matches;
  report.skew = pairs.empty() ? 0.0 : static_cast<double>(report.retained_matches) / static_cast<double>(pairs.size());
  return report;
}

GoldReport attach_gold(std::vector<CandidatePair>& pairs, const TablePair& tables,
                       const std::filesystem::path& gold_path) {
  std::ifstream in(gold_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open gold file " + gold_path.string());
  return attach_gold(pairs, tables, in);
}

Split split(const std::vector<CandidatePair>& pairs, const SplitSpec& spec) {
  Split out;
  if (spec.mode == SplitMode::progressive) {
    for (const auto& p : pairs) out.pool.push_back(p.pair_id);
    out.test = out.pool;
    return out;
  }
  if (!(spec.holdout_fraction > 0.0 && spec.holdout_fraction < 1.0)) {
    throw ValidationError("holdout fraction must lie in (0,1)");
  }
  std::vector<PairId> pos, neg;
  for (const auto& p : pairs) {
    if (!p.gold) throw ValidationError("holdout split requires gold labels on every pair");
    (*p.gold == Label::match ? pos : neg).push_back(p.pair_id);
  }
  if (pos.size() < 5 || neg.size() < 5) {
    throw ValidationError("holdout split needs at least 5 pairs of each class");
  }
  Rng rng = Rng::stream(spec.seed, "split");
  for (auto* cls : {&pos, &neg}) {
    rng.shuffle(*cls);
    const auto n_test = static_cast<std::size_t>(std::llround(spec.holdout_fraction * static_cast<double>(cls->size())));
    out.test.insert(out.test.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(n_test));
    out.pool.insert(out.pool.end(), cls->begin() + static_cast<std::ptrdiff_t>(n_test), cls->end());
  }
  std::sort(out.pool.begin(), out.pool.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

void write_pairs(std::ostream& out, const std::vector<CandidatePair>& pairs) {
  out << "pair_id,left_id,right_id,gold\n";
  for (const auto& p : pairs) {
    out << p.pair_id << ',' << csv::escape(p.left_id) << ',' << csv::escape(p.right_id) << ',';
    if (p.gold) out << to_int(*p.gold);
    out << '\n';
  }
}

std::vector<CandidatePair> read_pairs(std::istream& in, const TablePair& tables) {
  csv::Reader reader(in);
  csv::Row row;
  if (!reader.next(row)) throw ValidationError("pair file is empty");
  std::vector<CandidatePair> pairs;
  while (reader.next(row)) {
    if (row.size() < 3 || !row[0] || !row[1] || !row[2]) {
      throw ValidationError("pair file line " + std::to_string(reader.line()) + ": malformed row");
    }
    CandidatePair p;
    p.pair_id = std::stoll(*row[0]);
    if (p.pair_id != static_cast<PairId>(pairs.size())) {
      throw ValidationError("pair file line " + std::to_string(reader.line()) + ": pair ids must be dense");
    }
    p.left_id = *row[1];
    p.right_id = *row[2];
    auto l = tables.left.row_of(p.left_id);
    auto r = tables.right.row_of(p.right_id);
    if (!l || !r) throw ValidationError("pair file line " + std::to_string(reader.line()) + ": unknown record id");
    p.left_row = *l;
    p.right_row = *r;
    if (row.size() > 3 && row[3]) p.gold = label_from_int(std::stoi(*row[3]));
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace emal
