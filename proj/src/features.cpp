#include "emal/features.hpp"

#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "emal/csv.hpp"

namespace emal {

std::string FeatureSchema::name(std::size_t d) const {
  std::string out(similarity_name(function_of(d)));
  out += "(" + attrs_.at(attribute_of(d)) + ")";
  return out;
}

AtomSpace::Atom AtomSpace::atom(std::size_t id) const {
  if (id >= size()) throw ValidationError("atom id " + std::to_string(id) + " outside atom space");
  Atom a{};
  a.tenths = static_cast<int>(id % kThresholds) + 1;
  const std::size_t rest = id / kThresholds;
  a.attr = rest / kFunctions.size();
  a.function = kFunctions[rest % kFunctions.size()];
  a.feature_index = FeatureSchema::index(a.attr, a.function);
  a.threshold = a.tenths / 10.0;
  return a;
}

bool AtomSpace::holds(std::size_t id, std::span<const double> features) const {
  const Atom a = atom(id);
  return features[a.feature_index] >= a.threshold;
}

BooleanFeatureVector AtomSpace::booleanize(std::span<const double> features) const {
  if (features.size() != attrs_ * kSimilarityCount) {
    throw ValidationError("booleanize: feature vector has dimension " + std::to_string(features.size()) +
                          ", expected " + std::to_string(attrs_ * kSimilarityCount));
  }
  BooleanFeatureVector out(size(), 0);
  for (std::size_t id = 0; id < out.size(); ++id) out[id] = holds(id, features) ? 1 : 0;
  return out;
}

std::string AtomSpace::describe(std::size_t id, const FeatureSchema& schema) const {
  const Atom a = atom(id);
  const std::string& attr = schema.attribute_names().at(a.attr);
  if (a.function == SimilarityFunction::exact_match) {
    return "left." + attr + " = right." + attr;
  }
  std::ostringstream os;
  os << similarity_name(a.function) << '(' << attr << ") ≥ " << a.tenths / 10 << '.' << a.tenths % 10;
  return os.str();
}

FeatureSchema make_schema(const TablePair& tables) { return FeatureSchema(tables.resolved.names); }

namespace {

std::optional<std::string_view> value_of(const Record& rec, std::size_t col) {
  const auto& v = rec.values[col];
  if (!v) return std::nullopt;
  return std::string_view(*v);
}

}  // namespace

double feature_value(const CandidatePair& pair, const TablePair& tables, std::size_t d) {
  const std::size_t attr = d / kSimilarityCount;
  if (attr >= tables.resolved.size()) throw ValidationError("feature index out of range");
  const Record& l = tables.left.at(pair.left_row);
  const Record& r = tables.right.at(pair.right_row);
  return similarity(similarity_at(d % kSimilarityCount), value_of(l, tables.resolved.left[attr]),
                    value_of(r, tables.resolved.right[attr]));
}

FeatureVector featurize(const CandidatePair& pair, const TablePair& tables) {
  if (pair.left_row >= tables.left.size() || pair.right_row >= tables.right.size()) {
    throw NotFoundError("pair " + std::to_string(pair.pair_id) + " references an unknown record");
  }
  FeatureVector out(tables.resolved.size() * kSimilarityCount);
  for (std::size_t d = 0; d < out.size(); ++d) out[d] = feature_value(pair, tables, d);
  return out;
}

BooleanFeatureVector booleanize(const CandidatePair& pair, const TablePair& tables) {
  return AtomSpace(tables.resolved.size()).booleanize(featurize(pair, tables));
}

FeatureMatrix featurize_all(const std::vector<CandidatePair>& pairs, const TablePair& tables, std::size_t jobs) {
  const std::size_t dim = tables.resolved.size() * kSimilarityCount;
  FeatureMatrix m(pairs.size(), dim);
  auto work = [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto v = featurize(pairs[i], tables);
      std::copy(v.begin(), v.end(), m.row(i).begin());
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, pairs.size()));
  if (jobs == 1) {
    work(0, pairs.size());
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back(work, pairs.size() * w / jobs, pairs.size() * (w + 1) / jobs);
    }
  }
  return m;
}

void write_feature_matrix(std::ostream& out, const FeatureMatrix& m, const FeatureSchema& schema) {
  std::vector<std::string> header{"pair_id"};
  for (std::size_t d = 0; d < m.dim(); ++d) header.push_back(schema.name(d));
  out << csv::join(header) << '\n';
  char buf[32];
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << r;
    for (double v : m.row(r)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void MatrixFeatureSource::fill(PairId id, std::span<double> out) const {
  auto row = m_->row(static_cast<std::size_t>(id));
  std::copy(row.begin(), row.end(), out.begin());
}

const CandidatePair& TableFeatureSource::pair(PairId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pairs_->size()) {
    throw NotFoundError("unknown pair id " + std::to_string(id));
  }
  return (*pairs_)[static_cast<std::size_t>(id)];
}

double TableFeatureSource::value(PairId id, std::size_t d) const { return feature_value(pair(id), *tables_, d); }

void TableFeatureSource::fill(PairId id, std::span<double> out) const {
  auto v = featurize(pair(id), *tables_);
  std::copy(v.begin(), v.end(), out.begin());
}

}  // namespace emal
