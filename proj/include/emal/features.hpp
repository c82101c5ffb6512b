#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emal/corpus.hpp"
#include "emal/similarity.hpp"

namespace emal {

/// Feature layout: dimension d = attr * 21 + function, attributes in
/// alignment order.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<std::string> attribute_names) : attrs_(std::move(attribute_names)) {}

  std::size_t attributes() const { return attrs_.size(); }
  std::size_t dim() const { return attrs_.size() * kSimilarityCount; }
  const std::vector<std::string>& attribute_names() const { return attrs_; }

  static std::size_t index(std::size_t attr, SimilarityFunction f) {
    return attr * kSimilarityCount + static_cast<std::size_t>(f);
  }
  std::size_t attribute_of(std::size_t d) const { return d / kSimilarityCount; }
  SimilarityFunction function_of(std::size_t d) const { return similarity_at(d % kSimilarityCount); }
  /// e.g. "JaccardSim(name)"
  std::string name(std::size_t d) const;

 private:
  std::vector<std::string> attrs_;
};

using FeatureVector = std::vector<double>;
using BooleanFeatureVector = std::vector<std::uint8_t>;

/// Dense row-major matrix of feature vectors, row index == pair id.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * dim_, dim_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * dim_, dim_}; }
  double at(std::size_t r, std::size_t d) const { return data_[r * dim_ + d]; }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// Boolean atoms "sim_f(attr) >= tau" for the three rule functions
/// (exact match, Jaro-Winkler, Jaccard) and tau in {0.1, ..., 1.0}.
/// Atom id = (attr * 3 + slot) * 10 + (tenths - 1).
class AtomSpace {
 public:
  static constexpr std::array<SimilarityFunction, 3> kFunctions = {
      SimilarityFunction::exact_match, SimilarityFunction::jaro_winkler, SimilarityFunction::token_jaccard};
  static constexpr std::size_t kThresholds = 10;

  struct Atom {
    std::size_t attr;
    SimilarityFunction function;
    int tenths;                 // threshold = tenths / 10
    std::size_t feature_index;  // position in the numeric feature vector
    double threshold;
  };

  AtomSpace() = default;
  explicit AtomSpace(std::size_t attributes) : attrs_(attributes) {}

  std::size_t attributes() const { return attrs_; }
  std::size_t size() const { return attrs_ * kFunctions.size() * kThresholds; }
  Atom atom(std::size_t id) const;
  static std::size_t id(std::size_t attr, std::size_t slot, int tenths) {
    return (attr * kFunctions.size() + slot) * kThresholds + static_cast<std::size_t>(tenths - 1);
  }

  bool holds(std::size_t id, std::span<const double> features) const;
  BooleanFeatureVector booleanize(std::span<const double> features) const;
  /// "JaccardSim(name) ≥ 0.7"; exact-match atoms render as "left.a = right.a".
  std::string describe(std::size_t id, const FeatureSchema& schema) const;

  bool operator==(const AtomSpace&) const = default;

 private:
  std::size_t attrs_ = 0;
};

FeatureSchema make_schema(const TablePair& tables);

/// 21 similarity values per aligned attribute pair.
FeatureVector featurize(const CandidatePair& pair, const TablePair& tables);
/// A single feature dimension, without computing the rest of the vector.
double feature_value(const CandidatePair& pair, const TablePair& tables, std::size_t d);
BooleanFeatureVector booleanize(const CandidatePair& pair, const TablePair& tables);

/// Featurizes every pair once. Parallel over pairs when jobs > 1; results do
/// not depend on the worker count.
FeatureMatrix featurize_all(const std::vector<CandidatePair>& pairs, const TablePair& tables, std::size_t jobs = 1);

/// Header "pair_id,<feature names...>" followed by one row per pair.
void write_feature_matrix(std::ostream& out, const FeatureMatrix& m, const FeatureSchema& schema);

/// Random access to feature values by pair id. Implementations may compute
/// values on demand; callers that only need a few dimensions should use
/// value() rather than fill().
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::size_t dim() const = 0;
  virtual double value(PairId id, std::size_t d) const = 0;
  virtual void fill(PairId id, std::span<double> out) const = 0;
};

class MatrixFeatureSource final : public FeatureSource {
 public:
  explicit MatrixFeatureSource(const FeatureMatrix& m) : m_(&m) {}
  std::size_t dim() const override { return m_->dim(); }
  double value(PairId id, std::size_t d) const override { return m_->at(static_cast<std::size_t>(id), d); }
  void fill(PairId id, std::span<double> out) const override;

 private:
  const FeatureMatrix* m_;
};

/// Computes similarities straight from the record tables.
class TableFeatureSource final : public FeatureSource {
 public:
  TableFeatureSource(const std::vector<CandidatePair>& pairs, const TablePair& tables)
      : pairs_(&pairs), tables_(&tables) {}
  std::size_t dim() const override { return tables_->resolved.size() * kSimilarityCount; }
  double value(PairId id, std::size_t d) const override;
  void fill(PairId id, std::span<double> out) const override;

 private:
  const CandidatePair& pair(PairId id) const;
  const std::vector<CandidatePair>* pairs_;
  const TablePair* tables_;
};

}  // namespace emal
