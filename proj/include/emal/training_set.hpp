#pragma once

#include <span>
#include <vector>

#include "emal/common.hpp"

namespace emal {

/// Labeled examples as a dense row-major matrix. Row order is the order of
/// insertion; learners that shuffle do so with their own stream.
class TrainingSet {
 public:
  TrainingSet() = default;
  explicit TrainingSet(std::size_t dim) : dim_(dim) {}

  void add(PairId id, std::span<const double> features, int label);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return y_.size(); }
  bool empty() const { return y_.empty(); }
  std::span<const double> row(std::size_t i) const { return {x_.data() + i * dim_, dim_}; }
  int label(std::size_t i) const { return y_[i]; }
  PairId id(std::size_t i) const { return ids_[i]; }
  const std::vector<int>& labels() const { return y_; }

  std::size_t positives() const;
  bool has_both_classes() const { return positives() > 0 && positives() < size(); }

  /// Rows picked by index (duplicates allowed, as in a bootstrap resample).
  TrainingSet subset(std::span<const std::size_t> rows) const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> x_;
  std::vector<int> y_;
  std::vector<PairId> ids_;
};

}  // namespace emal
