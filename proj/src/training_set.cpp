#include "emal/training_set.hpp"

#include <algorithm>
#include <string>

namespace emal {

void TrainingSet::add(PairId id, std::span<const double> features, int label) {
  if (features.size() != dim_) {
    throw ValidationError("training row has dimension " + std::to_string(features.size()) + ", expected " +
                          std::to_string(dim_));
  }
  if (label != 0 && label != 1) throw ValidationError("labels must be 0 or 1");
  x_.insert(x_.end(), features.begin(), features.end());
  y_.push_back(label);
  ids_.push_back(id);
}

std::size_t TrainingSet::positives() const {
  return static_cast<std::size_t>(std::count(y_.begin(), y_.end(), 1));
}

TrainingSet TrainingSet::subset(std::span<const std::size_t> rows) const {
  TrainingSet out(dim_);
  for (std::size_t r : rows) out.add(ids_[r], row(r), y_[r]);
  return out;
}

}  // namespace emal
