#pragma once

#include <span>
#include <vector>

#include "emal/rng.hpp"
#include "emal/training_set.hpp"

namespace emal {

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
};

struct LinearParams {
  int epochs = 100;
  double learning_rate = 0.3;     // step size in epoch e (1-based) is learning_rate / sqrt(e)
  double regularization = 1e-3;   // L2 strength
};

/// Soft-margin linear classifier: hinge loss + L2, fit by stochastic
/// subgradient descent. The returned model averages the iterates of the
/// second half of the epochs. Requires both classes.
LinearModel train_linear(const TrainingSet& examples, const LinearParams& params, Rng& rng);

/// W.X + b
double linear_score(const LinearModel& model, std::span<const double> x);
/// |W.X + b|; the sign is discarded.
double linear_margin(const LinearModel& model, std::span<const double> x);
/// 1 when W.X + b >= 0.
int linear_predict(const LinearModel& model, std::span<const double> x);

/// lambda/2 * |W|^2 + mean hinge loss over the examples.
double hinge_objective(const LinearModel& model, const TrainingSet& examples, double regularization);

}  // namespace emal
