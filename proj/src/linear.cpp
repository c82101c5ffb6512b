#include "emal/linear.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace emal {

namespace {

void check_dim(const LinearModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw ValidationError("linear model expects dimension " + std::to_string(model.weights.size()) + ", got " +
                          std::to_string(x.size()));
  }
}

}  // namespace

LinearModel train_linear(const TrainingSet& examples, const LinearParams& params, Rng& rng) {
  if (!examples.has_both_classes()) throw ValidationError("train_linear: need examples of both classes");
  const std::size_t n = examples.size();
  const std::size_t dim = examples.dim();
  LinearModel m;
  m.weights.assign(dim, 0.0);

  // Averaging the second half of the iterates damps the last epochs' noise.
  LinearModel avg;
  avg.weights.assign(dim, 0.0);
  std::size_t averaged = 0;
  const int average_from = params.epochs / 2;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const double eta = params.learning_rate / std::sqrt(static_cast<double>(epoch + 1));
    const double shrink = 1.0 - eta * params.regularization;
    rng.shuffle(order);
    for (std::size_t i : order) {
      const auto x = examples.row(i);
      const double y = examples.label(i) ? 1.0 : -1.0;
      const double score = std::inner_product(x.begin(), x.end(), m.weights.begin(), m.bias);
      for (double& w : m.weights) w *= shrink;
      if (y * score < 1.0) {
        for (std::size_t d = 0; d < dim; ++d) m.weights[d] += eta * y * x[d];
        m.bias += eta * y;
      }
      if (epoch >= average_from) {
        for (std::size_t d = 0; d < dim; ++d) avg.weights[d] += m.weights[d];
        avg.bias += m.bias;
        ++averaged;
      }
    }
  }
  if (averaged > 0) {
    for (double& w : avg.weights) w /= static_cast<double>(averaged);
    avg.bias /= static_cast<double>(averaged);
    m = std::move(avg);
  }
  return m;
}

double linear_score(const LinearModel& model, std::span<const double> x) {
  check_dim(model, x);
  return std::inner_product(x.begin(), x.end(), model.weights.begin(), model.bias);
}

double linear_margin(const LinearModel& model, std::span<const double> x) {
  return std::fabs(linear_score(model, x));
}

int linear_predict(const LinearModel& model, std::span<const double> x) {
  return linear_score(model, x) >= 0.0 ? 1 : 0;
}

double hinge_objective(const LinearModel& model, const TrainingSet& examples, double regularization) {
  double norm2 = 0.0;
  for (double w : model.weights) norm2 += w * w;
  double loss = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const double y = examples.label(i) ? 1.0 : -1.0;
    loss += std::max(0.0, 1.0 - y * linear_score(model, examples.row(i)));
  }
  return 0.5 * regularization * norm2 + loss / static_cast<double>(examples.size());
}

}  // namespace emal
