#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "emal/rng.hpp"
#include "emal/training_set.hpp"

namespace emal {

struct MlpParams {
  std::size_t hidden = 0;  // 0 picks ceil(dim / 2)
  int epochs = 50;
  std::size_t batch_size = 8;
  double learning_rate = 0.001;
  double decay = 0.99;       // learning rate multiplier applied once per epoch
  double momentum = 0.95;
  double dropout = 0.5;      // probability of dropping a hidden unit in training
  double bn_momentum = 0.9;  // running statistics keep this share of the old value
  double bn_epsilon = 1e-5;
};

/// One hidden layer: affine -> ReLU -> batch-norm -> (dropout) -> affine,
/// whose output is the margin; sigmoid(margin) is the match probability.
struct MlpModel {
  std::size_t dim = 0;
  std::size_t hidden = 0;
  std::vector<double> w1;  // hidden x dim, row-major
  std::vector<double> b1;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  double bn_epsilon = 1e-5;
};

/// Trainable parameter groups in a fixed order, shared by the model and its
/// gradient so the two can be walked in lockstep.
inline constexpr std::array<std::string_view, 6> kMlpParameterGroups = {"w1", "b1", "gamma", "beta", "w2", "b2"};

std::array<std::span<double>, 6> parameter_groups(MlpModel& m);

struct MlpGradients {
  std::vector<double> w1, b1, gamma, beta, w2;
  double b2 = 0.0;
  std::array<std::span<double>, 6> groups();
};

enum class NormMode { batch_statistics, running_statistics };

MlpModel init_mlp(std::size_t dim, std::size_t hidden, Rng& rng);

/// Mean squared error 0.5 * (sigmoid(margin) - y)^2 over `rows`. When `grads`
/// is given it receives d(loss)/d(parameter). `keep` is an optional
/// rows.size() x hidden mask (1 = keep); kept units are scaled by
/// 1 / (1 - dropout).
double mlp_batch_loss(const MlpModel& model, const TrainingSet& examples, std::span<const std::size_t> rows,
                      NormMode mode, const std::vector<std::uint8_t>* keep, double dropout,
                      MlpGradients* grads);

/// SGD with momentum on mini-batches. Requires at least one example of each class.
MlpModel train_mlp(const TrainingSet& examples, const MlpParams& params, Rng& rng);

/// Learning rate used during `epoch` (0-based).
double mlp_learning_rate(const MlpParams& params, int epoch);

struct MlpOutput {
  double margin = 0.0;       // pre-sigmoid output
  double probability = 0.5;  // sigmoid(margin)
};

MlpOutput mlp_margin(const MlpModel& model, std::span<const double> x);
/// 1 when probability >= 0.5 (margin >= 0).
int mlp_predict(const MlpModel& model, std::span<const double> x);

double sigmoid(double z);

}  // namespace emal
