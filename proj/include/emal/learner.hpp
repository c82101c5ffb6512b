#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>

#include "emal/forest.hpp"
#include "emal/linear.hpp"
#include "emal/mlp.hpp"
#include "emal/rules.hpp"

namespace emal {

enum class LearnerKind { linear, forest, mlp, rules };

std::string to_string(LearnerKind k);
std::optional<LearnerKind> parse_learner(const std::string& s);

/// Stand-in for a committee member whose bootstrap sample held one class.
struct ConstantModel {
  int label = 0;
};

using Model = std::variant<ConstantModel, LinearModel, ForestModel, MlpModel, DnfModel>;

struct LearnerParams {
  LinearParams linear;
  int n_trees = 10;
  MlpParams mlp;
  RuleConstraints rules;
};

/// Trains one model of the given family. Both classes must be present.
Model train_model(LearnerKind kind, const TrainingSet& examples, const LearnerParams& params, Rng& rng);
/// As train_model, but a single-class set yields a ConstantModel.
Model train_member(LearnerKind kind, const TrainingSet& examples, const LearnerParams& params, Rng& rng);

int predict(const Model& model, std::span<const double> x);

const char* model_kind(const Model& model);

}  // namespace emal
