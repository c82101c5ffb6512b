#include "emal/learner.hpp"

namespace emal {

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::linear: return "linear";
    case LearnerKind::forest: return "forest";
    case LearnerKind::mlp: return "mlp";
    case LearnerKind::rules: return "rules";
  }
  return "?";
}

std::optional<LearnerKind> parse_learner(const std::string& s) {
  if (s == "linear" || s == "svm") return LearnerKind::linear;
  if (s == "forest" || s == "trees") return LearnerKind::forest;
  if (s == "mlp" || s == "nn") return LearnerKind::mlp;
  if (s == "rules" || s == "dnf") return LearnerKind::rules;
  return std::nullopt;
}

Model train_model(LearnerKind kind, const TrainingSet& examples, const LearnerParams& params, Rng& rng) {
  if (!examples.has_both_classes()) throw ValidationError("training needs examples of both classes");
  switch (kind) {
    case LearnerKind::linear: return train_linear(examples, params.linear, rng);
    case LearnerKind::forest: return train_forest(examples, params.n_trees, rng);
    case LearnerKind::mlp: return train_mlp(examples, params.mlp, rng);
    case LearnerKind::rules:
      return learn_dnf(examples, AtomSpace(examples.dim() / kSimilarityCount), params.rules);
  }
  throw Error("unknown learner");
}

Model train_member(LearnerKind kind, const TrainingSet& examples, const LearnerParams& params, Rng& rng) {
  if (examples.empty()) throw ValidationError("training set is empty");
  if (!examples.has_both_classes()) return ConstantModel{examples.label(0)};
  return train_model(kind, examples, params, rng);
}

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

int predict(const Model& model, std::span<const double> x) {
  return std::visit(overloaded{
                        [](const ConstantModel& m) { return m.label; },
                        [&](const LinearModel& m) { return linear_predict(m, x); },
                        [&](const ForestModel& m) { return forest_predict(m, x); },
                        [&](const MlpModel& m) { return mlp_predict(m, x); },
                        [&](const DnfModel& m) { return dnf_predict_features(m, x); },
                    },
                    model);
}

const char* model_kind(const Model& model) {
  static constexpr const char* names[] = {"constant", "linear", "forest", "mlp", "dnf"};
  return names[model.index()];
}

}  // namespace emal
