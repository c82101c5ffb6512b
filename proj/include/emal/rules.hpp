#pragma once

#include <span>
#include <string>
#include <vector>

#include "emal/features.hpp"
#include "emal/training_set.hpp"

namespace emal {

/// Conjunction of atom ids, kept sorted. The empty rule is always true.
struct ConjunctiveRule {
  std::vector<std::size_t> atoms;
  bool matches(std::span<const std::uint8_t> x) const;
  bool operator==(const ConjunctiveRule&) const = default;
};

struct RuleConstraints {
  double min_precision = 0.9;
  std::size_t min_coverage = 1;  // positives a rule must keep covering
};

struct LearnedRule {
  ConjunctiveRule rule;
  double precision = 0.0;
  std::size_t positives = 0;  // training positives matched
  std::size_t matched = 0;    // training examples matched
};

/// Atom vectors with labels, as the rule learner sees a training set.
struct BooleanSet {
  std::vector<BooleanFeatureVector> rows;
  std::vector<int> labels;
  std::size_t atoms = 0;

  static BooleanSet from(const TrainingSet& examples, const AtomSpace& space);
  void add(BooleanFeatureVector x, int label);
  std::size_t size() const { return labels.size(); }
};

/// Monotone DNF: OR over rules of AND over atoms.
struct DnfModel {
  AtomSpace space;
  std::vector<ConjunctiveRule> rules;
};

/// Greedy growth from the empty rule: add the atom with the best training
/// precision (ties: more positives covered, then lower atom id) until the
/// rule reaches min_precision or no atom raises precision.
LearnedRule learn_rule(const BooleanSet& examples, const RuleConstraints& constraints);

/// Precision/coverage of a fixed rule on a set.
LearnedRule evaluate_rule(const ConjunctiveRule& rule, const BooleanSet& examples);

/// One relaxation per atom, dropping that atom.
std::vector<ConjunctiveRule> rule_minus(const ConjunctiveRule& rule);

/// Sequential covering: learn a rule, drop the positives it covers, repeat
/// while the rule meets min_precision and covers something new.
DnfModel learn_dnf(const TrainingSet& examples, const AtomSpace& space, const RuleConstraints& constraints,
                   std::size_t max_rules = 16);

int dnf_predict(const DnfModel& model, std::span<const std::uint8_t> atoms);
/// Same as above, reading atoms off a numeric feature vector.
int dnf_predict_features(const DnfModel& model, std::span<const double> features);
bool rule_matches_features(const ConjunctiveRule& rule, const AtomSpace& space, std::span<const double> features);

std::string describe(const ConjunctiveRule& rule, const AtomSpace& space, const FeatureSchema& schema);
std::string describe(const DnfModel& model, const FeatureSchema& schema);

}  // namespace emal
