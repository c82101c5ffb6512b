#include "emal/rules.hpp"

#include <algorithm>
#include <string>

namespace emal {

bool ConjunctiveRule::matches(std::span<const std::uint8_t> x) const {
  return std::all_of(atoms.begin(), atoms.end(), [&](std::size_t a) { return x[a] != 0; });
}

BooleanSet BooleanSet::from(const TrainingSet& examples, const AtomSpace& space) {
  if (examples.dim() != space.attributes() * kSimilarityCount) {
    throw ValidationError("atom space does not match feature dimension " + std::to_string(examples.dim()));
  }
  BooleanSet set;
  set.atoms = space.size();
  for (std::size_t i = 0; i < examples.size(); ++i) set.add(space.booleanize(examples.row(i)), examples.label(i));
  return set;
}

void BooleanSet::add(BooleanFeatureVector x, int label) {
  if (atoms == 0) atoms = x.size();
  if (x.size() != atoms) throw ValidationError("atom vector has size " + std::to_string(x.size()));
  rows.push_back(std::move(x));
  labels.push_back(label);
}

LearnedRule evaluate_rule(const ConjunctiveRule& rule, const BooleanSet& examples) {
  LearnedRule r{rule, 0.0, 0, 0};
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!rule.matches(examples.rows[i])) continue;
    ++r.matched;
    r.positives += examples.labels[i] == 1;
  }
  r.precision = r.matched ? static_cast<double>(r.positives) / static_cast<double>(r.matched) : 0.0;
  return r;
}

LearnedRule learn_rule(const BooleanSet& examples, const RuleConstraints& constraints) {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < examples.size(); ++i) active.push_back(i);
  LearnedRule current = evaluate_rule({}, examples);
  if (current.positives == 0) throw ValidationError("learn_rule: no positive examples");

  std::vector<std::uint8_t> used(examples.atoms, 0);
  while (current.precision < constraints.min_precision) {
    std::size_t best_atom = examples.atoms;
    std::size_t best_pos = 0, best_matched = 0;
    for (std::size_t a = 0; a < examples.atoms; ++a) {
      if (used[a]) continue;
      std::size_t pos = 0, matched = 0;
      for (std::size_t i : active) {
        if (!examples.rows[i][a]) continue;
        ++matched;
        pos += examples.labels[i] == 1;
      }
      if (pos == 0 || pos < constraints.min_coverage) continue;
      if (best_atom == examples.atoms) {
        best_atom = a, best_pos = pos, best_matched = matched;
        continue;
      }
      // pos/matched > best_pos/best_matched, compared without division
      const std::size_t lhs = pos * best_matched, rhs = best_pos * matched;
      if (lhs > rhs || (lhs == rhs && pos > best_pos)) best_atom = a, best_pos = pos, best_matched = matched;
    }
    if (best_atom == examples.atoms) break;
    // Only accept strict precision improvements.
    if (best_pos * current.matched <= current.positives * best_matched) break;

    used[best_atom] = 1;
    current.rule.atoms.push_back(best_atom);
    std::sort(current.rule.atoms.begin(), current.rule.atoms.end());
    std::erase_if(active, [&](std::size_t i) { return !examples.rows[i][best_atom]; });
    current.positives = best_pos;
    current.matched = best_matched;
    current.precision = static_cast<double>(best_pos) / static_cast<double>(best_matched);
  }
  return current;
}

std::vector<ConjunctiveRule> rule_minus(const ConjunctiveRule& rule) {
  if (rule.atoms.empty()) throw ValidationError("rule_minus: empty rule");
  std::vector<ConjunctiveRule> out;
  for (std::size_t drop = 0; drop < rule.atoms.size(); ++drop) {
    ConjunctiveRule r;
    for (std::size_t k = 0; k < rule.atoms.size(); ++k) {
      if (k != drop) r.atoms.push_back(rule.atoms[k]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

DnfModel learn_dnf(const TrainingSet& examples, const AtomSpace& space, const RuleConstraints& constraints,
                   std::size_t max_rules) {
  DnfModel model{space, {}};
  BooleanSet remaining = BooleanSet::from(examples, space);
  while (model.rules.size() < max_rules) {
    const LearnedRule r = evaluate_rule({}, remaining);
    if (r.positives == 0) break;
    const LearnedRule rule = learn_rule(remaining, constraints);
    if (rule.rule.atoms.empty() || rule.precision < constraints.min_precision) break;
    model.rules.push_back(rule.rule);
    BooleanSet next;
    next.atoms = remaining.atoms;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      if (remaining.labels[i] == 1 && rule.rule.matches(remaining.rows[i])) continue;
      next.rows.push_back(std::move(remaining.rows[i]));
      next.labels.push_back(remaining.labels[i]);
    }
    remaining = std::move(next);
  }
  return model;
}

int dnf_predict(const DnfModel& model, std::span<const std::uint8_t> atoms) {
  if (atoms.size() != model.space.size()) {
    throw ValidationError("atom vector has size " + std::to_string(atoms.size()) + ", model expects " +
                          std::to_string(model.space.size()));
  }
  for (const auto& r : model.rules) {
    if (r.matches(atoms)) return 1;
  }
  return 0;
}

bool rule_matches_features(const ConjunctiveRule& rule, const AtomSpace& space, std::span<const double> features) {
  return std::all_of(rule.atoms.begin(), rule.atoms.end(), [&](std::size_t a) { return space.holds(a, features); });
}

int dnf_predict_features(const DnfModel& model, std::span<const double> features) {
  if (features.size() != model.space.attributes() * kSimilarityCount) {
    throw ValidationError("feature vector has dimension " + std::to_string(features.size()));
  }
  for (const auto& r : model.rules) {
    if (rule_matches_features(r, model.space, features)) return 1;
  }
  return 0;
}

std::string describe(const ConjunctiveRule& rule, const AtomSpace& space, const FeatureSchema& schema) {
  if (rule.atoms.empty()) return "TRUE";
  std::string s;
  for (std::size_t k = 0; k < rule.atoms.size(); ++k) {
    if (k) s += " AND ";
    s += space.describe(rule.atoms[k], schema);
  }
  return s;
}

std::string describe(const DnfModel& model, const FeatureSchema& schema) {
  if (model.rules.empty()) return "FALSE";
  std::string s;
  for (std::size_t k = 0; k < model.rules.size(); ++k) {
    if (k) s += "\nOR ";
    s += "(" + describe(model.rules[k], model.space, schema) + ")";
  }
  return s;
}

}  // namespace emal
