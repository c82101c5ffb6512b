#pragma once

#include <string>

#include "emal/learner.hpp"

namespace emal {

/// Text dump of a model as JSON:
///   {"kind": "constant"|"linear"|"forest"|"mlp"|"dnf", ...family fields}
/// linear: weights, bias. forest: dim, trees[{nodes[[feature, threshold,
/// left, right, label]]}]. mlp: dim, hidden, w1, b1, gamma, beta,
/// running_mean, running_var, w2, b2, bn_epsilon. dnf: attributes,
/// rules[[atom ids]]. Doubles are written with enough digits to read back
/// bit-identical.
std::string dump_model(const Model& model);
Model load_model(const std::string& text);

}  // namespace emal
