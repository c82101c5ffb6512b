#include "emal/model_io.hpp"

#include <json.hpp>

namespace emal {

using nlohmann::json;

std::string dump_model(const Model& model) {
  json j;
  j["kind"] = model_kind(model);
  if (const auto* m = std::get_if<ConstantModel>(&model)) {
    j["label"] = m->label;
  } else if (const auto* m = std::get_if<LinearModel>(&model)) {
    j["weights"] = m->weights;
    j["bias"] = m->bias;
  } else if (const auto* m = std::get_if<ForestModel>(&model)) {
    j["dim"] = m->dim;
    json trees = json::array();
    for (const auto& t : m->trees) {
      json nodes = json::array();
      for (const auto& n : t.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
      trees.push_back({{"nodes", nodes}});
    }
    j["trees"] = trees;
  } else if (const auto* m = std::get_if<MlpModel>(&model)) {
    j["dim"] = m->dim;
    j["hidden"] = m->hidden;
    j["w1"] = m->w1;
    j["b1"] = m->b1;
    j["gamma"] = m->gamma;
    j["beta"] = m->beta;
    j["running_mean"] = m->running_mean;
    j["running_var"] = m->running_var;
    j["w2"] = m->w2;
    j["b2"] = m->b2;
    j["bn_epsilon"] = m->bn_epsilon;
  } else if (const auto* m = std::get_if<DnfModel>(&model)) {
    j["attributes"] = m->space.attributes();
    json rules = json::array();
    for (const auto& r : m->rules) rules.push_back(r.atoms);
    j["rules"] = rules;
  }
  return j.dump();
}

Model load_model(const std::string& text) {
  try {
    const json j = json::parse(text);
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return ConstantModel{j.at("label").get<int>()};
    if (kind == "linear") return LinearModel{j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
    if (kind == "forest") {
      ForestModel m;
      m.dim = j.at("dim").get<std::size_t>();
      for (const auto& t : j.at("trees")) {
        std::vector<TreeNode> nodes;
        for (const auto& n : t.at("nodes")) {
          nodes.push_back(TreeNode{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                                   n.at(4).get<int>()});
        }
        m.trees.emplace_back(m.dim, std::move(nodes));
      }
      return m;
    }
    if (kind == "mlp") {
      MlpModel m;
      m.dim = j.at("dim").get<std::size_t>();
      m.hidden = j.at("hidden").get<std::size_t>();
      m.w1 = j.at("w1").get<std::vector<double>>();
      m.b1 = j.at("b1").get<std::vector<double>>();
      m.gamma = j.at("gamma").get<std::vector<double>>();
      m.beta = j.at("beta").get<std::vector<double>>();
      m.running_mean = j.at("running_mean").get<std::vector<double>>();
      m.running_var = j.at("running_var").get<std::vector<double>>();
      m.w2 = j.at("w2").get<std::vector<double>>();
      m.b2 = j.at("b2").get<double>();
      m.bn_epsilon = j.at("bn_epsilon").get<double>();
      if (m.w1.size() != m.dim * m.hidden || m.w2.size() != m.hidden) throw ValidationError("mlp shape mismatch");
      return m;
    }
    if (kind == "dnf") {
      DnfModel m{AtomSpace(j.at("attributes").get<std::size_t>()), {}};
      for (const auto& r : j.at("rules")) m.rules.push_back(ConjunctiveRule{r.get<std::vector<std::size_t>>()});
      return m;
    }
    throw ValidationError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model dump: ") + e.what());
  }
}

}  // namespace emal
