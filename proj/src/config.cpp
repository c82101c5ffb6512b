#include "emal/config.hpp"

#include <set>

namespace emal {

namespace {

using nlohmann::json;

// Reads the keys of one JSON object and rejects whatever was not read.
class Fields {
 public:
  Fields(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "(root)" : prefix_, "expected an object");
  }
  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  void get(const std::string& key, std::string& out) {
    if (auto* v = find(key)) {
      if (!v->is_string()) throw ConfigError(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& key, double& out) {
    if (auto* v = find(key)) {
      if (!v->is_number()) throw ConfigError(path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void get(const std::string& key, bool& out) {
    if (auto* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  template <class T>
    requires std::is_integral_v<T>
  void get(const std::string& key, T& out) {
    if (auto* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      if (std::is_unsigned_v<T> && v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0) {
        throw ConfigError(path(key), "must not be negative");
      }
      out = v->get<T>();
    }
  }
  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    T value{};
    get(key, value);
    out = value;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

json to_json(const SessionConfig& c) {
  const auto& p = c.params;
  return {
      {"name", c.name},
      {"learner", to_string(c.learner)},
      {"selector", to_string(c.selector)},
      {"committee_size", c.committee_size},
      {"params",
       {{"n_trees", p.n_trees},
        {"linear",
         {{"epochs", p.linear.epochs},
          {"learning_rate", p.linear.learning_rate},
          {"regularization", p.linear.regularization}}},
        {"mlp",
         {{"hidden", p.mlp.hidden},
          {"epochs", p.mlp.epochs},
          {"batch_size", p.mlp.batch_size},
          {"learning_rate", p.mlp.learning_rate},
          {"decay", p.mlp.decay},
          {"momentum", p.mlp.momentum},
          {"dropout", p.mlp.dropout},
          {"bn_momentum", p.mlp.bn_momentum},
          {"bn_epsilon", p.mlp.bn_epsilon}}},
        {"rules", {{"min_precision", p.rules.min_precision}, {"min_coverage", p.rules.min_coverage}}}}},
      {"seed_size", c.seed_size},
      {"batch_size", c.batch_size},
      {"split",
       {{"mode", c.split.mode == SplitMode::holdout ? "holdout" : "progressive"},
        {"holdout_fraction", c.split.holdout_fraction}}},
      {"oracle", {{"mode", to_string(c.oracle.mode)}, {"noise", c.oracle.noise}}},
      {"blocking_k", opt(c.blocking_k)},
      {"ensemble_tau", opt(c.ensemble_tau)},
      {"f1_target", opt(c.f1_target)},
      {"label_budget", opt(c.label_budget)},
      {"max_iterations", opt(c.max_iterations)},
      {"master_seed", c.master_seed},
      {"human_seed", c.human_seed},
      {"jobs", c.jobs},
  };
}

SessionConfig session_from_json(const json& j) {
  SessionConfig c;
  Fields f(j, "");
  f.get("name", c.name);
  std::string s = to_string(c.learner);
  f.get("learner", s);
  if (auto k = parse_learner(s)) {
    c.learner = *k;
  } else {
    throw ConfigError("learner", "unknown learner '" + s + "' (linear, forest, mlp, rules)");
  }
  s = to_string(c.selector);
  f.get("selector", s);
  if (auto k = parse_selector(s)) {
    c.selector = *k;
  } else {
    throw ConfigError("selector", "unknown selector '" + s + "' (random, qbc, forest_qbc, margin, lfp_lfn)");
  }
  f.get("committee_size", c.committee_size);
  if (auto* pj = f.find("params")) {
    Fields p(*pj, "params");
    p.get("n_trees", c.params.n_trees);
    if (auto* lj = p.find("linear")) {
      Fields l(*lj, "params.linear");
      l.get("epochs", c.params.linear.epochs);
      l.get("learning_rate", c.params.linear.learning_rate);
      l.get("regularization", c.params.linear.regularization);
      l.finish();
    }
    if (auto* mj = p.find("mlp")) {
      Fields m(*mj, "params.mlp");
      auto& mp = c.params.mlp;
      m.get("hidden", mp.hidden);
      m.get("epochs", mp.epochs);
      m.get("batch_size", mp.batch_size);
      m.get("learning_rate", mp.learning_rate);
      m.get("decay", mp.decay);
      m.get("momentum", mp.momentum);
      m.get("dropout", mp.dropout);
      m.get("bn_momentum", mp.bn_momentum);
      m.get("bn_epsilon", mp.bn_epsilon);
      m.finish();
    }
    if (auto* rj = p.find("rules")) {
      Fields r(*rj, "params.rules");
      r.get("min_precision", c.params.rules.min_precision);
      r.get("min_coverage", c.params.rules.min_coverage);
      r.finish();
    }
    p.finish();
  }
  f.get("seed_size", c.seed_size);
  f.get("batch_size", c.batch_size);
  if (auto* sj = f.find("split")) {
    Fields sp(*sj, "split");
    std::string mode = c.split.mode == SplitMode::holdout ? "holdout" : "progressive";
    sp.get("mode", mode);
    if (mode == "holdout") {
      c.split.mode = SplitMode::holdout;
    } else if (mode == "progressive") {
      c.split.mode = SplitMode::progressive;
    } else {
      throw ConfigError("split.mode", "expected progressive or holdout");
    }
    sp.get("holdout_fraction", c.split.holdout_fraction);
    sp.finish();
  }
  if (auto* oj = f.find("oracle")) {
    Fields o(*oj, "oracle");
    std::string mode = to_string(c.oracle.mode);
    o.get("mode", mode);
    if (auto m = parse_oracle_mode(mode)) {
      c.oracle.mode = *m;
    } else {
      throw ConfigError("oracle.mode", "expected perfect, noisy or human");
    }
    o.get("noise", c.oracle.noise);
    o.finish();
  }
  f.get("blocking_k", c.blocking_k);
  f.get("ensemble_tau", c.ensemble_tau);
  f.get("f1_target", c.f1_target);
  f.get("label_budget", c.label_budget);
  f.get("max_iterations", c.max_iterations);
  f.get("master_seed", c.master_seed);
  f.get("human_seed", c.human_seed);
  f.get("jobs", c.jobs);
  f.finish();
  validate(c);
  return c;
}

}  // namespace emal
