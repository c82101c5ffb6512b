#include "emal/oracle.hpp"

#include "emal/rng.hpp"

namespace emal {

std::string to_string(OracleMode m) {
  switch (m) {
    case OracleMode::perfect: return "perfect";
    case OracleMode::noisy: return "noisy";
    case OracleMode::human: return "human";
  }
  return "?";
}

std::optional<OracleMode> parse_oracle_mode(const std::string& s) {
  if (s == "perfect") return OracleMode::perfect;
  if (s == "noisy") return OracleMode::noisy;
  if (s == "human") return OracleMode::human;
  return std::nullopt;
}

Oracle::Oracle(OracleConfig cfg, std::uint64_t master_seed, std::vector<std::optional<int>> gold)
    : cfg_(cfg), key_(Rng::stream(master_seed, "oracle").next()), gold_(std::move(gold)) {
  if (!(cfg_.noise >= 0.0 && cfg_.noise <= 1.0)) throw ValidationError("oracle noise must be in [0, 1]");
  if (cfg_.mode == OracleMode::perfect && cfg_.noise != 0.0) {
    throw ValidationError("a perfect oracle cannot have noise");
  }
}

void Oracle::check(PairId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= gold_.size()) {
    throw NotFoundError("unknown pair id " + std::to_string(id));
  }
}

int Oracle::gold(PairId id) const {
  check(id);
  const auto& g = gold_[static_cast<std::size_t>(id)];
  if (!g) throw ValidationError("pair " + std::to_string(id) + " has no gold label");
  return *g;
}

std::optional<int> Oracle::ask(PairId id) {
  check(id);
  if (auto it = answers_.find(id); it != answers_.end()) return it->second;
  if (cfg_.mode == OracleMode::human) return std::nullopt;
  int label = gold(id);
  if (cfg_.mode == OracleMode::noisy && hashed_uniform(key_, static_cast<std::uint64_t>(id)) < cfg_.noise) {
    label = 1 - label;
    ++flips_;
  }
  answers_.emplace(id, label);
  return label;
}

void Oracle::provide(PairId id, int label) {
  check(id);
  if (label != 0 && label != 1) throw ValidationError("label must be 0 or 1");
  auto [it, inserted] = answers_.emplace(id, label);
  if (!inserted && it->second != label) {
    throw ConflictError("pair " + std::to_string(id) + " is already labeled " + std::to_string(it->second));
  }
}

}  // namespace emal
