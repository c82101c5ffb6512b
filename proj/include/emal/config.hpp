#pragma once

#include <string>

#include <json.hpp>

#include "emal/session.hpp"

namespace emal {

/// A rejected config field. `path` is the dotted key ("oracle.noise").
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string path, const std::string& message)
      : ValidationError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// JSON mirror of SessionConfig. Keys follow the struct fields; nested
/// objects for `split`, `oracle` and `params` (with `linear`, `mlp`,
/// `rules` inside). Unset optionals are written as null.
nlohmann::json to_json(const SessionConfig& cfg);
/// Strict inverse of to_json: unknown keys and wrong types raise ConfigError.
/// Missing keys keep their defaults. The result is validated.
SessionConfig session_from_json(const nlohmann::json& j);

}  // namespace emal
