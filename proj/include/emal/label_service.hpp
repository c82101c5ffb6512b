#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <json.hpp>

#include "emal/session.hpp"

namespace httplib {
class Server;
}

namespace emal {

/// A JSON reply and its HTTP status.
struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

struct ServiceOptions {
  /// Sessions are checkpointed here after every accepted submission and
  /// recovered from here on start. Empty disables checkpoints.
  std::filesystem::path checkpoint_dir;
};

/// Human labeling sessions behind a JSON API. Each session has one writer
/// at a time; readers get per-iteration snapshots. Transport-free so it can
/// be driven in-process; mount() binds it to HTTP.
class LabelService {
 public:
  LabelService(std::map<std::string, std::shared_ptr<const Dataset>> datasets, ServiceOptions options = {});

  /// Body: {"dataset": name (optional with one dataset), "config": SessionConfig
  /// JSON}. The oracle defaults to human mode and must be human.
  ServiceResponse create_session(const nlohmann::json& body);
  ServiceResponse state(const std::string& id) const;
  ServiceResponse batch(const std::string& id) const;
  /// Body: {"labels": {"<pair_id>": 0|1, ...}}. All-or-nothing: one unknown,
  /// stale or conflicting id rejects the whole request.
  ServiceResponse submit_labels(const std::string& id, const nlohmann::json& body);
  ServiceResponse metrics(const std::string& id) const;
  ServiceResponse model(const std::string& id) const;

  /// Rebuilds sessions from the checkpoint directory by replaying their
  /// answers; returns how many were restored.
  std::size_t recover();
  std::size_t size() const;

 private:
  struct Entry {
    std::string id;
    std::string dataset;
    std::string created_at;
    std::string updated_at;
    std::unique_ptr<Session> session;
    std::vector<nlohmann::json> snapshots;  // one per iteration, never modified
    mutable std::shared_mutex mutex;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  nlohmann::json state_json(const Entry& e) const;
  nlohmann::json batch_json(const Entry& e) const;
  void record_new_iterations(Entry& e);
  void checkpoint(const Entry& e) const;
  std::shared_ptr<const Dataset> dataset(const std::string& name) const;

  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  ServiceOptions options_;
  mutable std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::size_t next_id_ = 1;
};

/// POST /sessions, GET /sessions/{id}/state|batch|metrics|model,
/// POST /sessions/{id}/labels, plus GET /health.
void mount(httplib::Server& server, LabelService& service);

/// IterationLog as JSON (field names as in the struct, durations in ms).
nlohmann::json to_json(const IterationLog& row);

}  // namespace emal
