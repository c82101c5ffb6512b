#include "emal/label_service.hpp"

#include <fstream>

#include <httplib.h>

#include "emal/config.hpp"
#include "emal/experiment.hpp"

namespace emal {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ServiceResponse error(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", {{"code", code}, {"message", message}}}}};
}

// Maps library exceptions onto HTTP statuses.
template <class F>
ServiceResponse guarded(F&& f) {
  try {
    return f();
  } catch (const NotFoundError& e) {
    return error(404, "not_found", e.what());
  } catch (const ConflictError& e) {
    return error(409, "conflict", e.what());
  } catch (const ValidationError& e) {
    return error(400, "validation", e.what());
  } catch (const json::exception& e) {
    return error(400, "validation", e.what());
  } catch (const std::exception& e) {
    return error(500, "runtime", e.what());
  }
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

const char* phase_name(Phase p) { return p == Phase::terminated ? "terminated" : "awaiting_labels"; }

PairId parse_pair_id(const std::string& key) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(key, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != key.size() || key.empty()) throw ValidationError("pair id '" + key + "' is not an integer");
  return static_cast<PairId>(v);
}

}  // namespace

json to_json(const IterationLog& r) {
  return {{"iteration", r.iteration},
          {"labels_used", r.labels_used},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"tp", r.tp},
          {"fp", r.fp},
          {"fn", r.fn},
          {"train_time_ms", r.train_time_ms},
          {"committee_creation_ms", r.committee_creation_ms},
          {"scoring_ms", r.scoring_ms},
          {"user_wait_ms", r.user_wait_ms},
          {"n_atoms", opt(r.n_atoms)},
          {"depth", opt(r.depth)},
          {"ensemble_size", opt(r.ensemble_size)},
          {"pool_size", r.pool_size},
          {"covered", r.covered},
          {"next_batch", r.next_batch},
          {"skipped", r.skipped},
          {"dot_products", r.dot_products}};
}

LabelService::LabelService(std::map<std::string, std::shared_ptr<const Dataset>> datasets, ServiceOptions options)
    : datasets_(std::move(datasets)), options_(std::move(options)) {
  if (datasets_.empty()) throw ValidationError("the label service needs at least one dataset");
  if (!options_.checkpoint_dir.empty()) fs::create_directories(options_.checkpoint_dir);
}

std::size_t LabelService::size() const {
  std::lock_guard lock(registry_mutex_);
  return sessions_.size();
}

std::shared_ptr<const Dataset> LabelService::dataset(const std::string& name) const {
  if (name.empty()) {
    if (datasets_.size() == 1) return datasets_.begin()->second;
    throw ValidationError("several datasets are loaded; name one with \"dataset\"");
  }
  auto it = datasets_.find(name);
  if (it == datasets_.end()) throw NotFoundError("unknown dataset '" + name + "'");
  return it->second;
}

std::shared_ptr<LabelService::Entry> LabelService::find(const std::string& id) const {
  std::lock_guard lock(registry_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

void LabelService::record_new_iterations(Entry& e) {
  const auto& logs = e.session->logs();
  for (std::size_t i = e.snapshots.size(); i < logs.size(); ++i) {
    json snap = to_json(logs[i]);
    snap["timestamp"] = iso8601_now();
    e.snapshots.push_back(std::move(snap));
  }
  e.updated_at = iso8601_now();
}

void LabelService::checkpoint(const Entry& e) const {
  if (options_.checkpoint_dir.empty()) return;
  json answers = json::array();
  for (const auto& [id, label] : e.session->answer_log()) answers.push_back({id, label});
  const json doc = {{"session_id", e.id},
                    {"dataset", e.dataset},
                    {"created_at", e.created_at},
                    {"config", to_json(e.session->config())},
                    {"answers", answers}};
  const fs::path final_path = options_.checkpoint_dir / (e.id + ".json");
  const fs::path tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << doc.dump() << '\n';
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
  }
  fs::rename(tmp, final_path);
}

json LabelService::batch_json(const Entry& e) const {
  const Session& s = *e.session;
  const Dataset& d = s.dataset();
  json items = json::array();
  const auto& names = d.schema.attribute_names();
  for (std::size_t k = 0; k < s.pending().size(); ++k) {
    const PairId id = s.pending()[k];
    const auto& p = d.pair(id);
    json left = json::array(), right = json::array(), sims = json::array();
    for (std::size_t a = 0; a < names.size(); ++a) {
      if (d.tables) {
        const auto& lv = d.tables->left.at(p.left_row).values[d.tables->resolved.left[a]];
        const auto& rv = d.tables->right.at(p.right_row).values[d.tables->resolved.right[a]];
        left.push_back(lv ? json(*lv) : json(nullptr));
        right.push_back(rv ? json(*rv) : json(nullptr));
      } else {
        left.push_back(nullptr);
        right.push_back(nullptr);
      }
      auto row = d.features.row(static_cast<std::size_t>(id));
      sims.push_back({{"jaro_winkler", row[FeatureSchema::index(a, SimilarityFunction::jaro_winkler)]},
                      {"token_jaccard", row[FeatureSchema::index(a, SimilarityFunction::token_jaccard)]}});
    }
    json item = {{"pair_id", id},         {"left_id", p.left_id}, {"right_id", p.right_id}, {"attributes", names},
                 {"left", left},          {"right", right},       {"similarities", sims}};
    if (k < s.pending_tags().size() && !s.pending_tags()[k].empty()) item["tag"] = s.pending_tags()[k];
    items.push_back(std::move(item));
  }
  json answered = json::object();
  for (const auto& [id, label] : s.pending_answers()) answered[std::to_string(id)] = label;
  return {{"session_id", e.id},
          {"iteration", s.logs().size()},
          {"batch_size", s.config().batch_size},
          {"items", items},
          {"answered", answered},
          {"remaining", s.unanswered()}};
}

json LabelService::state_json(const Entry& e) const {
  const Session& s = *e.session;
  json j = {{"session_id", e.id},
            {"dataset", e.dataset},
            {"state", phase_name(s.phase())},
            {"iteration", s.logs().size()},
            {"labels_used", s.labeled().size()},
            {"pending", s.pending().size()},
            {"answered", s.pending_answers().size()},
            {"remaining", s.unanswered()},
            {"termination", to_string(s.termination())},
            {"created_at", e.created_at},
            {"updated_at", e.updated_at},
            {"latest", e.snapshots.empty() ? json(nullptr) : e.snapshots.back()}};
  if (s.config().label_budget) j["label_budget"] = *s.config().label_budget;
  return j;
}

ServiceResponse LabelService::create_session(const json& body) {
  return guarded([&]() -> ServiceResponse {
    if (!body.is_object()) throw ValidationError("expected a JSON object");
    for (auto it = body.begin(); it != body.end(); ++it) {
      if (it.key() != "dataset" && it.key() != "config") throw ConfigError(it.key(), "unknown key");
    }
    const std::string dataset_name = body.value("dataset", std::string());
    auto data = dataset(dataset_name);
    json cfg_json = body.value("config", json::object());
    if (!cfg_json.is_object()) throw ValidationError("config must be an object");
    if (!cfg_json.contains("oracle")) cfg_json["oracle"] = {{"mode", "human"}, {"noise", 0.0}};
    SessionConfig cfg = session_from_json(cfg_json);
    if (cfg.oracle.mode != OracleMode::human) throw ConfigError("oracle.mode", "the label service needs a human oracle");

    auto e = std::make_shared<Entry>();
    {
      std::lock_guard lock(registry_mutex_);
      char buf[32];
      do {
        std::snprintf(buf, sizeof buf, "s%06zu", next_id_++);
      } while (sessions_.count(buf));
      e->id = buf;
    }
    e->dataset = dataset_name.empty() ? datasets_.begin()->first : dataset_name;
    e->created_at = iso8601_now();
    e->session = std::make_unique<Session>(data, cfg);
    record_new_iterations(*e);
    checkpoint(*e);
    {
      std::lock_guard lock(registry_mutex_);
      sessions_[e->id] = e;
    }
    json out = state_json(*e);
    out["batch"] = batch_json(*e);
    return {201, out};
  });
}

ServiceResponse LabelService::state(const std::string& id) const {
  return guarded([&]() -> ServiceResponse {
    auto e = find(id);
    std::shared_lock lock(e->mutex, std::try_to_lock);
    if (!lock.owns_lock()) {
      // a submission is retraining; report that instead of waiting
      return {200, {{"session_id", id}, {"state", "training"}}};
    }
    return {200, state_json(*e)};
  });
}

ServiceResponse LabelService::batch(const std::string& id) const {
  return guarded([&]() -> ServiceResponse {
    auto e = find(id);
    std::shared_lock lock(e->mutex);
    return {200, batch_json(*e)};
  });
}

ServiceResponse LabelService::metrics(const std::string& id) const {
  return guarded([&]() -> ServiceResponse {
    auto e = find(id);
    std::shared_lock lock(e->mutex);
    return {200, {{"session_id", id}, {"iterations", e->snapshots}}};
  });
}

ServiceResponse LabelService::model(const std::string& id) const {
  return guarded([&]() -> ServiceResponse {
    auto e = find(id);
    std::shared_lock lock(e->mutex);
    const auto sum = e->session->model_summary();
    json members = json::array();
    const auto& accepted = e->session->ensemble().accepted;
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      members.push_back({{"kind", sum.ensemble_members[i]},
                         {"precision", accepted[i].precision},
                         {"iteration", accepted[i].iteration},
                         {"covered", accepted[i].covered}});
    }
    return {200,
            {{"session_id", id},
             {"iteration", e->session->logs().size()},
             {"kind", sum.kind},
             {"text", sum.text},
             {"n_atoms", opt(sum.n_atoms)},
             {"depth", opt(sum.depth)},
             {"ensemble_members", members}}};
  });
}

ServiceResponse LabelService::submit_labels(const std::string& id, const json& body) {
  return guarded([&]() -> ServiceResponse {
    auto e = find(id);
    std::unique_lock lock(e->mutex);
    Session& s = *e->session;
    if (s.phase() == Phase::terminated) throw ConflictError("session has terminated");
    if (!body.is_object() || !body.contains("labels") || !body["labels"].is_object()) {
      throw ValidationError("expected {\"labels\": {\"<pair_id>\": 0 or 1, ...}}");
    }
    for (auto it = body.begin(); it != body.end(); ++it) {
      if (it.key() != "labels") throw ConfigError(it.key(), "unknown key");
    }
    // validate the whole request before touching the session
    std::vector<std::pair<PairId, int>> labels;
    const auto& pending = s.pending();
    for (auto it = body["labels"].begin(); it != body["labels"].end(); ++it) {
      const PairId pid = parse_pair_id(it.key());
      if (!it->is_number_integer() || (it->get<int>() != 0 && it->get<int>() != 1)) {
        throw ValidationError("label for pair " + it.key() + " must be 0 or 1");
      }
      if (std::find(pending.begin(), pending.end(), pid) == pending.end()) {
        throw NotFoundError("pair " + it.key() + " is not in the pending batch");
      }
      const int label = it->get<int>();
      if (auto prev = s.pending_answers().find(pid); prev != s.pending_answers().end() && prev->second != label) {
        throw ConflictError("pair " + it.key() + " is already labeled " + std::to_string(prev->second));
      }
      labels.emplace_back(pid, label);
    }
    for (const auto& [pid, label] : labels) s.submit(pid, label);
    bool advanced = false;
    if (s.batch_complete()) {
      s.advance();
      advanced = true;
      record_new_iterations(*e);
    } else {
      e->updated_at = iso8601_now();
    }
    checkpoint(*e);
    json out = state_json(*e);
    out["advanced"] = advanced;
    out["batch"] = batch_json(*e);
    return {200, out};
  });
}

std::size_t LabelService::recover() {
  if (options_.checkpoint_dir.empty() || !fs::exists(options_.checkpoint_dir)) return 0;
  std::vector<fs::path> files;
  for (const auto& f : fs::directory_iterator(options_.checkpoint_dir)) {
    if (f.path().extension() == ".json") files.push_back(f.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t restored = 0;
  for (const auto& path : files) {
    std::ifstream in(path);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
    auto e = std::make_shared<Entry>();
    e->id = doc.at("session_id").get<std::string>();
    e->dataset = doc.at("dataset").get<std::string>();
    e->created_at = doc.value("created_at", iso8601_now());
    e->session = std::make_unique<Session>(dataset(e->dataset), session_from_json(doc.at("config")));
    record_new_iterations(*e);
    Session& s = *e->session;
    const auto& answers = doc.at("answers");
    // answers the constructor already applied (a gold seed) come first
    const std::size_t skip = s.answer_log().size();
    for (std::size_t i = 0; i < answers.size(); ++i) {
      const auto pid = answers[i].at(0).get<PairId>();
      const int label = answers[i].at(1).get<int>();
      if (i < skip) {
        if (s.answer_log()[i] != std::pair<PairId, int>{pid, label}) {
          throw ValidationError(path.string() + ": checkpoint does not replay (seed differs)");
        }
        continue;
      }
      s.submit(pid, label);
      if (s.batch_complete()) {
        s.advance();
        record_new_iterations(*e);
      }
    }
    std::lock_guard lock(registry_mutex_);
    if (e->id.size() > 1 && e->id[0] == 's') {
      try {
        next_id_ = std::max(next_id_, static_cast<std::size_t>(std::stoull(e->id.substr(1))) + 1);
      } catch (const std::exception&) {
      }
    }
    sessions_[e->id] = e;
    ++restored;
  }
  return restored;
}

void mount(httplib::Server& server, LabelService& service) {
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req, json& out) -> std::optional<ServiceResponse> {
    try {
      out = req.body.empty() ? json::object() : json::parse(req.body);
      return std::nullopt;
    } catch (const json::exception& e) {
      return error(400, "validation", std::string("malformed JSON: ") + e.what());
    }
  };
  server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  server.Post("/sessions", [&service, reply, parse](const httplib::Request& req, httplib::Response& res) {
    json body;
    if (auto bad = parse(req, body)) return reply(res, *bad);
    reply(res, service.create_session(body));
  });
  server.Get(R"(/sessions/([^/]+)/state)", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.state(req.matches[1]));
  });
  server.Get(R"(/sessions/([^/]+)/batch)", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.batch(req.matches[1]));
  });
  server.Get(R"(/sessions/([^/]+)/metrics)", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.metrics(req.matches[1]));
  });
  server.Get(R"(/sessions/([^/]+)/model)", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.model(req.matches[1]));
  });
  server.Post(R"(/sessions/([^/]+)/labels)",
              [&service, reply, parse](const httplib::Request& req, httplib::Response& res) {
                json body;
                if (auto bad = parse(req, body)) return reply(res, *bad);
                reply(res, service.submit_labels(req.matches[1], body));
              });
}

}  // namespace emal
