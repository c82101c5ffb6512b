#include "emal/emal.h"

#include <cstring>
#include <sstream>

#include <httplib.h>

#include "emal/config.hpp"
#include "emal/experiment.hpp"
#include "emal/label_service.hpp"

using nlohmann::json;

struct emal_dataset {
  std::shared_ptr<const emal::Dataset> data;
};

struct emal_session {
  std::unique_ptr<emal::Session> session;
};

struct emal_service {
  std::unique_ptr<emal::LabelService> service;
  httplib::Server server;
};

namespace {

thread_local std::string last_error;

emal_status fail(emal_status code, const std::string& message) {
  last_error = message;
  return code;
}

template <class F>
emal_status call(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const emal::NotFoundError& e) {
    return fail(EMAL_ERR_NOT_FOUND, e.what());
  } catch (const emal::ConflictError& e) {
    return fail(EMAL_ERR_CONFLICT, e.what());
  } catch (const emal::ValidationError& e) {
    return fail(EMAL_ERR_VALIDATION, e.what());
  } catch (const json::exception& e) {
    return fail(EMAL_ERR_VALIDATION, e.what());
  } catch (const std::exception& e) {
    return fail(EMAL_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(EMAL_ERR_RUNTIME, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

#define EMAL_REQUIRE(cond, what) \
  if (!(cond)) return fail(EMAL_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

const char* emal_version(void) { return "0.1.0"; }
const char* emal_last_error(void) { return last_error.c_str(); }
void emal_string_free(char* s) { std::free(s); }

emal_status emal_dataset_load(const char* experiment_path, emal_dataset** out) {
  EMAL_REQUIRE(experiment_path && out, "null argument");
  return call([&] {
    const auto cfg = emal::load_experiment(experiment_path);
    *out = new emal_dataset{emal::build_dataset(cfg.dataset, cfg.jobs)};
    return EMAL_OK;
  });
}

emal_status emal_dataset_synthetic(const char* spec_json, emal_dataset** out) {
  EMAL_REQUIRE(out, "null argument");
  return call([&] {
    emal::SyntheticSpec s;
    if (spec_json && *spec_json) {
      const json j = json::parse(spec_json);
      if (!j.is_object()) throw emal::ValidationError("synthetic spec must be an object");
      for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        if (k == "pairs") s.pairs = it->get<std::size_t>();
        else if (k == "skew") s.skew = it->get<double>();
        else if (k == "attributes") s.attributes = it->get<std::size_t>();
        else if (k == "feature_noise") s.feature_noise = it->get<double>();
        else if (k == "hard_match_fraction") s.hard_match_fraction = it->get<double>();
        else if (k == "hard_nonmatch_fraction") s.hard_nonmatch_fraction = it->get<double>();
        else if (k == "attribute_spread") s.attribute_spread = it->get<double>();
        else if (k == "null_fraction") s.null_fraction = it->get<double>();
        else if (k == "seed") s.seed = it->get<std::uint64_t>();
        else throw emal::ConfigError(k, "unknown key");
      }
    }
    *out = new emal_dataset{std::make_shared<const emal::Dataset>(emal::make_synthetic(s))};
    return EMAL_OK;
  });
}

emal_status emal_dataset_size(const emal_dataset* d, size_t* pairs, size_t* dim) {
  EMAL_REQUIRE(d, "null dataset");
  if (pairs) *pairs = d->data->size();
  if (dim) *dim = d->data->features.dim();
  return EMAL_OK;
}

emal_status emal_dataset_gold(const emal_dataset* d, int64_t pair_id, int* label) {
  EMAL_REQUIRE(d && label, "null argument");
  return call([&] {
    *label = d->data->gold_label(pair_id);
    return EMAL_OK;
  });
}

void emal_dataset_free(emal_dataset* d) { delete d; }

emal_status emal_session_create(const emal_dataset* d, const char* config_json, emal_session** out) {
  EMAL_REQUIRE(d && out, "null argument");
  return call([&] {
    const json j = config_json && *config_json ? json::parse(config_json) : json::object();
    auto s = std::make_unique<emal::Session>(d->data, emal::session_from_json(j));
    *out = new emal_session{std::move(s)};
    return EMAL_OK;
  });
}

emal_status emal_session_pending(const emal_session* s, int64_t* ids, size_t capacity, size_t* count) {
  EMAL_REQUIRE(s && count, "null argument");
  EMAL_REQUIRE(ids || capacity == 0, "null id buffer");
  const auto& p = s->session->pending();
  *count = p.size();
  for (std::size_t i = 0; i < std::min(capacity, p.size()); ++i) ids[i] = p[i];
  return EMAL_OK;
}

emal_status emal_session_submit(emal_session* s, int64_t pair_id, int label) {
  EMAL_REQUIRE(s, "null session");
  EMAL_REQUIRE(label == 0 || label == 1, "label must be 0 or 1");
  return call([&] {
    s->session->submit(pair_id, label);
    return EMAL_OK;
  });
}

emal_status emal_session_answer_from_oracle(emal_session* s) {
  EMAL_REQUIRE(s, "null session");
  return call([&] {
    s->session->answer_from_oracle();
    return EMAL_OK;
  });
}

emal_status emal_session_advance(emal_session* s, int* terminated) {
  EMAL_REQUIRE(s, "null session");
  return call([&] {
    s->session->advance();
    if (terminated) *terminated = s->session->phase() == emal::Phase::terminated;
    return EMAL_OK;
  });
}

emal_status emal_session_run(emal_session* s) {
  EMAL_REQUIRE(s, "null session");
  return call([&] {
    s->session->run();
    return EMAL_OK;
  });
}

emal_status emal_session_log_csv(const emal_session* s, int include_timing, char** out) {
  EMAL_REQUIRE(s && out, "null argument");
  return call([&] {
    std::ostringstream csv;
    const auto header = emal::iteration_log_header();
    for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
    csv << '\n';
    for (const auto& row : s->session->logs()) {
      if (include_timing) {
        emal::write_log_row(csv, row);
        continue;
      }
      std::ostringstream line;
      emal::write_log_row(line, row);
      // blank every *_ms column
      std::string text = line.str(), field;
      std::istringstream fields(text.substr(0, text.size() - 1));
      std::size_t c = 0;
      while (std::getline(fields, field, ',')) {
        const auto& name = header[c];
        const bool timing = name.size() > 3 && name.compare(name.size() - 3, 3, "_ms") == 0;
        csv << (c ? "," : "") << (timing ? "" : field);
        ++c;
      }
      for (; c < header.size(); ++c) csv << ',';
      csv << '\n';
    }
    *out = dup(csv.str());
    return EMAL_OK;
  });
}

emal_status emal_session_summary_json(const emal_session* s, char** out) {
  EMAL_REQUIRE(s && out, "null argument");
  return call([&] {
    const auto r = emal::summarize(*s->session, 0);
    json j = {{"session", r.session},
              {"iterations", r.iterations},
              {"labels_used", r.labels_used},
              {"best_f1", r.best_f1},
              {"labels_at_best", r.labels_at_best},
              {"labels_to_convergence", r.labels_to_convergence},
              {"final_f1", r.final_f1},
              {"termination", r.termination},
              {"state", s->session->phase() == emal::Phase::terminated ? "terminated" : "awaiting_labels"}};
    *out = dup(j.dump());
    return EMAL_OK;
  });
}

emal_status emal_session_model_json(const emal_session* s, char** out) {
  EMAL_REQUIRE(s && out, "null argument");
  return call([&] {
    const auto m = s->session->model_summary();
    json j = {{"kind", m.kind},
              {"text", m.text},
              {"n_atoms", m.n_atoms ? json(*m.n_atoms) : json(nullptr)},
              {"depth", m.depth ? json(*m.depth) : json(nullptr)},
              {"ensemble_members", m.ensemble_members},
              {"ensemble_precisions", m.ensemble_precisions}};
    *out = dup(j.dump());
    return EMAL_OK;
  });
}

void emal_session_free(emal_session* s) { delete s; }

emal_status emal_experiment_run(const char* config_path, const emal_run_options* options, char** summary_csv) {
  EMAL_REQUIRE(config_path, "null config path");
  return call([&] {
    emal::RunOverrides o;
    if (options) {
      if (options->has_seed) o.seed = options->seed;
      if (options->jobs) o.jobs = options->jobs;
      if (options->out_dir) o.out = options->out_dir;
    }
    const auto cfg = emal::load_experiment(config_path, o);
    auto data = emal::build_dataset(cfg.dataset, cfg.jobs);

    std::function<void(const std::string&)> progress;
    if (options && options->progress) {
      progress = [options](const std::string& line) { options->progress(line.c_str(), options->progress_user); };
    }
    const auto rows = emal::run_experiment(cfg, data, progress);
    if (summary_csv) {
      std::ostringstream csv;
      emal::write_summary(csv, rows);
      *summary_csv = dup(csv.str());
    }
    for (const auto& r : rows) {
      if (!r.error.empty()) return fail(EMAL_ERR_RUNTIME, r.session + " run " + std::to_string(r.run) + ": " + r.error);
    }
    return EMAL_OK;
  });
}

emal_status emal_report(const char* run_dir, char** table) {
  EMAL_REQUIRE(run_dir, "null run directory");
  return call([&] {
    const auto rep = emal::report(run_dir);
    if (table) *table = dup(rep.table);
    return EMAL_OK;
  });
}

emal_status emal_service_create(const char* experiment_path, const char* checkpoint_dir, emal_service** out) {
  EMAL_REQUIRE(experiment_path && out, "null argument");
  return call([&] {
    const auto cfg = emal::load_experiment(experiment_path);
    auto data = emal::build_dataset(cfg.dataset, cfg.jobs);
    const std::string name = data->name;
    emal::ServiceOptions opts;
    if (checkpoint_dir) opts.checkpoint_dir = checkpoint_dir;
    auto svc = std::make_unique<emal_service>();
    svc->service = std::make_unique<emal::LabelService>(
        std::map<std::string, std::shared_ptr<const emal::Dataset>>{{name, data}}, opts);
    emal::mount(svc->server, *svc->service);
    *out = svc.release();
    return EMAL_OK;
  });
}

emal_status emal_service_recover(emal_service* svc, size_t* restored) {
  EMAL_REQUIRE(svc, "null service");
  return call([&] {
    const auto n = svc->service->recover();
    if (restored) *restored = n;
    return EMAL_OK;
  });
}

emal_status emal_service_listen(emal_service* svc, const char* host, int port) {
  EMAL_REQUIRE(svc && host, "null argument");
  EMAL_REQUIRE(port > 0 && port < 65536, "port out of range");
  return call([&] {
    if (!svc->server.listen(host, port)) {
      return fail(EMAL_ERR_RUNTIME, std::string("cannot listen on ") + host + ":" + std::to_string(port));
    }
    return EMAL_OK;
  });
}

emal_status emal_service_stop(emal_service* svc) {
  EMAL_REQUIRE(svc, "null service");
  svc->server.stop();
  return EMAL_OK;
}

void emal_service_free(emal_service* svc) { delete svc; }

}  // extern "C"
