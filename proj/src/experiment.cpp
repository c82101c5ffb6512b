#include "emal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "emal/config.hpp"
#include "emal/csv.hpp"
#include "emal/evaluator.hpp"

namespace emal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// YAML -> JSON, remembering the line of every key path for error messages.
struct Converted {
  json value;
  std::map<std::string, int> lines;
};

json scalar(const YAML::Node& n) {
  const std::string& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted: always a string
  if (s.empty() || s == "~" || s == "null") return nullptr;
  if (s == "true") return true;
  if (s == "false") return false;
  {
    std::int64_t v;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size()) return v;
  }
  {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() + s.size() && s.find_first_of("0123456789") != std::string::npos) return v;
  }
  return s;
}

json convert(const YAML::Node& n, const std::string& path, std::map<std::string, int>& lines) {
  lines[path] = n.Mark().line + 1;
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Scalar: return scalar(n);
    case YAML::NodeType::Sequence: {
      json a = json::array();
      std::size_t i = 0;
      for (const auto& item : n) a.push_back(convert(item, path + "[" + std::to_string(i++) + "]", lines));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        const auto child = path.empty() ? key : path + "." + key;
        if (o.contains(key)) {
          throw ValidationError(std::to_string(kv.first.Mark().line + 1) + ": duplicate key '" + key + "'");
        }
        o[key] = convert(kv.second, child, lines);
        lines[child] = kv.first.Mark().line + 1;
      }
      return o;
    }
  }
  return nullptr;
}

class ConfigReader {
 public:
  ConfigReader(fs::path source, std::map<std::string, int> lines)
      : source_(std::move(source)), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    // walk up the key path until a line is known
    std::string p = path;
    int line = 0;
    while (true) {
      if (auto it = lines_.find(p); it != lines_.end()) {
        line = it->second;
        break;
      }
      const auto cut = p.find_last_of(".[");
      if (cut == std::string::npos) break;
      p = p.substr(0, cut);
    }
    throw ValidationError(source_.string() + ":" + std::to_string(line) + ": " + path + ": " + message);
  }

  void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(path, "expected a mapping");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!allowed.count(it.key())) fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
    }
  }

  template <class T>
  T get(const json& obj, const std::string& path, const std::string& key, T fallback) const {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    const auto full = path.empty() ? key : path + "." + key;
    try {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) fail(full, "expected a string");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) fail(full, "expected a number");
      } else {
        if (!it->is_number_integer()) fail(full, "expected an integer");
        if (std::is_unsigned_v<T> && it->template get<std::int64_t>() < 0) fail(full, "must not be negative");
      }
      return it->template get<T>();
    } catch (const json::exception& e) {
      fail(full, e.what());
    }
  }

  fs::path resolve_input(const std::string& path, const std::string& raw) const {
    fs::path p(raw);
    if (p.is_absolute()) {
      if (!fs::exists(p)) fail(path, "file not found: " + raw);
      return p;
    }
    const fs::path local = source_.parent_path() / p;
    if (fs::exists(local)) return local;
    if (const char* env = std::getenv(kDataDirEnv); env && *env) {
      const fs::path alt = fs::path(env) / p;
      if (fs::exists(alt)) return alt;
    }
    fail(path, "file not found: " + raw + " (looked next to the config and in $" + kDataDirEnv + ")");
  }

  const fs::path& source() const { return source_; }

 private:
  fs::path source_;
  std::map<std::string, int> lines_;
};

TableSource table_source(const ConfigReader& r, const json& j, const std::string& path) {
  TableSource t;
  if (j.is_string()) {
    t.path = r.resolve_input(path, j.get<std::string>());
    return t;
  }
  r.check_keys(j, path, {"path", "id"});
  const auto raw = r.get<std::string>(j, path, "path", "");
  if (raw.empty()) r.fail(path, "missing 'path'");
  t.path = r.resolve_input(path + ".path", raw);
  t.id_column = r.get<std::string>(j, path, "id", t.id_column);
  return t;
}

DatasetConfig parse_dataset(const ConfigReader& r, const json& j) {
  DatasetConfig d;
  const std::string kind = r.get<std::string>(j, "dataset", "kind", "tables");
  if (kind == "synthetic") {
    d.kind = DatasetConfig::Kind::synthetic;
    r.check_keys(j, "dataset",
                 {"kind", "name", "pairs", "skew", "attributes", "feature_noise", "hard_match_fraction",
                  "hard_nonmatch_fraction", "attribute_spread", "null_fraction", "seed"});
    auto& s = d.synthetic;
    s.pairs = r.get(j, "dataset", "pairs", s.pairs);
    s.skew = r.get(j, "dataset", "skew", s.skew);
    s.attributes = r.get(j, "dataset", "attributes", s.attributes);
    s.feature_noise = r.get(j, "dataset", "feature_noise", s.feature_noise);
    s.hard_match_fraction = r.get(j, "dataset", "hard_match_fraction", s.hard_match_fraction);
    s.hard_nonmatch_fraction = r.get(j, "dataset", "hard_nonmatch_fraction", s.hard_nonmatch_fraction);
    s.attribute_spread = r.get(j, "dataset", "attribute_spread", s.attribute_spread);
    s.null_fraction = r.get(j, "dataset", "null_fraction", s.null_fraction);
    s.seed = r.get(j, "dataset", "seed", s.seed);
    d.tables.name = r.get<std::string>(j, "dataset", "name", "synthetic");
    return d;
  }
  if (kind != "tables") r.fail("dataset.kind", "expected tables or synthetic");
  d.kind = DatasetConfig::Kind::tables;
  r.check_keys(j, "dataset", {"kind", "name", "left", "right", "gold", "align", "blocking_threshold"});
  auto& t = d.tables;
  t.name = r.get<std::string>(j, "dataset", "name", "tables");
  if (!j.contains("left") || !j.contains("right")) r.fail("dataset", "needs both 'left' and 'right' tables");
  t.left = table_source(r, j["left"], "dataset.left");
  t.right = table_source(r, j["right"], "dataset.right");
  if (auto g = r.get<std::string>(j, "dataset", "gold", ""); !g.empty()) t.gold = r.resolve_input("dataset.gold", g);
  t.blocking.threshold = r.get(j, "dataset", "blocking_threshold", t.blocking.threshold);
  if (!(t.blocking.threshold >= 0.0 && t.blocking.threshold <= 1.0)) {
    r.fail("dataset.blocking_threshold", "must be in [0, 1]");
  }
  if (!j.contains("align") || !j["align"].is_array() || j["align"].empty()) {
    r.fail("dataset.align", "expected a non-empty list of 'left:right' attribute pairs");
  }
  for (std::size_t i = 0; i < j["align"].size(); ++i) {
    const auto& a = j["align"][i];
    const auto path = "dataset.align[" + std::to_string(i) + "]";
    if (!a.is_string()) r.fail(path, "expected 'left:right' or a shared attribute name");
    const auto s = a.get<std::string>();
    const auto colon = s.find(':');
    if (colon == std::string::npos) {
      t.alignment.pairs.emplace_back(s, s);
    } else {
      t.alignment.pairs.emplace_back(s.substr(0, colon), s.substr(colon + 1));
    }
  }
  return d;
}

}  // namespace

ExperimentConfig parse_experiment(const std::string& yaml, const fs::path& source, const RunOverrides& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ValidationError(source.string() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  std::map<std::string, int> lines;
  json j;
  try {
    j = convert(root, "", lines);
  } catch (const ValidationError& e) {
    throw ValidationError(source.string() + ":" + e.what());
  }
  ConfigReader r(source, lines);
  if (!j.is_object()) r.fail("(root)", "expected a mapping");
  r.check_keys(j, "", {"dataset", "output", "repeats", "seed", "jobs", "sessions"});

  ExperimentConfig cfg;
  cfg.source = source;
  if (!j.contains("dataset")) r.fail("dataset", "missing 'dataset' section");
  cfg.dataset = parse_dataset(r, j["dataset"]);
  if (j.contains("output") && !j["output"].is_null()) {
    r.check_keys(j["output"], "output", {"dir"});
    fs::path dir = r.get<std::string>(j["output"], "output", "dir", "runs");
    cfg.output_dir = dir.is_absolute() ? dir : source.parent_path() / dir;
  } else {
    cfg.output_dir = source.parent_path() / "runs";
  }
  cfg.repeats = r.get(j, "", "repeats", cfg.repeats);
  if (cfg.repeats < 1) r.fail("repeats", "must be >= 1");
  cfg.seed = r.get(j, "", "seed", cfg.seed);
  cfg.jobs = r.get(j, "", "jobs", cfg.jobs);
  if (cfg.jobs < 1) r.fail("jobs", "must be >= 1");
  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.jobs) cfg.jobs = *overrides.jobs;
  if (overrides.out) cfg.output_dir = *overrides.out;

  if (!j.contains("sessions") || !j["sessions"].is_array() || j["sessions"].empty()) {
    r.fail("sessions", "expected a non-empty list of sessions");
  }
  static const std::regex safe_name("[A-Za-z0-9_.-]+");
  std::set<std::string> names;
  for (std::size_t i = 0; i < j["sessions"].size(); ++i) {
    const auto path = "sessions[" + std::to_string(i) + "]";
    json sj = j["sessions"][i];
    if (!sj.is_object()) r.fail(path, "expected a mapping");
    const bool explicit_seed = sj.contains("master_seed") && !sj["master_seed"].is_null();
    SessionConfig s;
    try {
      s = session_from_json(sj);
    } catch (const ConfigError& e) {
      r.fail(path + "." + e.path(), std::string(e.what()).substr(e.path().size() + 2));
    } catch (const ValidationError& e) {
      r.fail(path, e.what());
    }
    if (!std::regex_match(s.name, safe_name)) r.fail(path + ".name", "use letters, digits, '_', '-' or '.'");
    if (s.name == "report") r.fail(path + ".name", "'report' is reserved");
    if (!names.insert(s.name).second) r.fail(path + ".name", "duplicate session name '" + s.name + "'");
    if (!explicit_seed || overrides.seed) s.master_seed = cfg.seed;
    if (s.oracle.mode == OracleMode::human) r.fail(path + ".oracle.mode", "batch runs need a simulated oracle");
    if (cfg.dataset.kind == DatasetConfig::Kind::tables && !cfg.dataset.tables.gold) {
      r.fail(path, "simulated oracles need a gold file in the dataset section");
    }
    cfg.sessions.push_back(std::move(s));
  }
  return cfg;
}

ExperimentConfig load_experiment(const fs::path& path, const RunOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot read config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), path, overrides);
}

std::shared_ptr<const Dataset> build_dataset(const DatasetConfig& cfg, std::size_t jobs) {
  if (cfg.kind == DatasetConfig::Kind::synthetic) {
    auto d = make_synthetic(cfg.synthetic);
    d.name = cfg.tables.name;
    return std::make_shared<const Dataset>(std::move(d));
  }
  auto spec = cfg.tables;
  spec.blocking.jobs = jobs;
  return std::make_shared<const Dataset>(load_dataset(spec));
}

std::string best_with_labels(double f1, std::size_t labels) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f (%zu labels)", f1, labels);
  return buf;
}

RunSummary summarize(const Session& s, std::size_t run) {
  const auto& c = s.config();
  RunSummary r;
  r.session = c.name;
  r.run = run;
  r.master_seed = c.master_seed;
  r.learner = to_string(c.learner);
  r.selector = to_string(c.selector);
  r.oracle = to_string(c.oracle.mode);
  r.noise = c.oracle.noise;
  r.termination = to_string(s.termination());
  const auto& logs = s.logs();
  r.iterations = logs.size();
  if (logs.empty()) return r;
  std::vector<LabelPoint> series;
  for (const auto& row : logs) {
    series.push_back({row.labels_used, row.f1});
    if (row.f1 > r.best_f1 || series.size() == 1) {
      r.best_f1 = row.f1;
      r.labels_at_best = row.labels_used;
    }
  }
  r.labels_to_convergence = labels_to_convergence(series);
  const auto& last = logs.back();
  r.labels_used = last.labels_used;
  r.final_f1 = last.f1;
  r.n_atoms = last.n_atoms;
  r.depth = last.depth;
  r.ensemble_size = last.ensemble_size;
  return r;
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

namespace {

void write_trace_row(std::ostream& out, const Dataset& d, const SelectionTraceRow& t) {
  for (std::size_t k = 0; k < t.chosen.size(); ++k) {
    const auto& p = d.pair(t.chosen[k]);
    out << t.iteration << ',' << csv::escape(t.strategy) << ',' << k << ',' << t.chosen[k] << ','
        << csv::escape(p.left_id) << ',' << csv::escape(p.right_id) << ',' << (k < t.tags.size() ? t.tags[k] : "")
        << '\n';
  }
}

json manifest(const ExperimentConfig& cfg, const Dataset& d, const SessionConfig& s, std::size_t run) {
  json m;
  m["session"] = s.name;
  m["run"] = run;
  m["config"] = to_json(s);
  m["experiment"] = cfg.source.string();
  m["dataset"] = {{"name", d.name}, {"checksum", d.checksum}, {"pairs", d.size()}, {"dim", d.features.dim()}};
  if (d.gold) {
    m["dataset"]["gold"] = {{"gold_total", d.gold->gold_total},
                            {"retained_matches", d.gold->retained_matches},
                            {"pruned_matches", d.gold->pruned_matches},
                            {"skew", d.gold->skew}};
  }
  return m;
}

void run_one(const ExperimentConfig& cfg, const std::shared_ptr<const Dataset>& data, SessionConfig sc,
             std::size_t run, RunSummary& out) {
  sc.master_seed += run;
  const fs::path dir = cfg.output_dir / sc.name / ("run-" + std::to_string(run));
  fs::create_directories(dir);
  json man = manifest(cfg, *data, sc, run);
  man["started_at"] = iso8601_now();
  auto write_manifest = [&] {
    std::ofstream m(dir / "manifest.json");
    m << man.dump(2) << '\n';
  };
  write_manifest();

  std::ofstream log(dir / "log.csv");
  std::ofstream trace(dir / "selection_trace.csv");
  log << csv::join(iteration_log_header()) << '\n';
  trace << "iteration,strategy,rank,pair_id,left_id,right_id,tag\n";
  out.session = sc.name;
  out.run = run;
  out.master_seed = sc.master_seed;
  out.learner = to_string(sc.learner);
  out.selector = to_string(sc.selector);
  out.oracle = to_string(sc.oracle.mode);
  out.noise = sc.oracle.noise;
  try {
    Session s(data, sc);
    std::size_t traced = 0;
    s.run([&](const IterationLog& row) {
      write_log_row(log, row);
      log.flush();
      for (; traced < s.trace().size(); ++traced) write_trace_row(trace, *data, s.trace()[traced]);
      trace.flush();
    });
    out = summarize(s, run);
    man["termination"] = out.termination;
  } catch (const std::exception& e) {
    out.error = e.what();
    out.termination = "error";
    man["error"] = out.error;
  }
  man["finished_at"] = iso8601_now();
  write_manifest();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

template <class T>
std::string fmt_opt(const std::optional<T>& v) {
  return v ? std::to_string(*v) : std::string();
}

}  // namespace

std::vector<RunSummary> run_experiment(const ExperimentConfig& cfg, std::shared_ptr<const Dataset> data,
                                       const std::function<void(const std::string&)>& progress) {
  struct Task {
    std::size_t session, run;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < cfg.sessions.size(); ++s) {
    for (std::size_t r = 0; r < cfg.repeats; ++r) tasks.push_back({s, r});
  }
  std::vector<RunSummary> results(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex progress_mutex;
  fs::create_directories(cfg.output_dir);
  auto worker = [&] {
    for (std::size_t t; (t = next++) < tasks.size();) {
      run_one(cfg, data, cfg.sessions[tasks[t].session], tasks[t].run, results[t]);
      if (progress) {
        std::lock_guard lock(progress_mutex);
        const auto& r = results[t];
        progress(r.session + " run " + std::to_string(r.run) + ": " +
                 (r.error.empty() ? best_with_labels(r.best_f1, r.labels_at_best) + ", " + r.termination
                                  : "error: " + r.error));
      }
    }
  };
  const std::size_t n = std::clamp<std::size_t>(cfg.jobs, 1, tasks.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
  }
  std::ofstream summary(cfg.output_dir / "summary.csv");
  write_summary(summary, results);
  return results;
}

void write_summary(std::ostream& out, const std::vector<RunSummary>& rows) {
  out << "session,run,master_seed,learner,selector,oracle,noise,iterations,labels_used,best_f1,labels_at_best,"
         "best_f1_labels,labels_to_convergence,final_f1,n_atoms,depth,ensemble_size,termination,error\n";
  auto emit = [&](const RunSummary& r, const std::string& run) {
    out << csv::escape(r.session) << ',' << run << ',' << r.master_seed << ',' << r.learner << ',' << r.selector << ','
        << r.oracle << ',' << fmt(r.noise) << ',' << r.iterations << ',' << r.labels_used << ',' << fmt(r.best_f1)
        << ',' << r.labels_at_best << ',' << csv::escape(best_with_labels(r.best_f1, r.labels_at_best)) << ','
        << r.labels_to_convergence << ',' << fmt(r.final_f1) << ',' << fmt_opt(r.n_atoms) << ','
        << fmt_opt(r.depth) << ',' << fmt_opt(r.ensemble_size) << ',' << r.termination << ','
        << csv::escape(r.error) << '\n';
  };
  std::map<std::string, std::vector<const RunSummary*>> by_session;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    emit(r, std::to_string(r.run));
    if (!by_session.count(r.session)) order.push_back(r.session);
    if (r.error.empty()) by_session[r.session].push_back(&r);
  }
  for (const auto& name : order) {
    const auto& runs = by_session[name];
    if (runs.size() < 2) continue;
    RunSummary m = *runs.front();
    double best = 0, final_f1 = 0, labels = 0, at_best = 0, conv = 0, iters = 0;
    for (const auto* r : runs) {
      best += r->best_f1;
      final_f1 += r->final_f1;
      labels += static_cast<double>(r->labels_used);
      at_best += static_cast<double>(r->labels_at_best);
      conv += static_cast<double>(r->labels_to_convergence);
      iters += static_cast<double>(r->iterations);
    }
    const double k = static_cast<double>(runs.size());
    m.best_f1 = best / k;
    m.final_f1 = final_f1 / k;
    m.labels_used = static_cast<std::size_t>(std::llround(labels / k));
    m.labels_at_best = static_cast<std::size_t>(std::llround(at_best / k));
    m.labels_to_convergence = static_cast<std::size_t>(std::llround(conv / k));
    m.iterations = static_cast<std::size_t>(std::llround(iters / k));
    m.master_seed = 0;
    m.n_atoms.reset();
    m.depth.reset();
    m.ensemble_size.reset();
    m.termination.clear();
    emit(m, "mean");
  }
}

LogSeries read_log(const fs::path& path, const std::string& session, std::size_t run) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string() + ": cannot read log");
  csv::Reader reader(in);
  csv::Row row;
  const auto header = iteration_log_header();
  if (!reader.next(row)) throw ValidationError(path.string() + ":1: empty log");
  std::vector<std::string> got;
  for (const auto& f : row) got.push_back(f.value_or(""));
  if (got != header) throw ValidationError(path.string() + ":1: not an iteration log header");
  auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
  };
  const std::size_t c_labels = col("labels_used"), c_f1 = col("f1"), c_wait = col("user_wait_ms"),
                    c_train = col("train_time_ms");
  LogSeries s;
  s.session = session;
  s.run = run;
  while (reader.next(row)) {
    const auto where = path.string() + ":" + std::to_string(reader.line()) + ": ";
    if (row.size() != header.size()) {
      throw ValidationError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(row.size()));
    }
    auto number = [&](std::size_t c) {
      const auto& f = row[c];
      if (!f) throw ValidationError(where + "missing " + header[c]);
      char* end = nullptr;
      const double v = std::strtod(f->c_str(), &end);
      if (f->empty() || end != f->c_str() + f->size()) throw ValidationError(where + "bad " + header[c] + " '" + *f + "'");
      return v;
    };
    const double labels = number(c_labels);
    if (labels < 0 || labels != std::floor(labels)) throw ValidationError(where + "bad labels_used");
    if (!s.labels.empty() && static_cast<std::size_t>(labels) < s.labels.back()) {
      throw ValidationError(where + "labels_used decreases");
    }
    s.labels.push_back(static_cast<std::size_t>(labels));
    s.f1.push_back(number(c_f1));
    s.user_wait_ms.push_back(number(c_wait));
    s.train_time_ms.push_back(number(c_train));
  }
  return s;
}

Report report(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw ValidationError(run_dir.string() + ": not a directory");
  std::map<std::string, std::vector<LogSeries>> sessions;
  for (const auto& sdir : fs::directory_iterator(run_dir)) {
    if (!sdir.is_directory() || sdir.path().filename() == "report") continue;
    const auto name = sdir.path().filename().string();
    for (const auto& rdir : fs::directory_iterator(sdir.path())) {
      const auto rname = rdir.path().filename().string();
      if (!rdir.is_directory() || rname.rfind("run-", 0) != 0) continue;
      const auto log = rdir.path() / "log.csv";
      if (!fs::exists(log)) throw ValidationError(rdir.path().string() + ": missing log.csv");
      std::size_t run = 0;
      const auto digits = rname.substr(4);
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), run);
      if (ec != std::errc() || p != digits.data() + digits.size()) {
        throw ValidationError(rdir.path().string() + ": run directory is not run-<n>");
      }
      sessions[name].push_back(read_log(log, name, run));
    }
  }
  if (sessions.empty()) throw ValidationError(run_dir.string() + ": no run logs found");

  std::set<std::size_t> grid_set;
  for (auto& [name, runs] : sessions) {
    std::sort(runs.begin(), runs.end(), [](const LogSeries& a, const LogSeries& b) { return a.run < b.run; });
    for (const auto& r : runs) grid_set.insert(r.labels.begin(), r.labels.end());
  }
  const std::vector<std::size_t> grid(grid_set.begin(), grid_set.end());

  // value of a run at `labels`: its latest row at or below it, while the run lasts
  auto at = [](const LogSeries& r, const std::vector<double>& v, std::size_t labels) -> std::optional<double> {
    if (r.labels.empty() || labels < r.labels.front() || labels > r.labels.back()) return std::nullopt;
    const auto it = std::upper_bound(r.labels.begin(), r.labels.end(), labels);
    return v[static_cast<std::size_t>(it - r.labels.begin()) - 1];
  };
  auto cell = [](std::optional<double> v) { return v ? fmt(*v) : std::string(); };

  Report rep;
  const fs::path out_dir = run_dir / "report";
  fs::create_directories(out_dir);
  std::ostringstream table;
  table << "session                         runs  best F1 (labels)        mean labels to convergence\n";
  for (const auto& [name, runs] : sessions) {
    const fs::path file = out_dir / (name + ".series.csv");
    std::ofstream out(file);
    out << "labels,f1_mean,user_wait_ms_mean";
    for (const auto& r : runs) out << ",f1_run" << r.run;
    for (const auto& r : runs) out << ",user_wait_ms_run" << r.run;
    out << '\n';
    for (std::size_t labels : grid) {
      std::vector<std::optional<double>> f1s, waits;
      double f1_sum = 0, wait_sum = 0;
      std::size_t n = 0;
      for (const auto& r : runs) {
        f1s.push_back(at(r, r.f1, labels));
        waits.push_back(at(r, r.user_wait_ms, labels));
        if (f1s.back()) {
          f1_sum += *f1s.back();
          wait_sum += *waits.back();
          ++n;
        }
      }
      out << labels << ',' << (n ? fmt(f1_sum / static_cast<double>(n)) : "") << ','
          << (n ? fmt(wait_sum / static_cast<double>(n)) : "");
      for (const auto& v : f1s) out << ',' << cell(v);
      for (const auto& v : waits) out << ',' << cell(v);
      out << '\n';
    }
    rep.files.push_back(file);

    double best = 0, at_best = 0, conv = 0;
    for (const auto& r : runs) {
      std::vector<LabelPoint> pts;
      double b = -1;
      std::size_t bl = 0;
      for (std::size_t i = 0; i < r.labels.size(); ++i) {
        pts.push_back({r.labels[i], r.f1[i]});
        if (r.f1[i] > b) b = r.f1[i], bl = r.labels[i];
      }
      if (pts.empty()) continue;
      best += b;
      at_best += static_cast<double>(bl);
      conv += static_cast<double>(labels_to_convergence(pts));
    }
    const double k = static_cast<double>(runs.size());
    char line[160];
    std::snprintf(line, sizeof line, "%-31s %4zu  %-22s  %.0f\n", name.c_str(), runs.size(),
                  best_with_labels(best / k, static_cast<std::size_t>(std::llround(at_best / k))).c_str(), conv / k);
    table << line;
  }
  rep.table = table.str();
  std::ofstream(out_dir / "summary.txt") << rep.table;
  rep.files.push_back(out_dir / "summary.txt");
  return rep;
}

}  // namespace emal
