// Command-line front end. Everything goes through the C interface.
#include <csignal>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "emal/emal.h"

namespace {

emal_service* g_service = nullptr;

void on_signal(int) {
  if (g_service) emal_service_stop(g_service);
}

// 0 ok, 1 validation, 2 runtime
int exit_code(emal_status s) {
  switch (s) {
    case EMAL_OK: return 0;
    case EMAL_ERR_RUNTIME: return 2;
    default: return 1;
  }
}

int report_error(emal_status s) {
  if (s != EMAL_OK) std::fprintf(stderr, "emal: %s\n", emal_last_error());
  return exit_code(s);
}

void print_progress(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning entity matching workbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", emal_version());

  std::string config, out_dir, run_dir;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run the sessions of an experiment file");
  run->add_option("config", config, "Experiment file (YAML)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Master seed for sessions without their own");
  run->add_option("--jobs", jobs, "Worker threads");
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_flag("-q,--quiet", quiet, "No per-run progress lines");

  auto* rep = app.add_subcommand("report", "Summarize a run directory into aligned series files");
  rep->add_option("dir", run_dir, "Directory written by 'run'")->required();

  std::string host = "127.0.0.1", checkpoints;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve human labeling sessions over HTTP");
  serve->add_option("config", config, "Experiment file whose dataset is served")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--checkpoints", checkpoints, "Checkpoint directory (sessions are recovered from it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*run) {
    emal_run_options o{};
    if (*seed_opt) {
      o.has_seed = 1;
      o.seed = seed;
    }
    o.jobs = jobs;
    o.out_dir = out_dir.empty() ? nullptr : out_dir.c_str();
    if (!quiet) o.progress = print_progress;
    char* summary = nullptr;
    const auto s = emal_experiment_run(config.c_str(), &o, &summary);
    if (summary) {
      std::fputs(summary, stdout);
      emal_string_free(summary);
    }
    return report_error(s);
  }
  if (*rep) {
    char* table = nullptr;
    const auto s = emal_report(run_dir.c_str(), &table);
    if (table) {
      std::fputs(table, stdout);
      emal_string_free(table);
    }
    return report_error(s);
  }
  if (*serve) {
    auto s = emal_service_create(config.c_str(), checkpoints.empty() ? nullptr : checkpoints.c_str(), &g_service);
    if (s != EMAL_OK) return report_error(s);
    std::size_t restored = 0;
    s = emal_service_recover(g_service, &restored);
    if (s != EMAL_OK) {
      emal_service_free(g_service);
      return report_error(s);
    }
    if (restored) std::fprintf(stderr, "restored %zu session(s)\n", restored);
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::fprintf(stderr, "listening on http://%s:%d\n", host.c_str(), port);
    s = emal_service_listen(g_service, host.c_str(), port);
    emal_service_free(g_service);
    g_service = nullptr;
    return report_error(s);
  }
  return 0;
}
