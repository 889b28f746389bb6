// Command-line front end; talks to the library only through cqn.h.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cqn/cqn.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  std::optional<unsigned> threads;
};

int exit_code(cqn_status s) {
  switch (s) {
    case CQN_OK:
      return 0;
    case CQN_PARSE_ERROR:
      return 2;
    case CQN_IO_ERROR:
      return 3;
    default:
      return 1;
  }
}

int report_failure(const char* what, cqn_status s) {
  std::cerr << "cqn " << what << ": " << cqn_last_error() << "\n";
  return exit_code(s);
}

void print_progress(const char* line, void*) { std::cerr << line << "\n"; }

void print_criterion(const cqn_criterion* c, void*) {
  std::printf("%s [%2d] %-40s value=%.6g threshold=%.6g margin=%.6g  %s\n", c->pass ? "PASS" : "FAIL", c->id,
              c->name, c->value, c->threshold, c->margin, c->detail);
  std::fflush(stdout);
}

// Loads --config and applies the flag overrides.
cqn_status load(const Options& o, cqn_config** config) {
  if (o.config.empty()) {
    std::cerr << "cqn: --config is required\n";
    return CQN_PARSE_ERROR;
  }
  cqn_status s = cqn_config_load(o.config.c_str(), config);
  if (s != CQN_OK) return s;
  if (o.seed) cqn_config_set_seed(*config, *o.seed);
  if (o.reps && (s = cqn_config_set_reps(*config, *o.reps)) != CQN_OK) return s;
  if (o.threads) cqn_config_set_threads(*config, *o.threads);
  if (!o.out.empty()) cqn_config_set_output_dir(*config, o.out.c_str());
  return CQN_OK;
}

std::string output_dir(cqn_config* config) {
  char* dir = nullptr;
  cqn_config_output_dir(config, &dir);
  std::string out = dir ? dir : "out";
  cqn_string_free(dir);
  return out;
}

int run_config_command(const std::string& name, const Options& o) {
  cqn_config* config = nullptr;
  cqn_status s = load(o, &config);
  if (s != CQN_OK) {
    cqn_config_free(config);
    return report_failure(name.c_str(), s);
  }
  const std::string dir = output_dir(config);
  if (name == "validate") {
    char* report = nullptr;
    s = cqn_validate(config, &report);
    if (report) std::cout << report;
    cqn_string_free(report);
  } else if (name == "fluid") {
    s = cqn_fluid(config, dir.c_str());
  } else if (name == "simulate") {
    s = cqn_simulate(config, dir.c_str(), print_progress, nullptr);
  } else {
    s = cqn_crossings(config, dir.c_str(), print_progress, nullptr);
  }
  cqn_config_free(config);
  if (s != CQN_OK) return report_failure(name.c_str(), s);
  if (name != "validate") std::cerr << "cqn " << name << ": wrote " << dir << "\n";
  return 0;
}

int run_verify(const Options& o) {
  cqn_verify_options opt{};
  std::string dir = o.out;
  if (!o.config.empty()) {
    cqn_config* config = nullptr;
    const cqn_status s = cqn_config_load(o.config.c_str(), &config);
    if (s != CQN_OK) {
      cqn_config_free(config);
      return report_failure("verify", s);
    }
    cqn_config_rho_scale(config, &opt.rho_scale);
    if (dir.empty()) dir = output_dir(config);
    cqn_config_free(config);
  }
  if (dir.empty()) dir = "out/verify";
  opt.reps = o.reps.value_or(0);
  opt.threads = o.threads.value_or(1);
  if (o.seed) {
    opt.has_seed = 1;
    opt.seed = *o.seed;
  }
  char* report = nullptr;
  const cqn_status s = cqn_verify(&opt, print_criterion, print_progress, nullptr, &report);
  const std::string error = s == CQN_OK ? "" : cqn_last_error();
  if (report) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    const auto path = std::filesystem::path(dir) / "report.json";
    std::FILE* f = std::fopen(path.c_str(), "wb");
    const std::size_t len = std::char_traits<char>::length(report);
    const bool ok = f && std::fwrite(report, 1, len, f) == len;
    const bool closed = f && std::fclose(f) == 0;
    cqn_string_free(report);
    if (!ok || !closed) {
      std::cerr << "cqn verify: cannot write " << path.string() << "\n";
      return 3;
    }
    std::cerr << "cqn verify: wrote " << path.string() << "\n";
  }
  if (s != CQN_OK) {
    std::cerr << "cqn verify: " << error << "\n";
    return exit_code(s);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed network toolkit: fluid limits, simulation and acceptance checks"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "experiment config (JSON)");
  app.add_option("--out", o.out, "output directory (overrides the config)");
  app.add_option("--seed", o.seed, "base seed (overrides the config)");
  app.add_option("--reps", o.reps, "replications (overrides the config)")->check(CLI::PositiveNumber);
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);

  std::string chosen;
  for (const char* name : {"validate", "fluid", "simulate", "crossings"}) {
    const std::string help = std::string(name) == "validate"   ? "check a config and print its topology report"
                             : std::string(name) == "fluid"    ? "write fluid limit curves"
                             : std::string(name) == "simulate" ? "run replications and write trajectories and estimates"
                                                               : "run replications and check the crossing identity";
    app.add_subcommand(name, help)->callback([&chosen, name] { chosen = name; });
  }
  app.add_subcommand("verify", "run the acceptance suite over the bundled scenarios")->callback([&chosen] {
    chosen = "verify";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (chosen == "verify") return run_verify(o);
  return run_config_command(chosen, o);
}
