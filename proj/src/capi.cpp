#include "cqn/cqn.h"

#include <cstdlib>
#include <cstring>
#include <ios>
#include <new>
#include <string>

#include "cqn/commands.hpp"
#include "cqn/config.hpp"
#include "cqn/scenarios.hpp"
#include "cqn/verify.hpp"

struct cqn_config {
  cqn::ExperimentConfig value;
};

namespace {

thread_local std::string last_error;

cqn_status fail(cqn_status code, const std::string& message) {
  last_error = message;
  return code;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

// Maps exceptions escaping the library onto status codes.
template <class F>
cqn_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const cqn::ConfigError& e) {
    return fail(CQN_PARSE_ERROR, e.what());
  } catch (const cqn::IoError& e) {
    return fail(CQN_IO_ERROR, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(CQN_IO_ERROR, e.what());
  } catch (const cqn::ValidationError& e) {
    return fail(CQN_CHECK_FAILED, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CQN_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(CQN_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(CQN_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(CQN_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(CQN_INTERNAL_ERROR, "unknown failure");
  }
}

cqn::ProgressFn progress_adapter(cqn_progress_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

cqn_status need(const void* p, const char* what) {
  return p ? CQN_OK : fail(CQN_INVALID_ARGUMENT, std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* cqn_version(void) { return "0.1.0"; }

const char* cqn_last_error(void) { return last_error.c_str(); }

void cqn_string_free(char* s) { std::free(s); }

cqn_status cqn_config_load(const char* path, cqn_config** out) {
  if (auto s = need(path, "path"); s != CQN_OK) return s;
  if (auto s = need(out, "out"); s != CQN_OK) return s;
  return guarded([&] {
    *out = new cqn_config{cqn::load_config(path)};
    return CQN_OK;
  });
}

cqn_status cqn_config_parse(const char* json_text, cqn_config** out) {
  if (auto s = need(json_text, "json_text"); s != CQN_OK) return s;
  if (auto s = need(out, "out"); s != CQN_OK) return s;
  return guarded([&] {
    *out = new cqn_config{cqn::parse_config(json_text)};
    return CQN_OK;
  });
}

cqn_status cqn_config_bundled(const char* name, cqn_config** out) {
  if (auto s = need(name, "name"); s != CQN_OK) return s;
  if (auto s = need(out, "out"); s != CQN_OK) return s;
  return guarded([&] {
    *out = new cqn_config{cqn::bundled_scenario(name)};
    return CQN_OK;
  });
}

void cqn_config_free(cqn_config* config) { delete config; }

cqn_status cqn_config_set_seed(cqn_config* config, uint64_t seed) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  config->value.sim.seed = seed;
  return CQN_OK;
}

cqn_status cqn_config_set_reps(cqn_config* config, uint64_t reps) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  if (reps == 0) return fail(CQN_INVALID_ARGUMENT, "reps must be at least 1");
  config->value.sim.reps = reps;
  return CQN_OK;
}

cqn_status cqn_config_set_threads(cqn_config* config, unsigned threads) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  config->value.sim.threads = threads == 0 ? 1 : threads;
  return CQN_OK;
}

cqn_status cqn_config_set_output_dir(cqn_config* config, const char* dir) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  if (auto s = need(dir, "dir"); s != CQN_OK) return s;
  config->value.output_dir = dir;
  return CQN_OK;
}

cqn_status cqn_config_output_dir(const cqn_config* config, char** out) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  if (auto s = need(out, "out"); s != CQN_OK) return s;
  return guarded([&] {
    *out = copy_string(config->value.output_dir);
    return CQN_OK;
  });
}

cqn_status cqn_config_rho_scale(const cqn_config* config, double* out) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  if (auto s = need(out, "out"); s != CQN_OK) return s;
  *out = config->value.rho_scale;
  return CQN_OK;
}

cqn_status cqn_config_dump(const cqn_config* config, char** out) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  if (auto s = need(out, "out"); s != CQN_OK) return s;
  return guarded([&] {
    *out = copy_string(cqn::dump_config(config->value));
    return CQN_OK;
  });
}

cqn_status cqn_bundled_names(char** out) {
  if (auto s = need(out, "out"); s != CQN_OK) return s;
  return guarded([&] {
    std::string names;
    for (const auto& n : cqn::bundled_scenario_names()) names += n + "\n";
    *out = copy_string(names);
    return CQN_OK;
  });
}

cqn_status cqn_validate(const cqn_config* config, char** report) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  return guarded([&] {
    const auto outcome = cqn::validate_experiment(config->value);
    if (report) *report = copy_string(outcome.report);
    return outcome.valid ? CQN_OK : fail(CQN_CHECK_FAILED, "network violates model invariants");
  });
}

cqn_status cqn_fluid(const cqn_config* config, const char* out_dir) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  if (auto s = need(out_dir, "out_dir"); s != CQN_OK) return s;
  return guarded([&] {
    cqn::write_fluid(config->value, out_dir);
    return CQN_OK;
  });
}

cqn_status cqn_simulate(const cqn_config* config, const char* out_dir, cqn_progress_fn progress, void* user) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  if (auto s = need(out_dir, "out_dir"); s != CQN_OK) return s;
  return guarded([&] {
    const auto outcome = cqn::write_simulation(config->value, out_dir, progress_adapter(progress, user));
    return outcome.invariant_failures == 0 ? CQN_OK
                                           : fail(CQN_INTERNAL_ERROR, "simulator conservation check failed");
  });
}

cqn_status cqn_crossings(const cqn_config* config, const char* out_dir, cqn_progress_fn progress, void* user) {
  if (auto s = need(config, "config"); s != CQN_OK) return s;
  if (auto s = need(out_dir, "out_dir"); s != CQN_OK) return s;
  return guarded([&] {
    const auto outcome = cqn::write_crossings(config->value, out_dir, progress_adapter(progress, user));
    if (outcome.ok()) return CQN_OK;
    return fail(CQN_CHECK_FAILED, std::to_string(outcome.crossing_failures) + " of " +
                                      std::to_string(outcome.crossing_checks) + " crossing identities failed");
  });
}

cqn_status cqn_verify(const cqn_verify_options* options, cqn_criterion_fn on_result, cqn_progress_fn progress,
                      void* user, char** report) {
  return guarded([&] {
    cqn::VerifyOptions opt;
    if (options) {
      opt.reps = options->reps;
      opt.threads = options->threads == 0 ? 1 : options->threads;
      opt.rho_scale = options->rho_scale == 0.0 ? 1.0 : options->rho_scale;
      if (options->has_seed) opt.seed = options->seed;
      if (options->scratch_dir) opt.scratch_dir = options->scratch_dir;
    }
    opt.progress = progress_adapter(progress, user);
    const auto result = cqn::run_verification(opt);
    if (on_result) {
      for (const auto& r : result.results) {
        const cqn_criterion c{r.id,        r.name.c_str(), r.pass ? 1 : 0, r.value,
                              r.threshold, r.margin(),     r.detail.c_str()};
        on_result(&c, user);
      }
    }
    if (report) *report = copy_string(result.json());
    if (result.all_pass()) return CQN_OK;
    std::string failed;
    for (const auto& r : result.results)
      if (!r.pass) failed += (failed.empty() ? "" : ", ") + std::to_string(r.id);
    return fail(CQN_CHECK_FAILED, "failed criteria: " + failed);
  });
}

}  // extern "C"
