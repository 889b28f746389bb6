/* C interface to the closed network toolkit. Every function returns a
 * cqn_status; on failure cqn_last_error() describes the problem. Strings
 * returned through out-parameters are owned by the caller and released with
 * cqn_string_free(). The last error is per thread. */
#ifndef CQN_CQN_H
#define CQN_CQN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CQN_API __declspec(dllexport)
#else
#define CQN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cqn_status {
  CQN_OK = 0,
  CQN_CHECK_FAILED = 1, /* validation or acceptance check failed */
  CQN_PARSE_ERROR = 2,  /* malformed or schema-violating config */
  CQN_IO_ERROR = 3,     /* file could not be read or written */
  CQN_INVALID_ARGUMENT = 4,
  CQN_INTERNAL_ERROR = 5
} cqn_status;

typedef struct cqn_config cqn_config;

CQN_API const char* cqn_version(void);
CQN_API const char* cqn_last_error(void);
CQN_API void cqn_string_free(char* s);

CQN_API cqn_status cqn_config_load(const char* path, cqn_config** out);
CQN_API cqn_status cqn_config_parse(const char* json_text, cqn_config** out);
/* name is one of the bundled example configs, e.g. "markov_one_server". */
CQN_API cqn_status cqn_config_bundled(const char* name, cqn_config** out);
CQN_API void cqn_config_free(cqn_config* config);

CQN_API cqn_status cqn_config_set_seed(cqn_config* config, uint64_t seed);
CQN_API cqn_status cqn_config_set_reps(cqn_config* config, uint64_t reps);
CQN_API cqn_status cqn_config_set_threads(cqn_config* config, unsigned threads);
CQN_API cqn_status cqn_config_set_output_dir(cqn_config* config, const char* dir);
CQN_API cqn_status cqn_config_output_dir(const cqn_config* config, char** out);
CQN_API cqn_status cqn_config_rho_scale(const cqn_config* config, double* out);
CQN_API cqn_status cqn_config_dump(const cqn_config* config, char** out);

/* Newline-separated names of the bundled example configs. */
CQN_API cqn_status cqn_bundled_names(char** out);

/* Writes a JSON topology report to *report (may be NULL). Returns
 * CQN_CHECK_FAILED when the network violates a model invariant. */
CQN_API cqn_status cqn_validate(const cqn_config* config, char** report);

/* Progress lines from long runs; user is passed through unchanged. */
typedef void (*cqn_progress_fn)(const char* line, void* user);

CQN_API cqn_status cqn_fluid(const cqn_config* config, const char* out_dir);
CQN_API cqn_status cqn_simulate(const cqn_config* config, const char* out_dir, cqn_progress_fn progress,
                                void* user);
/* Returns CQN_CHECK_FAILED when some crossing identity does not hold. */
CQN_API cqn_status cqn_crossings(const cqn_config* config, const char* out_dir, cqn_progress_fn progress,
                                 void* user);

typedef struct cqn_verify_options {
  uint64_t reps;     /* 0: scenario default */
  unsigned threads;  /* 0: 1 */
  double rho_scale;  /* 0: 1 */
  int has_seed;
  uint64_t seed;
  const char* scratch_dir; /* NULL: a fresh temporary directory */
} cqn_verify_options;

typedef struct cqn_criterion {
  int id;
  const char* name;
  int pass;
  double value;
  double threshold;
  double margin;
  const char* detail;
} cqn_criterion;

typedef void (*cqn_criterion_fn)(const cqn_criterion* result, void* user);

/* Runs the acceptance criteria, calls on_result once per criterion in id
 * order, and writes the JSON report to *report (may be NULL). Returns
 * CQN_CHECK_FAILED unless every criterion passes. */
CQN_API cqn_status cqn_verify(const cqn_verify_options* options, cqn_criterion_fn on_result,
                              cqn_progress_fn progress, void* user, char** report);

#ifdef __cplusplus
}
#endif

#endif
