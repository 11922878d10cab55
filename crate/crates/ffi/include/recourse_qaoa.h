#ifndef RECOURSE_QAOA_H
#define RECOURSE_QAOA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum RqStatus {
  RQ_STATUS_OK = 0,
  RQ_STATUS_NULL_POINTER = 1,
  RQ_STATUS_INVALID_UTF8 = 2,
  RQ_STATUS_PARSE = 3,
  RQ_STATUS_INVALID_INSTANCE = 4,
  RQ_STATUS_INVALID_CONFIG = 5,
  RQ_STATUS_IO = 6,
  RQ_STATUS_SOLVER = 7,
  RQ_STATUS_BUFFER_TOO_SMALL = 8,
  RQ_STATUS_PANIC = 9,
} RqStatus;

typedef enum RqOptimizer {
  RQ_OPTIMIZER_NELDER_MEAD = 0,
  RQ_OPTIMIZER_SPSA = 1,
  RQ_OPTIMIZER_COBYLA_STYLE = 2,
} RqOptimizer;

typedef enum RqInit {
  RQ_INIT_ANNEALING_RAMP = 0,
  RQ_INIT_RANDOM = 1,
  RQ_INIT_CONSTANT = 2,
} RqInit;

// A validated problem instance.
typedef struct RqInstance RqInstance;

// QAOA run options; starts from the library defaults.
typedef struct RqQaoaConfig RqQaoaConfig;

// Outcome of one optimization run.
typedef struct RqRunResult RqRunResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or NULL. The pointer
// stays valid until the next failing call on the same thread.
const char *rq_last_error(void);

// Frees a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void rq_string_free(char *s);

// Parses and validates an instance from the text of an instance file.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum RqStatus rq_instance_from_str(const char *text, struct RqInstance **out);

// Loads and validates an instance file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum RqStatus rq_instance_from_file(const char *path, struct RqInstance **out);

// # Safety
// `instance` must come from this library and not have been freed.
void rq_instance_free(struct RqInstance *instance);

// Number of timesteps.
//
// # Safety
// `instance` must be a live handle; `out` must be writable.
enum RqStatus rq_instance_horizon(const struct RqInstance *instance, size_t *out);

// Expected total cost of the first-stage plan `j[0..len]`.
//
// # Safety
// `instance` must be a live handle, `j` must point to `len` values and
// `out` must be writable.
enum RqStatus rq_expected_cost(const struct RqInstance *instance,
                               const int64_t *j,
                               size_t len,
                               double *out);

// Exact benchmark report as a JSON object.
//
// # Safety
// `instance` must be a live handle; `out_json` must be writable. Free the
// result with [`rq_string_free`].
enum RqStatus rq_solve_exact_json(const struct RqInstance *instance, char **out_json);

// A configuration holding the library defaults.
struct RqQaoaConfig *rq_config_new(void);

// # Safety
// `config` must come from [`rq_config_new`] and not have been freed.
void rq_config_free(struct RqQaoaConfig *config);

// # Safety
// `config` must be a live handle.
enum RqStatus rq_config_set_layers(struct RqQaoaConfig *config, size_t layers);

// # Safety
// `config` must be a live handle.
enum RqStatus rq_config_set_seed(struct RqQaoaConfig *config, uint64_t seed);

// # Safety
// `config` must be a live handle.
enum RqStatus rq_config_set_max_evaluations(struct RqQaoaConfig *config, size_t budget);

// # Safety
// `config` must be a live handle.
enum RqStatus rq_config_set_penalty(struct RqQaoaConfig *config, double penalty);

// `shots == 0` selects exact expectations, anything else shot sampling.
//
// # Safety
// `config` must be a live handle.
enum RqStatus rq_config_set_shots(struct RqQaoaConfig *config, uint64_t shots);

// # Safety
// `config` must be a live handle.
enum RqStatus rq_config_set_optimizer(struct RqQaoaConfig *config, enum RqOptimizer optimizer);

// # Safety
// `config` must be a live handle.
enum RqStatus rq_config_set_init(struct RqQaoaConfig *config, enum RqInit init);

// Runs one optimization. A NULL `config` means defaults.
//
// # Safety
// `instance` must be a live handle, `config` a live handle or NULL, and
// `out` writable.
enum RqStatus rq_qaoa_run(const struct RqInstance *instance,
                          const struct RqQaoaConfig *config,
                          struct RqRunResult **out);

// # Safety
// `result` must come from [`rq_qaoa_run`] and not have been freed.
void rq_run_result_free(struct RqRunResult *result);

// # Safety
// `result` must be a live handle; `out` must be writable.
enum RqStatus rq_run_best_expectation(const struct RqRunResult *result, double *out);

// # Safety
// `result` must be a live handle; `out` must be writable.
enum RqStatus rq_run_evaluations(const struct RqRunResult *result, size_t *out);

// Copies the modal first-stage plan into `buf`. `len` receives the plan
// length even when `cap` is too small.
//
// # Safety
// `result` must be a live handle, `buf` must have room for `cap` values
// (or be NULL with `cap == 0`) and `len` must be writable.
enum RqStatus rq_run_modal_j(const struct RqRunResult *result,
                             int64_t *buf,
                             size_t cap,
                             size_t *len);

// Measured probability of the first-stage plan `j[0..len]`.
//
// # Safety
// `result` must be a live handle, `j` must point to `len` values and
// `out` must be writable.
enum RqStatus rq_run_probability_of(const struct RqRunResult *result,
                                    const int64_t *j,
                                    size_t len,
                                    double *out);

// Full run result as JSON.
//
// # Safety
// `result` must be a live handle; `out_json` must be writable. Free the
// result with [`rq_string_free`].
enum RqStatus rq_run_result_json(const struct RqRunResult *result, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECOURSE_QAOA_H */
