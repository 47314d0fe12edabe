#ifndef MONTPARNASSE_H
#define MONTPARNASSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MpAlgorithm {
  MP_ALGORITHM_MOGRLS = 0,
  MP_ALGORITHM_MOGNRPALR = 1,
} MpAlgorithm;

typedef enum MpStatus {
  MP_STATUS_OK = 0,
  MP_STATUS_NULL_POINTER = 1,
  MP_STATUS_INVALID_UTF8 = 2,
  MP_STATUS_INVALID_STRUCTURE = 3,
  MP_STATUS_INVALID_SEQUENCE = 4,
  MP_STATUS_LENGTH_MISMATCH = 5,
  MP_STATUS_ENGINE_FAILURE = 6,
  MP_STATUS_INVALID_ARGUMENT = 7,
  MP_STATUS_PANIC = 8,
} MpStatus;

/**
 * Outcome of one design run.
 */
typedef struct MpRunResult MpRunResult;

/**
 * Parsed target structure.
 */
typedef struct MpTarget MpTarget;

/**
 * Metrics of one fold. `mfe_structure` is owned by the caller and must be
 * released with `mp_string_free`.
 */
typedef struct MpFoldResult {
  char *mfe_structure;
  double mfe_energy;
  double ensemble_free_energy;
  double target_probability;
  double ensemble_defect;
} MpFoldResult;

/**
 * Options for `mp_solve`; fill with `mp_solve_options_default` first.
 */
typedef struct MpSolveOptions {
  enum MpAlgorithm algorithm;
  uint64_t budget;
  uint64_t seed;
  uint32_t level;
  double alpha;
  double gc_target;
  uint32_t min_hairpin;
  double kt;
} MpSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy of the last error message on this thread, or NULL when the last
 * call succeeded. Release with `mp_string_free`.
 */
char *mp_last_error_message(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void mp_string_free(char *s);

/**
 * # Safety
 * `dotbracket` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MpStatus mp_target_parse(const char *dotbracket, struct MpTarget **out);

/**
 * # Safety
 * `target` must be NULL or a handle from `mp_target_parse`, freed once.
 */
void mp_target_free(struct MpTarget *target);

/**
 * # Safety
 * `target` must be a live handle and `out` a valid pointer.
 */
enum MpStatus mp_target_length(const struct MpTarget *target, size_t *out);

/**
 * # Safety
 * `a` and `b` must be NUL-terminated strings and `out` a valid pointer.
 */
enum MpStatus mp_base_pair_distance(const char *a, const char *b, size_t *out);

/**
 * Fold `sequence` with the built-in engine and report metrics against
 * `target`.
 *
 * # Safety
 * `sequence` must be a NUL-terminated string, `target` a live handle and
 * `out` a valid pointer.
 */
enum MpStatus mp_fold(const char *sequence,
                      const struct MpTarget *target,
                      uint32_t min_hairpin,
                      double kt,
                      struct MpFoldResult *out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum MpStatus mp_solve_options_default(struct MpSolveOptions *out);

/**
 * Run one seeded design with the built-in engine.
 *
 * # Safety
 * `target` must be a live handle, `options` NULL or valid, and `out` a
 * valid pointer. The result is released with `mp_run_result_free`.
 */
enum MpStatus mp_solve(const struct MpTarget *target,
                       const struct MpSolveOptions *options,
                       struct MpRunResult **out);

/**
 * # Safety
 * `result` must be NULL or a handle from `mp_solve`, freed once.
 */
void mp_run_result_free(struct MpRunResult *result);

/**
 * # Safety
 * `result` must be a live handle.
 */
uint64_t mp_run_result_nevals(const struct MpRunResult *result);

/**
 * Best base-pair distance, or `u32::MAX` for a NULL handle.
 *
 * # Safety
 * `result` must be a live handle.
 */
uint32_t mp_run_result_best_bpd(const struct MpRunResult *result);

/**
 * # Safety
 * `result` must be a live handle.
 */
bool mp_run_result_solved(const struct MpRunResult *result);

/**
 * Best sequence found, owned by the caller (`mp_string_free`). NULL for a
 * NULL handle.
 *
 * # Safety
 * `result` must be a live handle.
 */
char *mp_run_result_sequence(const struct MpRunResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MONTPARNASSE_H */
