#ifndef STAKEMARKET_H
#define STAKEMARKET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SmStatus {
  SM_STATUS_OK = 0,
  SM_STATUS_NULL_POINTER = 1,
  SM_STATUS_INVALID_UTF8 = 2,
  SM_STATUS_CONFIG = 3,
  SM_STATUS_ENGINE = 4,
  SM_STATUS_FINISHED = 5,
  SM_STATUS_OUT_OF_RANGE = 6,
  SM_STATUS_PANIC = 7,
} SmStatus;

typedef enum SmAlgorithm {
  SM_ALGORITHM_GCM = 0,
  SM_ALGORITHM_GSM_REJECT = 1,
  SM_ALGORITHM_GSM_LONGEST = 2,
  SM_ALGORITHM_CFM = 3,
  SM_ALGORITHM_CFM_REJECT = 4,
} SmAlgorithm;

typedef enum SmMatchKind {
  SM_MATCH_KIND_MATCHED = 0,
  SM_MATCH_KIND_REJECTED = 1,
  SM_MATCH_KIND_EMPTY = 2,
} SmMatchKind;

/**
 * A market loaded from a scenario, advanced one period at a time.
 */
typedef struct SmEngine SmEngine;

typedef struct SmMatcher SmMatcher;

typedef struct SmPeriod {
  uint32_t period;
  uint64_t price_ticks;
  uint64_t floor_ticks;
  uint64_t next_floor_ticks;
  bool clamped;
  uint64_t floor_supply;
  uint64_t demand;
  uint64_t submitted;
  uint64_t matched;
  uint64_t infeasible;
  int64_t treasury_delta_ticks;
} SmPeriod;

typedef struct SmPoolEntry {
  uint32_t id;
  uint32_t tau;
  uint64_t cost_ticks;
} SmPoolEntry;

typedef struct SmMatch {
  enum SmMatchKind kind;
  /**
   * Valid only when `kind` is matched.
   */
  struct SmPoolEntry provider;
  bool feasible;
} SmMatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Length in bytes of the last error message on this thread, without the NUL.
 */
size_t sm_last_error_length(void);

/**
 * Copies the last error message into `buf` as a NUL-terminated string,
 * truncating to `len - 1` bytes. Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sm_last_error_message(char *buf, size_t len);

/**
 * Parses and validates a TOML scenario and stores a new engine in `out`.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SmStatus sm_engine_new(const char *toml, struct SmEngine **out);

/**
 * # Safety
 * `engine` must be null or a handle from [`sm_engine_new`] not yet freed.
 */
void sm_engine_free(struct SmEngine *engine);

/**
 * Overrides the matching rule for the remaining periods.
 *
 * # Safety
 * `engine` must be a live handle.
 */
enum SmStatus sm_engine_set_algorithm(struct SmEngine *engine, enum SmAlgorithm algo);

/**
 * Advances one period. Returns `Finished` once the horizon is reached.
 * `out` may be null.
 *
 * # Safety
 * `engine` must be a live handle; `out` null or writable.
 */
enum SmStatus sm_engine_step(struct SmEngine *engine, struct SmPeriod *out);

/**
 * Runs every remaining period.
 *
 * # Safety
 * `engine` must be a live handle.
 */
enum SmStatus sm_engine_run(struct SmEngine *engine);

/**
 * Next period to run, or 0 for a null handle.
 *
 * # Safety
 * `engine` must be null or a live handle.
 */
uint32_t sm_engine_period(const struct SmEngine *engine);

/**
 * # Safety
 * `engine` must be null or a live handle.
 */
uint32_t sm_engine_horizon(const struct SmEngine *engine);

/**
 * Most recently posted price in ticks.
 *
 * # Safety
 * `engine` must be null or a live handle.
 */
uint64_t sm_engine_price(const struct SmEngine *engine);

/**
 * Number of periods already run.
 *
 * # Safety
 * `engine` must be null or a live handle.
 */
size_t sm_engine_history_len(const struct SmEngine *engine);

/**
 * # Safety
 * `engine` must be a live handle and `out` writable.
 */
enum SmStatus sm_engine_history_get(const struct SmEngine *engine,
                                    size_t index,
                                    struct SmPeriod *out);

/**
 * Builds a matcher over `len` entries. `price_ticks` sizes the GCM buckets
 * and is ignored by the other rules.
 *
 * # Safety
 * `entries` must point to `len` entries (or be null with `len == 0`);
 * `out` must be writable.
 */
enum SmStatus sm_matcher_new(enum SmAlgorithm algo,
                             const struct SmPoolEntry *entries,
                             size_t len,
                             uint64_t price_ticks,
                             struct SmMatcher **out);

/**
 * # Safety
 * `matcher` must be null or a handle from [`sm_matcher_new`] not yet freed.
 */
void sm_matcher_free(struct SmMatcher *matcher);

/**
 * # Safety
 * `matcher` must be a live handle.
 */
enum SmStatus sm_matcher_insert(struct SmMatcher *matcher, struct SmPoolEntry entry);

/**
 * Serves one job of `hours` hours.
 *
 * # Safety
 * `matcher` must be a live handle and `out` writable.
 */
enum SmStatus sm_matcher_match(struct SmMatcher *matcher, uint32_t hours, struct SmMatch *out);

/**
 * # Safety
 * `matcher` must be null or a live handle.
 */
size_t sm_matcher_len(const struct SmMatcher *matcher);

/**
 * Basic operations performed so far.
 *
 * # Safety
 * `matcher` must be null or a live handle.
 */
uint64_t sm_matcher_ops(const struct SmMatcher *matcher);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STAKEMARKET_H */
