#ifndef PGPO_H
#define PGPO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PgpoStatus {
  PGPO_STATUS_OK = 0,
  PGPO_STATUS_NULL_POINTER = 1,
  /**
   * Bad argument or config value (the CLI's validation class).
   */
  PGPO_STATUS_INVALID_ARGUMENT = 2,
  PGPO_STATUS_INVALID_UTF8 = 3,
  /**
   * Malformed JSON or a table/query that fails its invariants.
   */
  PGPO_STATUS_INVALID_INPUT = 4,
  PGPO_STATUS_RUNTIME = 5,
  PGPO_STATUS_PANIC = 6,
} PgpoStatus;

typedef enum PgpoPath {
  PGPO_PATH_RIGOROUS = 0,
  PGPO_PATH_HALLUCINATION = 1,
  PGPO_PATH_SHORTCUT = 2,
  PGPO_PATH_FAITHFUL_WRONG = 3,
} PgpoPath;

/**
 * Opaque query handle.
 */
typedef struct PgpoQuery PgpoQuery;

/**
 * Opaque table handle.
 */
typedef struct PgpoTable PgpoTable;

typedef struct PgpoRewardConfig {
  double alpha;
  double beta;
  double tau_high;
  double tau_low;
} PgpoRewardConfig;

/**
 * Percentile band `(lo, hi]`, in percent.
 */
typedef struct PgpoBand {
  double lo;
  double hi;
} PgpoBand;

typedef struct PgpoBreakdown {
  double r_fmt;
  double r_acc;
  double r_proc;
  double r_base;
  double composite;
  enum PgpoPath path;
  size_t n_steps;
  bool well_formed;
} PgpoBreakdown;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a
 * successful call. Valid until the next call on the same thread.
 */
const char *pgpo_last_error(void);

/**
 * Library version, a static string.
 */
const char *pgpo_version(void);

struct PgpoRewardConfig pgpo_reward_config_default(void);

/**
 * Critic-gated composite reward for the given component scores.
 *
 * # Safety
 * `cfg` may be null (defaults); `out` must be a valid pointer.
 */
enum PgpoStatus pgpo_composite_reward(const struct PgpoRewardConfig *cfg,
                                      double r_fmt,
                                      double r_acc,
                                      double r_proc,
                                      double *out);

/**
 * Group-standardized advantages. `out` must hold `n` doubles.
 *
 * # Safety
 * `rewards` and `out` must point to `n` doubles.
 */
enum PgpoStatus pgpo_normalize_advantages(const double *rewards,
                                          size_t n,
                                          double std_floor,
                                          double *out);

/**
 * Length-percentile active set. Writes the kept indices into `out` (which
 * must hold `n` entries), their count into `out_len` and whether the
 * whole-group fallback fired into `out_fallback`.
 *
 * # Safety
 * `lengths` must point to `n` values, `bands` to `n_bands` bands and
 * `out` to `n` writable entries.
 */
enum PgpoStatus pgpo_select_active_set(const size_t *lengths,
                                       size_t n,
                                       const struct PgpoBand *bands,
                                       size_t n_bands,
                                       size_t *out,
                                       size_t *out_len,
                                       bool *out_fallback);

/**
 * Generate a seeded table and query with the default environment.
 *
 * # Safety
 * Both out pointers must be valid.
 */
enum PgpoStatus pgpo_episode_generate(uint64_t seed,
                                      struct PgpoTable **out_table,
                                      struct PgpoQuery **out_query);

/**
 * Parse and validate a table from its JSON form (one `tables.jsonl` line).
 *
 * # Safety
 * `json` must be a nul-terminated string; `out` must be valid.
 */
enum PgpoStatus pgpo_table_from_json(const char *json, struct PgpoTable **out);

/**
 * Parse a query (one `queries.jsonl` line) and check it against `table`.
 *
 * # Safety
 * `table` must be a live handle, `json` a nul-terminated string and `out`
 * a valid pointer.
 */
enum PgpoStatus pgpo_query_from_json(const struct PgpoTable *table,
                                     const char *json,
                                     struct PgpoQuery **out);

/**
 * # Safety
 * `table` must be null or a handle not yet freed.
 */
void pgpo_table_free(struct PgpoTable *table);

/**
 * # Safety
 * `query` must be null or a handle not yet freed.
 */
void pgpo_query_free(struct PgpoQuery *query);

/**
 * Question text of `query` as a new string (free with `pgpo_string_free`).
 *
 * # Safety
 * `query` must be a live handle and `out` valid.
 */
enum PgpoStatus pgpo_query_question(const struct PgpoQuery *query, char **out);

/**
 * Serialized gold reasoning chain for `query` (free with `pgpo_string_free`).
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum PgpoStatus pgpo_gold_chain(const struct PgpoTable *table,
                                const struct PgpoQuery *query,
                                char **out);

/**
 * Score trajectory text against a table and query. `cfg` may be null for
 * the default reward config.
 *
 * # Safety
 * Handles must be live, `text` nul-terminated and `out` valid.
 */
enum PgpoStatus pgpo_verify(const struct PgpoTable *table,
                            const struct PgpoQuery *query,
                            const char *text,
                            const struct PgpoRewardConfig *cfg,
                            struct PgpoBreakdown *out);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void pgpo_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PGPO_H */
