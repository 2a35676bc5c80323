#ifndef GRIDSHIELD_H
#define GRIDSHIELD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_ARGUMENT = 1,
  GS_STATUS_INVALID_UTF8 = 2,
  /**
   * Unknown scenario, bad override or unreadable scenario file.
   */
  GS_STATUS_CONFIG = 3,
  /**
   * The simulation itself failed.
   */
  GS_STATUS_SIMULATION = 4,
  GS_STATUS_DECODE = 5,
  /**
   * Event log could not be parsed or scored.
   */
  GS_STATUS_REPLAY = 6,
  /**
   * The requested value does not exist for this run.
   */
  GS_STATUS_NO_VALUE = 7,
  GS_STATUS_PANIC = 8,
} GsStatus;

typedef enum GsCulprit {
  GS_CULPRIT_NONE = 0,
  GS_CULPRIT_STATION_BUS_SWITCH = 1,
  GS_CULPRIT_PIED = 2,
} GsCulprit;

/**
 * Finished scenario run. Opaque to C.
 */
typedef struct GsRun GsRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *gs_version(void);

/**
 * Message for the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *gs_last_error(void);

/**
 * Runs a built-in scenario ("baseline", "attack1", "attack2") with
 * optional `key=value` overrides.
 *
 * # Safety
 * `name` is a valid string; `overrides` holds `n_overrides` valid strings
 * (or is null when the count is 0); `out` is writable.
 */
enum GsStatus gs_run_builtin(const char *name,
                             const char *const *overrides,
                             size_t n_overrides,
                             struct GsRun **out);

/**
 * Runs the scenario described by a TOML file.
 *
 * # Safety
 * As [`gs_run_builtin`], with `path` in place of `name`.
 */
enum GsStatus gs_run_config(const char *path,
                            const char *const *overrides,
                            size_t n_overrides,
                            struct GsRun **out);

/**
 * # Safety
 * `run` is null or a handle not yet freed.
 */
void gs_run_free(struct GsRun *run);

/**
 * # Safety
 * `run` is a live handle, `out` writable.
 */
enum GsStatus gs_run_passed(const struct GsRun *run, bool *out);

/**
 * `GS_CULPRIT_NONE` when the IDS reached no verdict.
 *
 * # Safety
 * `run` is a live handle, `out` writable.
 */
enum GsStatus gs_run_culprit(const struct GsRun *run, enum GsCulprit *out);

/**
 * # Safety
 * `run` is a live handle, `out` writable.
 */
enum GsStatus gs_run_alert_count(const struct GsRun *run, uint64_t *out);

/**
 * Fault-to-trip latency in microseconds. `GS_STATUS_NO_VALUE` when the
 * breaker never tripped.
 *
 * # Safety
 * `run` is a live handle, `out` writable.
 */
enum GsStatus gs_run_delay_total_us(const struct GsRun *run, uint64_t *out);

/**
 * Scored result as JSON. Free with [`gs_string_free`].
 *
 * # Safety
 * `run` is a live handle, `out` writable.
 */
enum GsStatus gs_run_result_json(const struct GsRun *run, char **out);

/**
 * Full event log as JSON lines. Free with [`gs_string_free`].
 *
 * # Safety
 * `run` is a live handle, `out` writable.
 */
enum GsStatus gs_run_events_jsonl(const struct GsRun *run, char **out);

/**
 * Decodes one GOOSE frame into JSON. Free with [`gs_string_free`].
 *
 * # Safety
 * `bytes` points to `len` readable bytes; `out` writable.
 */
enum GsStatus gs_goose_decode(const uint8_t *bytes, size_t len, char **out);

/**
 * Re-scores an event log given as JSON lines and returns the result JSON.
 *
 * # Safety
 * `jsonl` is a valid string; `out` writable.
 */
enum GsStatus gs_replay_jsonl(const char *jsonl, char **out);

/**
 * # Safety
 * `s` is null or a string returned by this library and not yet freed.
 */
void gs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRIDSHIELD_H */
