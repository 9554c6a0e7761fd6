#ifndef EOSIM_H
#define EOSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EosimStatus {
  EOSIM_STATUS_OK = 0,
  EOSIM_STATUS_NULL_POINTER = 1,
  EOSIM_STATUS_INVALID_UTF8 = 2,
  // The scenario or descriptor text did not parse or validate.
  EOSIM_STATUS_INVALID_INPUT = 3,
  EOSIM_STATUS_NOT_FOUND = 4,
  // A runtime invariant failed during the simulation.
  EOSIM_STATUS_RUNTIME = 5,
  // The input distribution was empty.
  EOSIM_STATUS_EMPTY = 6,
  EOSIM_STATUS_PANIC = 7,
} EosimStatus;

// A finished simulation run.
typedef struct EosimRun EosimRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or NULL. The pointer stays
// valid until the next failing call on the same thread.
const char *eosim_last_error(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a pointer obtained from this library and not yet freed.
void eosim_string_free(char *s);

// Runs the scenario given as TOML text.
//
// # Safety
// `toml` must be a valid NUL-terminated string and `out` a writable pointer.
enum EosimStatus eosim_run_scenario(const char *toml, struct EosimRun **out);

// Runs a scenario bundled with the library, by name.
//
// # Safety
// `name` must be a valid NUL-terminated string and `out` a writable pointer.
enum EosimStatus eosim_run_bundled(const char *name, struct EosimRun **out);

// Head block number of node 0 at the end of the run.
//
// # Safety
// `run` must be a live handle from [`eosim_run_scenario`] or
// [`eosim_run_bundled`]; `out` must be writable.
enum EosimStatus eosim_run_head(const struct EosimRun *run, uint64_t *out);

// Number of trace events recorded.
//
// # Safety
// As for [`eosim_run_head`].
enum EosimStatus eosim_run_event_count(const struct EosimRun *run, size_t *out);

// Borrowed pointer to the trace in JSON-lines form, valid until the handle
// is freed.
//
// # Safety
// `run` must be null or a live handle.
const char *eosim_run_trace(const struct EosimRun *run);

// Borrowed pointer to the summary JSON, valid until the handle is freed.
//
// # Safety
// `run` must be null or a live handle.
const char *eosim_run_summary(const struct EosimRun *run);

// Releases a run handle.
//
// # Safety
// `run` must be null or a handle not yet freed.
void eosim_run_free(struct EosimRun *run);

// Checks a contract descriptor. Writes the number of findings to
// `out_count` and, when `out_json` is non-null, a newly allocated JSON
// array of findings to free with [`eosim_string_free`].
//
// # Safety
// `text` must be a valid NUL-terminated string; `out_count` writable;
// `out_json` null or writable.
enum EosimStatus eosim_lint(const char *text, size_t *out_count, char **out_json);

// Shannon entropy in bits of the distribution given by `counts`.
//
// # Safety
// `counts` must point to `len` readable values; `out` must be writable.
enum EosimStatus eosim_entropy_bits(const uint64_t *counts, size_t len, double *out);

// Gini coefficient of `values`.
//
// # Safety
// `values` must point to `len` readable values; `out` must be writable.
enum EosimStatus eosim_gini(const double *values, size_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EOSIM_H */
