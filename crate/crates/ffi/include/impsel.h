#ifndef IMPSEL_H
#define IMPSEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ImpselModel {
  IMPSEL_MODEL_SINGLE = 0,
  IMPSEL_MODEL_MULTI = 1,
} ImpselModel;

typedef enum ImpselStatus {
  IMPSEL_STATUS_OK = 0,
  IMPSEL_STATUS_NULL_POINTER = 1,
  IMPSEL_STATUS_INVALID_ARGUMENT = 2,
  IMPSEL_STATUS_IO = 3,
  IMPSEL_STATUS_PARSE = 4,
  IMPSEL_STATUS_MODEL_VIOLATION = 5,
  IMPSEL_STATUS_ENUMERATION_TOO_LARGE = 6,
  IMPSEL_STATUS_PANIC = 7,
} ImpselStatus;

// Opaque mechanism spec.
typedef struct ImpselMechanism ImpselMechanism;

// Opaque nomination profile.
typedef struct ImpselProfile ImpselProfile;

typedef struct ImpselGapReport {
  uintptr_t n;
  uintptr_t k;
  uintptr_t delta;
  double mean_degree;
  double gap;
  double std_err;
  double ci95_half_width;
  double no_winner_rate;
  uint64_t trials;
  uint64_t master_seed;
  bool exact;
} ImpselGapReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call into this library on the
// same thread.
const char *impsel_last_error_message(void);

// Loads a profile file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum ImpselStatus impsel_profile_load(const char *path, struct ImpselProfile **out);

// Writes a profile file.
//
// # Safety
// `profile` must be a live handle and `path` a NUL-terminated string.
enum ImpselStatus impsel_profile_save(const struct ImpselProfile *profile, const char *path);

// Builds a profile on `n` vertices from `m` edges `from[i] -> to[i]`.
//
// # Safety
// `from` and `to` must point to `m` readable values each (they may be null
// when `m == 0`); `out` must be writable.
enum ImpselStatus impsel_profile_from_edges(uintptr_t n,
                                            enum ImpselModel model,
                                            const uintptr_t *from,
                                            const uintptr_t *to,
                                            uintptr_t m,
                                            struct ImpselProfile **out);

// Releases a profile handle. Null is ignored.
//
// # Safety
// `profile` must be null or a handle not yet freed.
void impsel_profile_free(struct ImpselProfile *profile);

// Number of vertices, or 0 for a null handle.
//
// # Safety
// `profile` must be null or a live handle.
uintptr_t impsel_profile_n(const struct ImpselProfile *profile);

// # Safety
// `profile` must be a live handle and `out` writable.
enum ImpselStatus impsel_profile_in_degree(const struct ImpselProfile *profile,
                                           uintptr_t vertex,
                                           uintptr_t *out);

// Maximum in-degree and the least vertex attaining it.
//
// # Safety
// `profile` must be a live handle; `delta` and `vertex` writable.
enum ImpselStatus impsel_profile_max_degree(const struct ImpselProfile *profile,
                                            uintptr_t *delta,
                                            uintptr_t *vertex);

// # Safety
// `out` must be writable.
enum ImpselStatus impsel_gen_single_worst(uintptr_t n, uintptr_t delta, struct ImpselProfile **out);

// # Safety
// `out` must be writable.
enum ImpselStatus impsel_gen_fixed_sample_adversary(uintptr_t n,
                                                    uintptr_t v,
                                                    struct ImpselProfile **out);

// # Safety
// `out` must be writable.
enum ImpselStatus impsel_gen_sqrt_adversary(uintptr_t n, struct ImpselProfile **out);

// # Safety
// `out` must be writable.
enum ImpselStatus impsel_gen_bound_stress(uintptr_t n, uintptr_t k, struct ImpselProfile **out);

// # Safety
// `out` must be writable.
enum ImpselStatus impsel_gen_random_single(uintptr_t n, uint64_t seed, struct ImpselProfile **out);

// # Safety
// `out` must be writable.
enum ImpselStatus impsel_gen_random_multi(uintptr_t n,
                                          double p,
                                          uint64_t seed,
                                          struct ImpselProfile **out);

// Parses a mechanism string such as `random-k:auto` or `fixed:0,3`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` writable.
enum ImpselStatus impsel_mechanism_parse(const char *spec, struct ImpselMechanism **out);

// Releases a mechanism handle. Null is ignored.
//
// # Safety
// `mechanism` must be null or a handle not yet freed.
void impsel_mechanism_free(struct ImpselMechanism *mechanism);

// One seeded run. Writes the winner, or -1 when there is none.
//
// # Safety
// Handles must be live and `winner` writable.
enum ImpselStatus impsel_run_once(const struct ImpselMechanism *mechanism,
                                  const struct ImpselProfile *profile,
                                  uint64_t seed,
                                  int64_t *winner);

// Monte Carlo estimate over `trials` seeded runs.
//
// # Safety
// Handles must be live and `out` writable.
enum ImpselStatus impsel_estimate(const struct ImpselMechanism *mechanism,
                                  const struct ImpselProfile *profile,
                                  uint64_t trials,
                                  uint64_t seed,
                                  struct ImpselGapReport *out);

// Report from exact enumeration of at most `budget` draw sequences.
//
// # Safety
// Handles must be live and `out` writable.
enum ImpselStatus impsel_exact_report(const struct ImpselMechanism *mechanism,
                                      const struct ImpselProfile *profile,
                                      uint64_t budget,
                                      struct ImpselGapReport *out);

// Exact winner distribution as JSON, with the expected degree and gap as
// `num/den` strings. Free the result with [`impsel_string_free`].
//
// # Safety
// Handles must be live and `out` writable.
enum ImpselStatus impsel_exact_json(const struct ImpselMechanism *mechanism,
                                    const struct ImpselProfile *profile,
                                    uint64_t budget,
                                    char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a string from this library not yet freed.
void impsel_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMPSEL_H */
