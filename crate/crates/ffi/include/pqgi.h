#ifndef PQGI_H
#define PQGI_H

/* Generated by cbindgen. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PqgiMode {
  PQGI_MODE_EXACT = 0,
  PQGI_MODE_SAMPLE = 1,
} PqgiMode;

// Result code of every fallible entry point.
typedef enum PqgiStatus {
  PQGI_STATUS_OK = 0,
  PQGI_STATUS_NULL_POINTER = 1,
  PQGI_STATUS_INVALID_UTF8 = 2,
  PQGI_STATUS_INVALID_SCENE = 3,
  PQGI_STATUS_INVALID_ARGUMENT = 4,
  PQGI_STATUS_PROTOCOL_FAILURE = 5,
  PQGI_STATUS_BUFFER_TOO_SMALL = 6,
  PQGI_STATUS_NO_ESTIMATE = 7,
  PQGI_STATUS_PANIC = 8,
} PqgiStatus;

typedef enum PqgiVerdict {
  PQGI_VERDICT_INTERSECT = 0,
  PQGI_VERDICT_DISJOINT = 1,
  PQGI_VERDICT_ABORT = 2,
} PqgiVerdict;

// Opaque scene handle.
typedef struct PqgiScene PqgiScene;

// Opaque transcript handle.
typedef struct PqgiTranscript PqgiTranscript;

// Options for [`pqgi_run`]. `counting_bits == 0` selects the default width.
typedef struct PqgiRunOptions {
  uint32_t counting_bits;
  enum PqgiMode mode;
  uint64_t seed;
  bool record_amplitudes;
} PqgiRunOptions;

// Communication cost. Classical baselines saturate at `UINT64_MAX`.
typedef struct PqgiCost {
  uint64_t alice_to_bob_qubits;
  uint64_t bob_to_alice_qubits;
  uint64_t total_qubits;
  uint64_t paper_formula_qubits;
  uint64_t atallah_bits;
  uint64_t qin_bits;
} PqgiCost;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next `pqgi_*` call on the same thread.
const char *pqgi_last_error(void);

// Static, NUL-terminated crate version.
const char *pqgi_version(void);

// Parses and validates a scene from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum PqgiStatus pqgi_scene_from_json(const char *json, struct PqgiScene **out);

// # Safety
// `scene` must come from [`pqgi_scene_from_json`] and not be freed twice.
void pqgi_scene_free(struct PqgiScene *scene);

// Writes the scene's sorted cell serials into `buf`. `*len` always receives
// the cell count; if it exceeds `cap` nothing is written and
// `BufferTooSmall` is returned.
//
// # Safety
// `buf` must hold `cap` elements (it may be null when `cap` is 0).
enum PqgiStatus pqgi_scene_rasterize(const struct PqgiScene *scene,
                                     uintptr_t *buf,
                                     uintptr_t cap,
                                     uintptr_t *len);

// Runs the protocol between two scenes. `options` may be null for the
// defaults (exact mode, seed 0); `adversary` may be null for honest play
// and otherwise uses the CLI spelling, e.g. `"bob-tamper:3"`.
//
// # Safety
// Pointers must be valid or null where allowed; `out` must be writable.
enum PqgiStatus pqgi_run(const struct PqgiScene *alice,
                         const struct PqgiScene *bob,
                         const struct PqgiRunOptions *options,
                         const char *adversary,
                         struct PqgiTranscript **out);

// # Safety
// `transcript` must come from [`pqgi_run`] and not be freed twice.
void pqgi_transcript_free(struct PqgiTranscript *transcript);

// # Safety
// `transcript` must be a live handle; `out` must be writable.
enum PqgiStatus pqgi_transcript_verdict(const struct PqgiTranscript *transcript,
                                        enum PqgiVerdict *out);

// Decoded intersection size and the probability of the reported outcome.
// Returns `NoEstimate` for aborted runs.
//
// # Safety
// `transcript` must be a live handle; outputs must be writable.
enum PqgiStatus pqgi_transcript_count(const struct PqgiTranscript *transcript,
                                      uintptr_t *count,
                                      double *outcome_probability);

// Serializes the transcript as pretty-printed JSON.
//
// # Safety
// `transcript` must be a live handle; `out` must be writable. Release the
// result with [`pqgi_string_free`].
enum PqgiStatus pqgi_transcript_to_json(const struct PqgiTranscript *transcript, char **out);

// # Safety
// `s` must come from this library and not be freed twice.
void pqgi_string_free(char *s);

// Communication cost for `m` and `n` records on a grid of `cells` cells.
//
// # Safety
// `out` must be writable.
enum PqgiStatus pqgi_comm_cost(uintptr_t m, uintptr_t n, uintptr_t cells, struct PqgiCost *out);

// Exact probability that the cheat check fails under `adversary`.
//
// # Safety
// Scene handles must be live; `adversary` may be null; `out` must be
// writable.
enum PqgiStatus pqgi_detection_probability(const struct PqgiScene *alice,
                                           const struct PqgiScene *bob,
                                           const char *adversary,
                                           double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PQGI_H */
