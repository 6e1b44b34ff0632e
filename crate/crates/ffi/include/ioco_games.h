#ifndef IOCO_GAMES_H
#define IOCO_GAMES_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IgStatus {
  IG_STATUS_OK = 0,
  IG_STATUS_NULL_ARGUMENT = 1,
  IG_STATUS_INVALID_UTF8 = 2,
  IG_STATUS_PARSE = 3,
  IG_STATUS_MODEL = 4,
  IG_STATUS_UNSUPPORTED = 5,
  IG_STATUS_PANIC = 6,
} IgStatus;

typedef enum IgRegime {
  IG_REGIME_INPUT_EAGER = 0,
  IG_REGIME_OUTPUT_EAGER = 1,
  IG_REGIME_NONDETERMINISTIC = 2,
  IG_REGIME_INPUT_FAIR = 3,
} IgRegime;

typedef enum IgVerdict {
  IG_VERDICT_PASS = 0,
  IG_VERDICT_FAIL = 1,
} IgVerdict;

// A parsed suspension automaton.
typedef struct IgSpec IgSpec;

// A finite trace-based tester strategy.
typedef struct IgStrategy IgStrategy;

// A test case.
typedef struct IgTest IgTest;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into this library on the same thread.
const char *ig_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library.
void ig_string_free(char *s);

// # Safety
// `source` must be a NUL-terminated string; `out` must be writable.
enum IgStatus ig_spec_parse(const char *source, struct IgSpec **out);

// # Safety
// `spec` must be NULL or a handle from [`ig_spec_parse`], freed once.
void ig_spec_free(struct IgSpec *spec);

// # Safety
// `spec` must be a live handle.
size_t ig_spec_num_states(const struct IgSpec *spec);

// Mixed states as a comma-separated list of names.
//
// # Safety
// `spec` must be a live handle; `out` must be writable.
enum IgStatus ig_spec_mixed_states(const struct IgSpec *spec, char **out);

// Solves the reachability game for the comma-separated `goal`. When
// winning, `strategy` receives a finite witness (the input-eager one for
// the input-fair regime); otherwise it is set to NULL.
//
// # Safety
// `spec` must be a live handle, `goal` a NUL-terminated string and both
// out parameters writable.
enum IgStatus ig_synth(const struct IgSpec *spec,
                       enum IgRegime regime,
                       const char *goal,
                       bool *winning,
                       struct IgStrategy **strategy);

// # Safety
// `source` must be a NUL-terminated string; `out` must be writable.
enum IgStatus ig_strategy_parse(const char *source, struct IgStrategy **out);

// The strategy in `TRACE -> ACTION` exchange format.
//
// # Safety
// `strategy` must be a live handle; `out` must be writable.
enum IgStatus ig_strategy_render(const struct IgStrategy *strategy, char **out);

// # Safety
// `strategy` must be NULL or a live handle, freed once.
void ig_strategy_free(struct IgStrategy *strategy);

// # Safety
// Handles must be live; `out` must be writable.
enum IgStatus ig_strategy_to_test(const struct IgSpec *spec,
                                  const struct IgStrategy *strategy,
                                  enum IgRegime regime,
                                  struct IgTest **out);

// # Safety
// `source` must be a NUL-terminated string; `out` must be writable.
enum IgStatus ig_test_parse(const char *source, struct IgTest **out);

// The test case in the automaton file format.
//
// # Safety
// `test` must be a live handle; `out` must be writable.
enum IgStatus ig_test_render(const struct IgTest *test, char **out);

// # Safety
// `test` must be NULL or a live handle, freed once.
void ig_test_free(struct IgTest *test);

// Decides `implementation ioco spec`. `counterexample` receives
// `"TRACE OUTPUT"` on failure and NULL otherwise.
//
// # Safety
// Handles must be live; out parameters must be writable.
enum IgStatus ig_ioco(const struct IgSpec *implementation,
                      const struct IgSpec *spec,
                      bool *conforms,
                      char **counterexample);

// Runs `test` once against `sut` with seeded random outputs. With
// `complete`, the implementation is first made input-enabled with
// self-loops.
//
// # Safety
// Handles must be live; `verdict` must be writable.
enum IgStatus ig_run_test(const struct IgTest *test,
                          const struct IgSpec *sut,
                          enum IgRegime regime,
                          uint64_t seed,
                          bool complete,
                          enum IgVerdict *verdict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IOCO_GAMES_H */
