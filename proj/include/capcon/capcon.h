#ifndef CAPCON_H
#define CAPCON_H

/*
 * C interface to the capped-consumption solver.
 *
 * Objects are opaque handles released with the matching *_free call.
 * Every function returns a capcon_status; on failure the message is
 * available from capcon_last_error() on the calling thread until the next
 * call. Strings returned through char** are heap-allocated and must be
 * released with capcon_string_free().
 */

#include <stddef.h>

#if defined(_WIN32)
#  define CAPCON_API __declspec(dllexport)
#else
#  define CAPCON_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum capcon_status {
  CAPCON_OK = 0,
  CAPCON_ERR_INVALID_ARGUMENT = 1,  /* null handle, bad flag value */
  CAPCON_ERR_INVALID_PARAMETER = 2, /* model inputs violate an invariant */
  CAPCON_ERR_ILL_POSED = 3,         /* kappa <= 0, infinite value */
  CAPCON_ERR_UNSUPPORTED = 4,       /* kappa < k + r, or k = 0 < ell */
  CAPCON_ERR_REGIME = 5,
  CAPCON_ERR_DOMAIN = 6,
  CAPCON_ERR_EXTRAPOLATION = 7,
  CAPCON_ERR_NUMERICAL = 8,
  CAPCON_ERR_POLICY_VIOLATION = 9,
  CAPCON_ERR_IO = 10,
  CAPCON_ERR_INTERNAL = 11
} capcon_status;

typedef struct capcon_model capcon_model;
typedef struct capcon_solution capcon_solution;

typedef struct capcon_params {
  double r, mu, sigma, beta, p, k, ell;
} capcon_params;

typedef struct capcon_point {
  double x;
  double v, vx, vxx;
  double c, pi;
  int region;    /* 0 = unconstrained, 1 = consumption at the cap */
  int one_sided; /* vxx is a left limit */
} capcon_point;

typedef struct capcon_sim_config {
  double x0;
  double dt;
  double horizon;
  long long n_paths;
  unsigned long long seed;
  int threads;
} capcon_sim_config;

CAPCON_API const char* capcon_version(void);
CAPCON_API const char* capcon_status_name(capcon_status status);
CAPCON_API const char* capcon_last_error(void);
CAPCON_API void capcon_string_free(char* s);

CAPCON_API capcon_status capcon_model_create(const capcon_params* params,
                                             capcon_model** out);
/* JSON object with keys r, mu, sigma, beta, p, k, ell. */
CAPCON_API capcon_status capcon_model_parse(const char* json,
                                            capcon_model** out);
CAPCON_API capcon_status capcon_model_load(const char* path,
                                           capcon_model** out);
CAPCON_API void capcon_model_free(capcon_model* model);
CAPCON_API capcon_status capcon_model_regime(const capcon_model* model,
                                             const char** name);
/* {"params": ..., "derived": ...} */
CAPCON_API capcon_status capcon_model_json(const capcon_model* model,
                                           char** out);

/* Free boundary by shooting (tol relative to the bracket width, 0 for the
 * default) or the closed form where one exists. */
CAPCON_API capcon_status capcon_solve(const capcon_model* model, double tol,
                                      capcon_solution** out);
CAPCON_API void capcon_solution_free(capcon_solution* solution);
CAPCON_API capcon_status capcon_solution_x_star(const capcon_solution* s,
                                                double* x_star);
/* Solution document with a run manifest naming `command`. */
CAPCON_API capcon_status capcon_solution_json(const capcon_solution* s,
                                              const char* command,
                                              char** out);
CAPCON_API capcon_status capcon_evaluate(const capcon_solution* s, double x,
                                         capcon_point* out);
/* format: 0 = CSV, 1 = JSON. */
CAPCON_API capcon_status capcon_table(const capcon_solution* s, double x_min,
                                      double x_max, int points,
                                      int log_spacing, int format,
                                      const char* command, char** out);

/* policy: "optimal", "merton", "zero", "scaled:<f>" (consumption times f,
 * clamped to the cap) or "pi:<f>" (allocation times f). A comma-separated
 * list runs all of them on common random numbers and reports paired
 * differences against the first. quantiles_csv (first policy) may be NULL. */
CAPCON_API capcon_status capcon_simulate(const capcon_solution* s,
                                         const capcon_sim_config* config,
                                         const char* policy,
                                         const char* command, char** json,
                                         char** quantiles_csv);

/* Runs the invariant suite; *passed is 1 when every check holds.
 * corrupt_x_star perturbs the solved boundary (relative) before checking. */
CAPCON_API capcon_status capcon_verify(const capcon_model* model,
                                       double corrupt_x_star,
                                       const char* command, char** report,
                                       int* passed);

#ifdef __cplusplus
}
#endif

#endif
