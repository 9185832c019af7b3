#ifndef QUMERA_H
#define QUMERA_H

#include <stddef.h>
#include <stdint.h>

#if defined(QUMERA_BUILDING_LIBRARY)
#define QUMERA_API __attribute__((visibility("default")))
#else
#define QUMERA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qumera_status {
  QUMERA_OK = 0,
  QUMERA_INVALID_ARGUMENT = 1,
  QUMERA_PARSE = 2,
  QUMERA_VALIDATION = 3,
  QUMERA_NOT_MIXING = 4,
  QUMERA_DOMAIN = 5,
  QUMERA_RESOURCE = 6,
  QUMERA_CONVERGENCE = 7,
  QUMERA_IO = 8,
  QUMERA_INTERNAL = 9
} qumera_status;

/* A finite or scale-invariant network. */
typedef struct qumera_network qumera_network;

QUMERA_API const char* qumera_version(void);

/* Message of the last failed call on this thread ("" when none). */
QUMERA_API const char* qumera_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
QUMERA_API void qumera_string_free(char* s);

QUMERA_API const char* qumera_status_name(qumera_status status);

/* Caps internal parallelism (BLAS threads). n >= 1. */
QUMERA_API qumera_status qumera_set_threads(int n);

/* ---- networks ------------------------------------------------------------ */

QUMERA_API qumera_status qumera_network_parse(const char* manifest_json, qumera_network** out);
/* require_valid != 0 rejects networks violating the contraction rules. */
QUMERA_API qumera_status qumera_network_load(const char* path, int require_valid, qumera_network** out);
QUMERA_API qumera_status qumera_network_save(const qumera_network* net, const char* path);
QUMERA_API qumera_status qumera_network_serialize(const qumera_network* net, char** out_json);

QUMERA_API qumera_status qumera_network_random_finite(int n, size_t D, uint64_t seed, qumera_network** out);
QUMERA_API qumera_status qumera_network_random_scale_invariant(size_t D, uint64_t seed, qumera_network** out);

QUMERA_API void qumera_network_free(qumera_network* net);

/* is_finite: 1 for finite networks; n is 0 for scale-invariant ones. */
QUMERA_API qumera_status qumera_network_info(const qumera_network* net, int* is_finite, size_t* D, int* n);
QUMERA_API qumera_status qumera_network_validate(const qumera_network* net, int* valid, double* max_deviation);

/* ---- evaluation -------------------------------------------------------------
 * Operators are dense row-major complex matrices given as interleaved
 * (re, im) doubles; dim is D (one site, window middle) or D^3.
 */

/* Expectation on the window (j-1, j, j+1) of a finite network. */
QUMERA_API qumera_status qumera_local_expectation(const qumera_network* net, const double* op, size_t dim, int64_t j,
                                                  double* re, double* im);

/* Tr[rho_T op] with rho_T the fixed point of the R channel of a
 * scale-invariant network. */
QUMERA_API qumera_status qumera_thermo_expectation(const qumera_network* net, const double* op, size_t dim,
                                                   double* re, double* im);

/* Filtered subleading modulus for op; *defined = 0 when no subleading mode
 * overlaps. */
QUMERA_API qumera_status qumera_filtered_kappa(const qumera_network* net, const double* op, size_t dim, double tol,
                                               int* defined, double* kappa);

/* ---- commands ---------------------------------------------------------------
 * Runs validate, observe, spectrum, exponent, optimize, oracle or generate
 * with a JSON options object and returns the ResultRecord. exit_code gets
 * 0 (success), 1 (domain failure) or 2 (usage or parse error). The status
 * is QUMERA_OK whenever a record was produced.
 */
QUMERA_API qumera_status qumera_run_command(const char* command, const char* options_json, char** record_json,
                                            int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
