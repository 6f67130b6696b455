/* C interface to the decentralized consensus library.
 *
 * Every call returns a dcl_status; on failure dcl_last_error() describes the
 * problem (per thread, valid until the next failing call). Handles are opaque
 * and released with the matching *_free function. Matrices are row-major.
 */
#ifndef DCL_H
#define DCL_H

#include <stddef.h>
#include <stdint.h>

#if defined(DCL_BUILDING_LIBRARY)
#define DCL_API __attribute__((visibility("default")))
#else
#define DCL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dcl_status {
  DCL_OK = 0,
  DCL_INVALID_ARGUMENT,
  DCL_CONNECTIVITY_FAILURE,
  DCL_FACTORIZATION_MISMATCH,
  DCL_NOT_POSITIVE_DEFINITE,
  DCL_DIMENSION_MISMATCH,
  DCL_NON_POSITIVE_SCALE,
  DCL_ZERO_LIPSCHITZ,
  DCL_GAMMA_OUT_OF_RANGE,
  DCL_NO_CONVERGENCE,
  DCL_NON_POSITIVE_MEAN,
  DCL_DEGENERATE_PROBABILITY,
  DCL_HORIZON_ZERO,
  DCL_DEGENERATE_START,
  DCL_IO_ERROR,
  DCL_INTERNAL_ERROR
} dcl_status;

DCL_API const char* dcl_last_error(void);
DCL_API const char* dcl_status_name(dcl_status status);
/* Step-size and rank warnings go to stderr unless disabled. */
DCL_API void dcl_set_warnings(int enabled);

/* ---- networks ---------------------------------------------------------- */

typedef struct dcl_network dcl_network;

typedef struct dcl_spectrum {
  double lambda_min_w;
  double rho_min;
  double lambda_max_g;
  double kappa;
} dcl_spectrum;

/* Random geometric network, redrawn until connected. */
DCL_API dcl_status dcl_network_generate(int n, double area_side, double radius, uint64_t seed, dcl_network** out);
/* `edges` holds m pairs (i, j) of 0-based agent indices. */
DCL_API dcl_status dcl_network_create(int n, const int* edges, int m, dcl_network** out);
DCL_API dcl_status dcl_network_from_json(const char* json, dcl_network** out);
/* Writes at most `cap` bytes including the terminator; `needed` receives the
 * full size. Pass buf = NULL to query the size. */
DCL_API dcl_status dcl_network_to_json(const dcl_network* net, char* buf, size_t cap, size_t* needed);
DCL_API void dcl_network_free(dcl_network* net);

DCL_API int dcl_network_agents(const dcl_network* net);
DCL_API int dcl_network_edge_count(const dcl_network* net);
/* 2m ints. */
DCL_API dcl_status dcl_network_edges(const dcl_network* net, int* out);
/* n x n mixing matrix. */
DCL_API dcl_status dcl_network_weights(const dcl_network* net, double* out);
/* m x n scaled incidence V. */
DCL_API dcl_status dcl_network_scaled_incidence(const dcl_network* net, double* out);
DCL_API dcl_status dcl_network_spectrum(const dcl_network* net, dcl_spectrum* out);

/* ---- scalar helpers ---------------------------------------------------- */

DCL_API dcl_status dcl_predicted_q(const double* means, int n, double* q_out);
DCL_API dcl_status dcl_relaxation_parameters(const double* q, int n, double eta, double* eta_out);
DCL_API double dcl_eta_max_bound(int n, double q_min, double kappa, long tau);
DCL_API dcl_status dcl_prox_l1(const double* u, int p, double lam, double* out);
DCL_API dcl_status dcl_prox_l2norm(const double* u, const double* b, int p, double lam, double* out);
/* Exponential compute (means per agent) and communication times. */
DCL_API dcl_status dcl_throughput_ratio(const dcl_network* net, const double* compute_means, double comm_mean,
                                        double horizon_ms, uint64_t seed, double* ratio);

/* ---- experiments ------------------------------------------------------- */

typedef struct dcl_experiment dcl_experiment;

typedef struct dcl_bounds {
  int agents;
  int edges;
  double rho_min;
  double kappa;
  double lipschitz;
  double alpha_bound; /* +inf when L = 0 */
  double q_min;
  long observed_tau;
  double eta_max;
} dcl_bounds;

/* kind: "cs", "logistic", "matcomp" or "geomedian". */
DCL_API dcl_status dcl_experiment_create(const char* kind, uint64_t seed, dcl_experiment** out);
DCL_API void dcl_experiment_free(dcl_experiment* exp);
/* Comma-separated subset of pg-extra, async-pd, prox-dgd, async-prox-dgd. */
DCL_API dcl_status dcl_experiment_set_algorithms(dcl_experiment* exp, const char* list);
DCL_API dcl_status dcl_experiment_set_horizon(dcl_experiment* exp, double horizon_ms);
DCL_API dcl_status dcl_experiment_set_alpha(dcl_experiment* exp, double alpha);
DCL_API dcl_status dcl_experiment_set_eta(dcl_experiment* exp, double eta);
DCL_API dcl_status dcl_experiment_set_record_every(dcl_experiment* exp, long every);
/* Writes the trajectory CSV to `out_path` ("-" for stdout). The reference
 * solution is cached next to the output file. */
DCL_API dcl_status dcl_experiment_run(dcl_experiment* exp, const char* out_path);
/* Fills `out`; if q_out is not NULL it receives up to q_cap activation
 * probabilities. */
DCL_API dcl_status dcl_experiment_bounds(dcl_experiment* exp, dcl_bounds* out, double* q_out, int q_cap);

#ifdef __cplusplus
}
#endif

#endif
