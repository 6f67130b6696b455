#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcl/async_engine.hpp"
#include "dcl/csv.hpp"
#include "dcl/graph_topology.hpp"
#include "dcl/sync_solvers.hpp"

namespace dcl::experiments {

using problems::Mat;
using problems::Vec;

enum class ExperimentKind { CompressedSensing, Logistic, MatrixCompletion, GeometricMedian };
enum class AlgorithmKind { PgExtra, AsyncPd, ProxDgd, AsyncProxDgd };

// "cs", "logistic", "matcomp", "geomedian"; InvalidArgument otherwise.
ExperimentKind parse_experiment(std::string_view name);
std::string_view to_string(ExperimentKind kind);
// "pg-extra", "async-pd", "prox-dgd", "async-prox-dgd".
AlgorithmKind parse_algorithm(std::string_view name);
std::string_view to_string(AlgorithmKind algo);
bool is_async(AlgorithmKind algo);

struct Instance {
  graph::Topology topo;
  problems::ProblemInstance prob;
  Vec x_true;  // generating vector where one exists, else empty
};

// 10 agents, 3 x 50 spectrally normalized A_i, 10-sparse x, theta = 0.01.
Instance gen_cs_instance(std::uint64_t seed);
// 10 agents, 3 x 50 features, labels from a 40-of-50 sparse x, theta = 0.1.
Instance gen_logistic_instance(std::uint64_t seed);
// 11 agents in R^4, b_i ~ N(0, diag(U(0, 10))).
Instance gen_geomedian_instance(std::uint64_t seed);
Instance make_instance(ExperimentKind kind, std::uint64_t seed);

/// ||Xk - Xstar||_F / ||X0 - Xstar||_F. Throws DegenerateStart if the
/// denominator is below 1e-15.
double relative_error(const Mat& Xk, const Mat& Xstar, const Mat& X0);

struct AlgorithmDefaults {
  double alpha = 1.0;
  double eta = 1.0;  // global relaxation (async algorithms)
};

AlgorithmDefaults defaults_for(ExperimentKind kind, AlgorithmKind algo);
double default_horizon_ms(ExperimentKind kind);

// Compute/communication means shared by every algorithm of a run.
async::AsyncConfig timing_for(int agents, std::uint64_t seed);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::CompressedSensing;
  std::vector<AlgorithmKind> algorithms;
  std::uint64_t seed = 0;
  double horizon_ms = 0.0;  // 0 = default for the experiment
  long record_every = 10;
  std::optional<double> alpha;  // overrides the per-algorithm default
  std::optional<double> eta;
  // Where the reference solution is cached; no caching when empty.
  std::filesystem::path cache_dir;
};

void validate(const ExperimentConfig& cfg);

// Reference solution X* of a convex instance, read from / written to
// `cache_dir` when given.
solvers::ReferenceSolution reference_for(const Instance& inst, ExperimentKind kind, std::uint64_t seed,
                                         const std::filesystem::path& cache_dir);

// Runs every requested algorithm on the instance built from cfg.seed.
std::vector<TrajectoryRecord> run_experiment(const ExperimentConfig& cfg);

// run_experiment, then writes the CSV to `out` ("-" = stdout). Nothing is
// left at `out` if anything fails.
void run_experiment_to_csv(const ExperimentConfig& cfg, const std::string& out);

struct BoundsReport {
  int agents = 0;
  int edges = 0;
  double rho_min = 0.0;
  double kappa = 0.0;
  double lipschitz = 0.0;
  double alpha_bound = 0.0;  // 2 rho_min / L, +inf when L = 0
  std::vector<double> q;
  long observed_tau = 0;
  double eta_max = 0.0;
};

// Network and step-size constants of the instance, with tau observed from a
// clock-only run over the configured horizon.
BoundsReport compute_bounds(const ExperimentConfig& cfg);

}  // namespace dcl::experiments
