#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "dcl/composite_problems.hpp"
#include "dcl/graph_topology.hpp"

namespace dcl::solvers {

using problems::Mat;
using problems::Vec;
using problems::ProblemInstance;
using graph::Topology;

// Z = [X; Y]: row i of X is agent i's primal copy, row e of Y the dual of edge e.
struct SolverState {
  Mat X;  // n x p
  Mat Y;  // m x p
  long k = 0;

  static SolverState zeros(int n, int m, int p);
  /// The stacked (n + m) x p matrix Z.
  Mat stacked() const;
};

struct StepSizeConfig {
  enum class Mode { Global, Local };

  Mode mode = Mode::Global;
  double alpha = 1.0;   // global step
  Vec alphas;           // per-agent steps (local mode)
  double gamma = 1.0;   // parameter of the local rule, 0 < gamma < 2

  static StepSizeConfig global(double alpha);
  static StepSizeConfig local(Vec alphas, double gamma);

  double alpha_of(int agent) const;
  // Step used to build the metric M = G / alpha. Local mode uses the largest
  // per-agent step.
  double metric_alpha() const;
};

// Agent i's primal candidate:
//   prox_{alpha r_i}( sum_{j in N_i} w_ij x^j - alpha grad s_i(x^i) - sum_{e in E_i} v_ei y^e )
// Reads only rows N_i of X and rows E_i of Y, so the same routine serves the
// synchronous step and an asynchronous agent working on its local copies.
Vec agent_primal_candidate(int agent, const Mat& X, const Mat& Y, const ProblemInstance& prob,
                           const Topology& topo, double alpha);

// y^e + v_ei x^i + v_ej x^j for edge e = (i, j).
Vec edge_dual_candidate(int edge, const Mat& X, const Mat& Y, const Topology& topo);

// Same as agent_primal_candidate with the dual term dropped (prox-DGD).
Vec agent_dgd_candidate(int agent, const Mat& X, const ProblemInstance& prob, const Topology& topo, double alpha);

// One synchronous PG-EXTRA iteration in per-agent form. Throws
// DimensionMismatch when shapes disagree; never refuses a step size.
SolverState pg_extra_step(const SolverState& state, const ProblemInstance& prob, const Topology& topo,
                          const StepSizeConfig& cfg);

// The same iteration in its stacked primal-dual form
//   Y+ = Y + V X,  X+ = prox(X - alpha grad s(X) - V^T (2 Y+ - Y)).
// Global step only; used to cross-check pg_extra_step.
SolverState pg_extra_step_primal_dual_form(const SolverState& state, const ProblemInstance& prob,
                                           const Topology& topo, double alpha);

// x^i <- prox_{alpha r_i}( sum_j w_ij x^j - alpha grad s_i(x^i) ).
Mat prox_dgd_step(const Mat& X, const ProblemInstance& prob, const Topology& topo, double alpha);

/// 2 rho_min / L. Throws ZeroLipschitz when every s_i is affine-free (L = 0).
double max_global_alpha(const graph::SpectralData& spec, const ProblemInstance& prob);

/// alpha_i = 1 / (L_i / gamma + 1 - w_ii). Throws GammaOutOfRange outside (0, 2).
Vec local_alphas(const ProblemInstance& prob, const Mat& W, double gamma);

// Message describing a step size outside the proven range, if any.
std::optional<std::string> step_size_warning(const StepSizeConfig& cfg, const Topology& topo,
                                             const ProblemInstance& prob);

/// sqrt(trace((Z - Zref)^T (G / alpha) (Z - Zref))).
double m_norm_distance(const SolverState& state, const SolverState& ref, const Topology& topo, double alpha);

/// ||Z - T Z||_M with T one synchronous PG-EXTRA iteration and M = G / alpha.
double fixed_point_residual(const SolverState& state, const ProblemInstance& prob, const Topology& topo,
                            const StepSizeConfig& cfg);

/// ||X - T_dgd X||_F / sqrt(alpha), the analogous quantity for prox-DGD.
double dgd_residual(const Mat& X, const ProblemInstance& prob, const Topology& topo, double alpha);

using TrajectoryHook = std::function<void(long k, const SolverState& state)>;

// Runs `iterations` synchronous steps, calling `hook` at k = 0 and every
// `record_every` iterations thereafter.
SolverState run_pg_extra(SolverState start, const ProblemInstance& prob, const Topology& topo,
                         const StepSizeConfig& cfg, long iterations, const TrajectoryHook& hook = {},
                         long record_every = 1);

struct ReferenceSolution {
  SolverState state;
  Vec x;                    // consensus point (mean of the rows of X)
  double residual = 0.0;    // final fixed-point residual
  double consensus_spread = 0.0;  // max_i ||x^i - x||_inf
  long iterations = 0;
  double alpha = 0.0;       // step the reference was computed with
};

// Iterates PG-EXTRA from zero until the fixed-point residual drops below
// `tol`. Without an explicit step, uses 0.9 * 2 rho_min / L (or 1 when L = 0).
// Throws NoConvergence after `max_iters`.
ReferenceSolution solve_reference(const ProblemInstance& prob, const Topology& topo, double tol, long max_iters,
                                  std::optional<double> alpha = std::nullopt);

/// Step solve_reference uses when none is given.
double default_reference_alpha(const ProblemInstance& prob, const Topology& topo);

}  // namespace dcl::solvers
