#include "dcl/sync_solvers.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dcl/error.hpp"

namespace dcl::solvers {

namespace {

void check_shapes(const SolverState& state, const ProblemInstance& prob, const Topology& topo) {
  const int n = topo.agents();
  const int m = topo.edge_count();
  if (prob.agents() != n) {
    fail(ErrorCode::DimensionMismatch,
         "problem has " + std::to_string(prob.agents()) + " agents, network has " + std::to_string(n));
  }
  if (state.X.rows() != n || state.X.cols() != prob.p) {
    fail(ErrorCode::DimensionMismatch, "X must be n x p");
  }
  if (state.Y.rows() != m || state.Y.cols() != prob.p) {
    fail(ErrorCode::DimensionMismatch, "Y must be m x p");
  }
}

// Squared M-norm of a stacked difference (dX; dY) with M = G / alpha, without
// forming G: ||dX||^2 + ||dY||^2 + 2 <V dX, dY>.
double m_norm_squared(const Mat& dX, const Mat& dY, const Mat& V, double alpha) {
  double cross = 0.0;
  if (V.rows() > 0) cross = (V * dX).cwiseProduct(dY).sum();
  return (dX.squaredNorm() + dY.squaredNorm() + 2.0 * cross) / alpha;
}

}  // namespace

SolverState SolverState::zeros(int n, int m, int p) {
  return SolverState{Mat::Zero(n, p), Mat::Zero(m, p), 0};
}

Mat SolverState::stacked() const {
  Mat Z(X.rows() + Y.rows(), X.cols());
  Z << X, Y;
  return Z;
}

StepSizeConfig StepSizeConfig::global(double alpha) {
  if (!(alpha > 0.0)) fail(ErrorCode::NonPositiveScale, "alpha must be positive");
  StepSizeConfig cfg;
  cfg.mode = Mode::Global;
  cfg.alpha = alpha;
  return cfg;
}

StepSizeConfig StepSizeConfig::local(Vec alphas, double gamma) {
  if (alphas.size() == 0 || !(alphas.minCoeff() > 0.0)) fail(ErrorCode::NonPositiveScale, "local steps must be positive");
  StepSizeConfig cfg;
  cfg.mode = Mode::Local;
  cfg.alphas = std::move(alphas);
  cfg.gamma = gamma;
  cfg.alpha = cfg.alphas.maxCoeff();
  return cfg;
}

double StepSizeConfig::alpha_of(int agent) const {
  return mode == Mode::Global ? alpha : alphas(agent);
}

double StepSizeConfig::metric_alpha() const { return mode == Mode::Global ? alpha : alphas.maxCoeff(); }

Vec agent_primal_candidate(int agent, const Mat& X, const Mat& Y, const ProblemInstance& prob, const Topology& topo,
                           double alpha) {
  const auto& obj = prob.objective(agent);
  Vec acc = Vec::Zero(prob.p);
  for (int j : topo.net.neighbors(agent)) acc += topo.W(agent, j) * X.row(j).transpose();
  if (obj.lipschitz() > 0.0) acc -= alpha * obj.gradient(X.row(agent).transpose());
  const Mat& V = topo.V();
  for (int e : topo.net.incident_edges(agent)) acc -= V(e, agent) * Y.row(e).transpose();
  return obj.prox(acc, alpha);
}

Vec edge_dual_candidate(int edge, const Mat& X, const Mat& Y, const Topology& topo) {
  const auto [i, j] = topo.net.edge(edge);
  const Mat& V = topo.V();
  return Y.row(edge).transpose() + V(edge, i) * X.row(i).transpose() + V(edge, j) * X.row(j).transpose();
}

Vec agent_dgd_candidate(int agent, const Mat& X, const ProblemInstance& prob, const Topology& topo, double alpha) {
  const auto& obj = prob.objective(agent);
  Vec acc = Vec::Zero(prob.p);
  for (int j : topo.net.neighbors(agent)) acc += topo.W(agent, j) * X.row(j).transpose();
  if (obj.lipschitz() > 0.0) acc -= alpha * obj.gradient(X.row(agent).transpose());
  return obj.prox(acc, alpha);
}

SolverState pg_extra_step(const SolverState& state, const ProblemInstance& prob, const Topology& topo,
                          const StepSizeConfig& cfg) {
  check_shapes(state, prob, topo);
  SolverState next{Mat(state.X.rows(), state.X.cols()), Mat(state.Y.rows(), state.Y.cols()), state.k + 1};
  for (int i = 0; i < topo.agents(); ++i) {
    next.X.row(i) = agent_primal_candidate(i, state.X, state.Y, prob, topo, cfg.alpha_of(i)).transpose();
  }
  for (int e = 0; e < topo.edge_count(); ++e) {
    next.Y.row(e) = edge_dual_candidate(e, state.X, state.Y, topo).transpose();
  }
  return next;
}

SolverState pg_extra_step_primal_dual_form(const SolverState& state, const ProblemInstance& prob,
                                           const Topology& topo, double alpha) {
  check_shapes(state, prob, topo);
  const Mat& V = topo.V();
  SolverState next;
  next.k = state.k + 1;
  next.Y = state.Y + V * state.X;
  Mat grad(state.X.rows(), state.X.cols());
  for (int i = 0; i < topo.agents(); ++i) {
    grad.row(i) = prob.objective(i).gradient(state.X.row(i).transpose()).transpose();
  }
  const Mat arg = state.X - alpha * grad - V.transpose() * (2.0 * next.Y - state.Y);
  next.X.resize(state.X.rows(), state.X.cols());
  for (int i = 0; i < topo.agents(); ++i) {
    next.X.row(i) = prob.objective(i).prox(arg.row(i).transpose(), alpha).transpose();
  }
  return next;
}

Mat prox_dgd_step(const Mat& X, const ProblemInstance& prob, const Topology& topo, double alpha) {
  if (!(alpha > 0.0)) fail(ErrorCode::NonPositiveScale, "alpha must be positive");
  if (X.rows() != topo.agents() || X.cols() != prob.p || prob.agents() != topo.agents()) {
    fail(ErrorCode::DimensionMismatch, "prox-DGD: X must be n x p");
  }
  Mat next(X.rows(), X.cols());
  for (int i = 0; i < topo.agents(); ++i) next.row(i) = agent_dgd_candidate(i, X, prob, topo, alpha).transpose();
  return next;
}

double max_global_alpha(const graph::SpectralData& spec, const ProblemInstance& prob) {
  const double L = prob.lipschitz();
  if (!(L > 0.0)) fail(ErrorCode::ZeroLipschitz, "L = 0: any positive alpha satisfies the bound");
  return 2.0 * spec.rho_min / L;
}

Vec local_alphas(const ProblemInstance& prob, const Mat& W, double gamma) {
  if (!(gamma > 0.0 && gamma < 2.0)) {
    fail(ErrorCode::GammaOutOfRange, "gamma must lie in (0, 2), got " + std::to_string(gamma));
  }
  if (W.rows() != prob.agents()) fail(ErrorCode::DimensionMismatch, "W does not match the agent count");
  Vec out(prob.agents());
  for (int i = 0; i < prob.agents(); ++i) {
    out(i) = 1.0 / (prob.objective(i).lipschitz() / gamma + 1.0 - W(i, i));
  }
  return out;
}

std::optional<std::string> step_size_warning(const StepSizeConfig& cfg, const Topology& topo,
                                             const ProblemInstance& prob) {
  if (cfg.mode == StepSizeConfig::Mode::Local) {
    if (!(cfg.gamma > 0.0 && cfg.gamma < 2.0)) return "local step rule used with gamma outside (0, 2)";
    return std::nullopt;
  }
  const double L = prob.lipschitz();
  if (L <= 0.0) return std::nullopt;
  const double bound = 2.0 * topo.spectrum.rho_min / L;
  if (cfg.alpha >= bound) {
    std::ostringstream msg;
    msg << "alpha = " << cfg.alpha << " is not below 2 rho_min / L = " << bound
        << "; convergence is not guaranteed";
    return msg.str();
  }
  return std::nullopt;
}

double m_norm_distance(const SolverState& state, const SolverState& ref, const Topology& topo, double alpha) {
  if (!(alpha > 0.0)) fail(ErrorCode::NonPositiveScale, "alpha must be positive");
  if (state.X.rows() != ref.X.rows() || state.X.cols() != ref.X.cols() || state.Y.rows() != ref.Y.rows() ||
      state.Y.cols() != ref.Y.cols()) {
    fail(ErrorCode::DimensionMismatch, "states differ in shape");
  }
  const double sq = m_norm_squared(state.X - ref.X, state.Y - ref.Y, topo.V(), alpha);
  return std::sqrt(std::max(0.0, sq));
}

double fixed_point_residual(const SolverState& state, const ProblemInstance& prob, const Topology& topo,
                            const StepSizeConfig& cfg) {
  const SolverState next = pg_extra_step(state, prob, topo, cfg);
  const double sq = m_norm_squared(state.X - next.X, state.Y - next.Y, topo.V(), cfg.metric_alpha());
  return std::sqrt(std::max(0.0, sq));
}

double dgd_residual(const Mat& X, const ProblemInstance& prob, const Topology& topo, double alpha) {
  return (X - prox_dgd_step(X, prob, topo, alpha)).norm() / std::sqrt(alpha);
}

SolverState run_pg_extra(SolverState start, const ProblemInstance& prob, const Topology& topo,
                         const StepSizeConfig& cfg, long iterations, const TrajectoryHook& hook, long record_every) {
  if (record_every < 1) record_every = 1;
  if (hook) hook(start.k, start);
  for (long it = 0; it < iterations; ++it) {
    start = pg_extra_step(start, prob, topo, cfg);
    if (hook && ((it + 1) % record_every == 0 || it + 1 == iterations)) hook(start.k, start);
  }
  return start;
}

double default_reference_alpha(const ProblemInstance& prob, const Topology& topo) {
  const double L = prob.lipschitz();
  return L > 0.0 ? 0.9 * 2.0 * topo.spectrum.rho_min / L : 1.0;
}

ReferenceSolution solve_reference(const ProblemInstance& prob, const Topology& topo, double tol, long max_iters,
                                  std::optional<double> alpha) {
  if (!(tol > 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be positive");
  const double step = alpha.value_or(default_reference_alpha(prob, topo));
  const auto cfg = StepSizeConfig::global(step);
  if (auto msg = step_size_warning(cfg, topo, prob)) warn("solve_reference: " + *msg);

  SolverState state = SolverState::zeros(topo.agents(), topo.edge_count(), prob.p);
  check_shapes(state, prob, topo);
  double residual = std::numeric_limits<double>::infinity();
  long it = 0;
  for (; it < max_iters; ++it) {
    SolverState next = pg_extra_step(state, prob, topo, cfg);
    // Z^k - Z^{k+1} = Z^k - T Z^k, so the step length is the residual of Z^k.
    residual = std::sqrt(std::max(0.0, m_norm_squared(state.X - next.X, state.Y - next.Y, topo.V(), step)));
    if (!std::isfinite(residual)) fail(ErrorCode::NoConvergence, "iterates diverged");
    if (residual < tol) break;
    state = std::move(next);
  }
  if (!(residual < tol)) {
    fail(ErrorCode::NoConvergence, "residual " + std::to_string(residual) + " after " + std::to_string(max_iters) +
                                       " iterations");
  }
  ReferenceSolution out;
  out.x = state.X.colwise().mean().transpose();
  out.consensus_spread = (state.X.rowwise() - out.x.transpose()).cwiseAbs().maxCoeff();
  out.state = std::move(state);
  out.residual = residual;
  out.iterations = it;
  out.alpha = step;
  return out;
}

}  // namespace dcl::solvers
