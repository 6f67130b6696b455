#include "dcl/matrix_completion.hpp"

#include <cmath>
#include <string>

#include "dcl/error.hpp"
#include "dcl/rng.hpp"

namespace dcl::mc {

namespace {

Mat normal_matrix(Rng& rng, int rows, int cols) {
  Mat M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) M(r, c) = rng.normal();
  }
  return M;
}

void require_shape(const Mat& M, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (M.rows() != rows || M.cols() != cols) {
    fail(ErrorCode::DimensionMismatch, std::string(what) + ": expected " + std::to_string(rows) + "x" +
                                           std::to_string(cols) + ", got " + std::to_string(M.rows()) + "x" +
                                           std::to_string(M.cols()));
  }
}

}  // namespace

McData mc_generate(std::uint64_t seed, const McShape& shape) {
  if (shape.rows < 1 || shape.rank < 1 || shape.agents < 1 || shape.cols % shape.agents != 0) {
    fail(ErrorCode::InvalidArgument, "columns must split evenly across agents");
  }
  Rng rng(seed, "matcomp-data");
  const Mat E = normal_matrix(rng, shape.rows, shape.rank);
  const Mat F = normal_matrix(rng, shape.cols, shape.rank);
  Vec d(shape.rank);
  for (int i = 0; i < shape.rank; ++i) d(i) = rng.normal();
  Mat A = E * d.asDiagonal() * F.transpose();

  Rng mask_rng(seed, "matcomp-mask");
  Mat mask(shape.rows, shape.cols);
  for (int r = 0; r < shape.rows; ++r) {
    for (int c = 0; c < shape.cols; ++c) mask(r, c) = mask_rng.uniform() < shape.observed ? 1.0 : 0.0;
  }
  auto net = graph::generate_geometric_network(shape.agents, 30.0, 15.0, seed);
  return McData{std::move(A), std::move(mask), shape.rank, shape.cols / shape.agents, std::move(net)};
}

MatrixCompletionState mc_initialize(const McData& data, const graph::Topology& topo, std::uint64_t seed) {
  const int n = data.agents();
  const int N = static_cast<int>(data.A.rows());
  Rng rng(seed, "matcomp-init");
  MatrixCompletionState s;
  for (int i = 0; i < n; ++i) {
    s.X.push_back(normal_matrix(rng, N, data.rank));
    s.Y.push_back(normal_matrix(rng, data.rank, data.block_cols));
    Mat Z = normal_matrix(rng, N, data.block_cols);
    const Mat Ai = data.block(i);
    const Mat Mi = data.block_mask(i);
    Z = (Mi.array() > 0.0).select(Ai, Z);
    s.Z.push_back(std::move(Z));
  }
  s.Q.assign(static_cast<std::size_t>(topo.edge_count()), Mat::Zero(N, data.rank));
  return s;
}

void mc_step2_prime(MatrixCompletionState& state, const graph::Topology& topo, double alpha) {
  if (!(alpha > 0.0)) fail(ErrorCode::NonPositiveScale, "alpha must be positive");
  const int n = topo.agents();
  if (static_cast<int>(state.X.size()) != n || static_cast<int>(state.Q.size()) != topo.edge_count()) {
    fail(ErrorCode::DimensionMismatch, "state does not match the network");
  }
  const Mat& V = topo.V();
  std::vector<Mat> X_next(state.X.size());
  for (int i = 0; i < n; ++i) {
    require_shape(state.Z[i], state.X[i].rows(), state.Y[i].cols(), "Z");
    Mat acc = alpha * state.Z[i] * state.Y[i].transpose();
    require_shape(acc, state.X[i].rows(), state.X[i].cols(), "Z Y^T");
    for (int j : topo.net.neighbors(i)) acc += topo.W(i, j) * state.X[j];
    for (int e : topo.net.incident_edges(i)) acc -= V(e, i) * state.Q[e];
    X_next[i] = acc / (alpha + 1.0);
  }
  for (int e = 0; e < topo.edge_count(); ++e) {
    const auto [i, j] = topo.net.edge(e);
    state.Q[e] += V(e, i) * state.X[i] + V(e, j) * state.X[j];
  }
  state.X = std::move(X_next);
}

Mat mc_step3(const Mat& X, const Mat& Z) {
  if (X.rows() != Z.rows()) fail(ErrorCode::DimensionMismatch, "X and Z must have the same row count");
  Eigen::ColPivHouseholderQR<Mat> qr(X);
  if (qr.rank() == X.cols()) return qr.solve(Z);
  warn("least-squares factor update: X is rank deficient, using a 1e-12 ridge");
  const Mat gram = X.transpose() * X + 1e-12 * Mat::Identity(X.cols(), X.cols());
  return gram.ldlt().solve(X.transpose() * Z);
}

Mat mc_step4(const Mat& X, const Mat& Y, const Mat& A, const Mat& mask) {
  if (X.cols() != Y.rows()) fail(ErrorCode::DimensionMismatch, "X and Y are not conformable");
  require_shape(A, X.rows(), Y.cols(), "A block");
  require_shape(mask, A.rows(), A.cols(), "mask");
  const Mat XY = X * Y;
  return (mask.array() > 0.0).select(A, XY);
}

void mc_iteration(MatrixCompletionState& state, const McData& data, const graph::Topology& topo, double alpha) {
  mc_step2_prime(state, topo, alpha);
  for (int i = 0; i < data.agents(); ++i) {
    state.Y[i] = mc_step3(state.X[i], state.Z[i]);
    state.Z[i] = mc_step4(state.X[i], state.Y[i], data.block(i), data.block_mask(i));
  }
  ++state.k;
}

double mc_distance(const MatrixCompletionState& state, const McData& data) {
  double sq = 0.0;
  for (int i = 0; i < data.agents(); ++i) sq += (state.Z[i] - data.block(i)).squaredNorm();
  return std::sqrt(sq);
}

Vec flatten(const Mat& M) {
  Vec v(M.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), M.rows(), M.cols()) = M;
  return v;
}

Mat unflatten(const Vec& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols) fail(ErrorCode::DimensionMismatch, "unflatten: size");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), rows,
                                                                                                   cols);
}

// ---------------------------------------------------------------------------

MatrixCompletionRule::MatrixCompletionRule(const McData& data, const graph::Topology& topo, double alpha,
                                           MatrixCompletionState init)
    : data_(&data),
      topo_(&topo),
      alpha_(alpha),
      priv_(std::move(init)),
      initial_distance_(mc_distance(priv_, data)),
      prob_(),
      pd_(prob_, topo, solvers::StepSizeConfig::global(alpha)) {
  if (data.agents() != topo.agents()) fail(ErrorCode::DimensionMismatch, "data and network disagree on n");
  if (!(initial_distance_ > 1e-15)) fail(ErrorCode::DegenerateStart, "initial Z already equals A");
  prob_.p = row_width();
  for (int i = 0; i < data.agents(); ++i) {
    prob_.objectives.push_back(std::make_shared<problems::QuadraticProximity>(Vec::Zero(prob_.p)));
    refresh_target(i);
  }
}

int MatrixCompletionRule::row_width() const { return static_cast<int>(data_->A.rows()) * data_->rank; }

void MatrixCompletionRule::refresh_target(int agent) {
  prob_.objectives[static_cast<std::size_t>(agent)] =
      std::make_shared<problems::QuadraticProximity>(flatten(priv_.Z[agent] * priv_.Y[agent].transpose()));
}

solvers::SolverState MatrixCompletionRule::engine_state() const {
  auto s = solvers::SolverState::zeros(topo_->agents(), topo_->edge_count(), row_width());
  for (int i = 0; i < topo_->agents(); ++i) s.X.row(i) = flatten(priv_.X[i]).transpose();
  for (int e = 0; e < topo_->edge_count(); ++e) s.Y.row(e) = flatten(priv_.Q[e]).transpose();
  return s;
}

void MatrixCompletionRule::apply(int agent, const Mat& snapX, const Mat& snapY, double eta,
                                 solvers::SolverState& state) {
  pd_.apply(agent, snapX, snapY, eta, state);
  const int N = static_cast<int>(data_->A.rows());
  Mat& X = priv_.X[agent];
  X = unflatten(state.X.row(agent).transpose(), N, data_->rank);
  for (int e : topo_->net.owned_edges(agent)) priv_.Q[e] = unflatten(state.Y.row(e).transpose(), N, data_->rank);
  priv_.Y[agent] = mc_step3(X, priv_.Z[agent]);
  priv_.Z[agent] = mc_step4(X, priv_.Y[agent], data_->block(agent), data_->block_mask(agent));
  refresh_target(agent);
}

double MatrixCompletionRule::residual(const solvers::SolverState& state) const {
  return solvers::fixed_point_residual(state, prob_, *topo_, solvers::StepSizeConfig::global(alpha_));
}

double MatrixCompletionRule::relative_error() const { return mc_distance(priv_, *data_) / initial_distance_; }

}  // namespace dcl::mc
