#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dcl/async_engine.hpp"
#include "dcl/graph_topology.hpp"

namespace dcl::mc {

using problems::Mat;
using problems::Vec;

// A = [A_1, ..., A_n] split into equal column blocks, one per agent. `mask`
// holds 1 for observed entries and 0 otherwise.
struct McData {
  Mat A;
  Mat mask;
  int rank = 0;
  int block_cols = 0;  // K_i
  graph::NetworkSpec net;

  int agents() const { return net.agents(); }
  Mat block(int i) const { return A.middleCols(i * block_cols, block_cols); }
  Mat block_mask(int i) const { return mask.middleCols(i * block_cols, block_cols); }
};

struct McShape {
  int rows = 40;
  int cols = 140;
  int rank = 4;
  int agents = 20;
  double observed = 0.8;
};

// A = E D F^T with standard normal E, F and diagonal D; entries observed when
// a U(0, 1) draw falls below `observed`. The network is a random geometric
// graph on `agents` nodes.
McData mc_generate(std::uint64_t seed, const McShape& shape = {});

struct MatrixCompletionState {
  std::vector<Mat> X;  // per agent, N x r
  std::vector<Mat> Y;  // per agent, r x K_i
  std::vector<Mat> Z;  // per agent, N x K_i
  std::vector<Mat> Q;  // per edge, N x r
  long k = 0;
};

// Random X, Y, Z with Z matching A on the observed entries.
MatrixCompletionState mc_initialize(const McData& data, const graph::Topology& topo, std::uint64_t seed);

// One consensus step on X, Q (Jacobi over agents):
//   X^i <- (sum_j w_ij X^j - sum_e v_ei Q^e + alpha Z^i Y^i^T) / (alpha + 1)
//   Q^e <- Q^e + v_ei X^i + v_ej X^j   (old X)
void mc_step2_prime(MatrixCompletionState& state, const graph::Topology& topo, double alpha);

/// Least-squares Y = argmin ||X Y - Z||_F. Rank-deficient X falls back to a
/// 1e-12 ridge and warns.
Mat mc_step3(const Mat& X, const Mat& Z);

/// X Y + P_mask(A - X Y).
Mat mc_step4(const Mat& X, const Mat& Y, const Mat& A, const Mat& mask);

// Steps 2', 3 and 4 for every agent.
void mc_iteration(MatrixCompletionState& state, const McData& data, const graph::Topology& topo, double alpha);

/// ||[Z^1 ... Z^n] - A||_F.
double mc_distance(const MatrixCompletionState& state, const McData& data);

// Flattening between per-agent N x r blocks and engine rows (row-major).
Vec flatten(const Mat& M);
Mat unflatten(const Vec& v, int rows, int cols);

// Engine rule: relaxed Step 2' from the agent's view, then Steps 3 and 4 on
// its private factors. X^i and Q^e live flattened in the engine state.
class MatrixCompletionRule final : public async::UpdateRule {
 public:
  MatrixCompletionRule(const McData& data, const graph::Topology& topo, double alpha, MatrixCompletionState init);
  MatrixCompletionRule(const MatrixCompletionRule&) = delete;
  MatrixCompletionRule& operator=(const MatrixCompletionRule&) = delete;

  bool uses_duals() const override { return true; }
  void apply(int agent, const Mat& snapX, const Mat& snapY, double eta, solvers::SolverState& state) override;
  double residual(const solvers::SolverState& state) const override;

  // Engine state holding the flattened X^i and Q^e of `init`.
  solvers::SolverState engine_state() const;
  const MatrixCompletionState& private_state() const { return priv_; }
  // ||Z - A||_F / ||Z^0 - A||_F.
  double relative_error() const;
  int row_width() const;

 private:
  void refresh_target(int agent);

  const McData* data_;
  const graph::Topology* topo_;
  double alpha_;
  MatrixCompletionState priv_;
  double initial_distance_;
  problems::ProblemInstance prob_;
  async::PrimalDualRule pd_;
};

}  // namespace dcl::mc
