#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "dcl/composite_problems.hpp"
#include "dcl/graph_topology.hpp"
#include "dcl/sync_solvers.hpp"

namespace dcl::async {

using problems::Mat;
using problems::Vec;
using solvers::SolverState;

enum class Algorithm { PrimalDual, ProxDgd };

// Law of a sampled duration with a given mean.
enum class TimingLaw { Exponential, Deterministic };

struct AsyncConfig {
  std::vector<double> compute_means;  // per-agent mean round duration, ms
  double comm_mean = 0.6;             // mean message latency, ms (0 = instant)
  TimingLaw compute_law = TimingLaw::Exponential;
  TimingLaw comm_law = TimingLaw::Exponential;

  double eta = 1.0;                   // global relaxation; eta_i = eta / (n q_i)
  std::optional<Vec> eta_per_agent;   // overrides `eta` when set

  double horizon_ms = 0.0;            // simulated-time budget, 0 = unlimited
  long max_updates = 0;               // update budget, 0 = unlimited
  std::uint64_t seed = 0;
  // Every agent updates once per tick from the tick-start values; a tick
  // costs the slowest compute plus the slowest delivery (the synchronous
  // algorithm with its two barriers).
  bool lockstep = false;
  Algorithm algorithm = Algorithm::PrimalDual;
};

struct TrajectorySample {
  long k = 0;             // completed agent updates
  double time_ms = 0.0;
  double rel_error = 0.0; // NaN when no error metric was supplied
  double residual = 0.0;  // NaN when residuals are disabled
};

// Staleness of the values read by each update, in update counts. Entry k
// describes update k + 1; rows that the agent did not read are 0.
struct DelayTrace {
  std::vector<std::vector<int>> tau;    // n entries per update (if kept)
  std::vector<std::vector<int>> delta;  // m entries per update (if kept)
  long max_tau = 0;                     // max over every tau and delta
};

struct ActivationStats {
  std::vector<long> counts;

  long total() const;
  std::vector<double> empirical_q() const;
};

struct WriteRecord {
  long k = 0;        // update that performed the write
  int agent = 0;
  bool dual = false;
  int row = 0;       // agent index for primal rows, edge index for dual rows
};

struct RunOptions {
  long record_every = 1;
  std::optional<SolverState> initial;  // zeros when absent
  // Relative error of a state; NaN is recorded when unset.
  std::function<double(const SolverState&)> rel_error;
  bool compute_residual = true;
  double stop_rel_error = 0.0;  // stop once rel_error drops below this (0 = off)
  bool keep_delay_vectors = false;
  bool keep_write_log = false;
  std::ostream* event_log = nullptr;  // CSV: time_ms,kind,agent,k
  std::function<void(long k, double time_ms, const SolverState& state)> observer;
};

struct SimulationResult {
  std::vector<TrajectorySample> trajectory;
  DelayTrace delays;
  ActivationStats activations;
  std::vector<WriteRecord> write_log;
  SolverState final_state;
  double end_time_ms = 0.0;
  long updates = 0;
};

// What an agent does when its round finishes. `snapX` / `snapY` hold the
// agent's view (own rows current, neighbor rows as last received); the rule
// writes only the agent's own rows of `state`.
class UpdateRule {
 public:
  virtual ~UpdateRule() = default;

  virtual bool uses_duals() const = 0;
  virtual void apply(int agent, const Mat& snapX, const Mat& snapY, double eta, SolverState& state) = 0;
  virtual double residual(const SolverState& state) const = 0;
};

// Relaxed primal-dual update of agent i and its owned duals.
class PrimalDualRule final : public UpdateRule {
 public:
  PrimalDualRule(const problems::ProblemInstance& prob, const graph::Topology& topo, solvers::StepSizeConfig step);

  bool uses_duals() const override { return true; }
  void apply(int agent, const Mat& snapX, const Mat& snapY, double eta, SolverState& state) override;
  double residual(const SolverState& state) const override;

  void set_problem(const problems::ProblemInstance& prob) { prob_ = &prob; }

 private:
  const problems::ProblemInstance* prob_;
  const graph::Topology* topo_;
  solvers::StepSizeConfig step_;
};

// Relaxed prox-DGD update; no dual variables.
class ProxDgdRule final : public UpdateRule {
 public:
  ProxDgdRule(const problems::ProblemInstance& prob, const graph::Topology& topo, double alpha);

  bool uses_duals() const override { return false; }
  void apply(int agent, const Mat& snapX, const Mat& snapY, double eta, SolverState& state) override;
  double residual(const SolverState& state) const override;

 private:
  const problems::ProblemInstance* prob_;
  const graph::Topology* topo_;
  double alpha_;
};

/// q_i = (1 / mu_i) / sum_j (1 / mu_j). Throws NonPositiveMean.
Vec predicted_q(const std::vector<double>& means);

/// eta_i = eta / (n q_i). Throws DegenerateProbability for q_i <= 0.
Vec relaxation_parameters(const Vec& q, double eta);

/// n q_min / (2 tau sqrt(kappa q_min) + kappa).
double eta_max_bound(int n, double q_min, double kappa, long tau);

// Per-agent mean compute times 2 + |N(0, 1)| ms.
std::vector<double> default_compute_means(int n, std::uint64_t seed);

// Generic event loop. `rule == nullptr` runs the clock only (no arithmetic),
// which yields activation counts and the delay trace.
SimulationResult run_engine(UpdateRule* rule, const graph::Topology& topo, int p, const AsyncConfig& cfg,
                            const RunOptions& options);

// Asynchronous primal-dual algorithm (or its synchronous counterpart with
// cfg.lockstep).
SimulationResult simulate(const problems::ProblemInstance& prob, const graph::Topology& topo,
                          const solvers::StepSizeConfig& step, const AsyncConfig& cfg, const RunOptions& options = {});

// Asynchronous prox-DGD (synchronous with cfg.lockstep).
SimulationResult simulate_prox_dgd(const problems::ProblemInstance& prob, const graph::Topology& topo, double alpha,
                                   const AsyncConfig& cfg, const RunOptions& options = {});

// Clock-only run: activation counts and delays for the configured laws.
SimulationResult observe_timing(const graph::Topology& topo, const AsyncConfig& cfg, bool keep_delay_vectors = false);

// (asynchronous agent updates) / (synchronous agent updates) completed within
// the same simulated horizon under the same timing laws.
double update_throughput_ratio(const graph::Topology& topo, const AsyncConfig& cfg);

}  // namespace dcl::async
