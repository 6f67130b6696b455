#include "dcl/async_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <string>

#include "dcl/error.hpp"
#include "dcl/rng.hpp"

namespace dcl::async {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double draw(Rng& rng, TimingLaw law, double mean) {
  return law == TimingLaw::Deterministic ? mean : rng.exponential_mean(mean);
}

struct Message {
  int dest = 0;
  int src = 0;
  long x_version = 0;
  Vec x;
  int edge = -1;  // dual row carried along, -1 if none
  long y_version = 0;
  Vec y;
};

enum class EventKind { ComputeDone, Arrive };

struct Event {
  double time;
  long seq;
  EventKind kind;
  int agent;
  int msg;  // slot in the message pool (Arrive only)
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

// Number of updates between the write that superseded version `read` and
// update k; 0 if the value read is still current.
int staleness(const std::vector<long>& history, long read, long k) {
  const auto it = std::upper_bound(history.begin(), history.end(), read);
  if (it == history.end()) return 0;
  return static_cast<int>(k - (*it - 1));
}

class Engine {
 public:
  Engine(UpdateRule* rule, const graph::Topology& topo, int p, const AsyncConfig& cfg, const RunOptions& opt)
      : rule_(rule),
        topo_(topo),
        net_(topo.net),
        cfg_(cfg),
        opt_(opt),
        n_(topo.agents()),
        m_(topo.edge_count()),
        p_(p),
        duals_(rule == nullptr || rule->uses_duals()),
        compute_rng_(cfg.seed, "compute"),
        comm_rng_(cfg.seed, "comm") {
    validate();
    state_ = opt.initial ? *opt.initial : SolverState::zeros(n_, m_, p_);
    if (state_.X.rows() != n_ || state_.Y.rows() != m_ || state_.X.cols() != p_ || state_.Y.cols() != p_) {
      fail(ErrorCode::DimensionMismatch, "initial state must be n x p and m x p");
    }
    state_.k = 0;
    etas_ = relaxations();

    version_x_.assign(n_, 0);
    version_y_.assign(m_, 0);
    history_x_.assign(n_, {});
    history_y_.assign(m_, {});

    mail_x_.assign(n_, state_.X);
    mail_y_.assign(n_, state_.Y);
    mail_xver_.assign(n_, std::vector<long>(n_, 0));
    mail_yver_.assign(n_, std::vector<long>(m_, 0));
    snap_x_.assign(n_, state_.X);
    snap_y_.assign(n_, state_.Y);
    snap_xver_ = mail_xver_;
    snap_yver_ = mail_yver_;

    result_.activations.counts.assign(n_, 0);
    if (opt_.event_log) *opt_.event_log << "time_ms,kind,agent,k\n";
  }

  SimulationResult run() {
    record(0.0);
    if (cfg_.lockstep) {
      run_lockstep();
    } else {
      run_events();
    }
    if (result_.trajectory.empty() || result_.trajectory.back().k != k_) record(now_);
    result_.final_state = std::move(state_);
    result_.final_state.k = k_;
    result_.end_time_ms = now_;
    result_.updates = k_;
    return std::move(result_);
  }

 private:
  void validate() const {
    if (static_cast<int>(cfg_.compute_means.size()) != n_) {
      fail(ErrorCode::DimensionMismatch, "one compute mean per agent required");
    }
    for (double mu : cfg_.compute_means) {
      if (!(mu > 0.0)) fail(ErrorCode::NonPositiveMean, "compute means must be positive");
    }
    if (!(cfg_.comm_mean >= 0.0)) fail(ErrorCode::NonPositiveMean, "communication mean must be nonnegative");
    if (!(cfg_.horizon_ms > 0.0) && cfg_.max_updates <= 0) {
      fail(ErrorCode::HorizonZero, "a positive horizon or update budget is required");
    }
    if (cfg_.horizon_ms < 0.0 || cfg_.max_updates < 0) fail(ErrorCode::HorizonZero, "negative horizon");
    if (rule_ && opt_.initial && opt_.initial->X.cols() != p_) {
      fail(ErrorCode::DimensionMismatch, "initial state width differs from the problem dimension");
    }
  }

  Vec relaxations() const {
    if (cfg_.eta_per_agent) {
      const Vec& e = *cfg_.eta_per_agent;
      if (e.size() != n_) fail(ErrorCode::DimensionMismatch, "one relaxation per agent required");
      if (!(e.minCoeff() > 0.0)) fail(ErrorCode::InvalidArgument, "relaxations must be positive");
      return e;
    }
    if (!(cfg_.eta > 0.0)) fail(ErrorCode::InvalidArgument, "eta must be positive");
    // In lockstep every agent is activated once per tick, so q is uniform.
    const Vec q = cfg_.lockstep ? Vec::Constant(n_, 1.0 / n_) : predicted_q(cfg_.compute_means);
    return relaxation_parameters(q, cfg_.eta);
  }

  bool out_of_budget() const { return cfg_.max_updates > 0 && k_ >= cfg_.max_updates; }

  void schedule(double time, EventKind kind, int agent, int msg = -1) {
    queue_.push(Event{time, seq_++, kind, agent, msg});
  }

  // Copies agent i's current view into its snapshot: own rows from the
  // shared state, everything else from its mailbox.
  void take_snapshot(int i) {
    for (int j : net_.neighbors(i)) {
      if (j == i) {
        snap_x_[i].row(i) = state_.X.row(i);
        snap_xver_[i][i] = version_x_[i];
      } else {
        snap_x_[i].row(j) = mail_x_[i].row(j);
        snap_xver_[i][j] = mail_xver_[i][j];
      }
    }
    for (int e : net_.incident_edges(i)) {
      if (net_.owner(e) == i) {
        snap_y_[i].row(e) = state_.Y.row(e);
        snap_yver_[i][e] = version_y_[e];
      } else {
        snap_y_[i].row(e) = mail_y_[i].row(e);
        snap_yver_[i][e] = mail_yver_[i][e];
      }
    }
  }

  void take_fresh_snapshot(int i) {
    for (int j : net_.neighbors(i)) {
      snap_x_[i].row(j) = state_.X.row(j);
      snap_xver_[i][j] = version_x_[j];
    }
    for (int e : net_.incident_edges(i)) {
      snap_y_[i].row(e) = state_.Y.row(e);
      snap_yver_[i][e] = version_y_[e];
    }
  }

  // Performs update k_ + 1 by agent i from its snapshot.
  void update(int i) {
    track_delays(i);
    if (rule_) rule_->apply(i, snap_x_[i], snap_y_[i], etas_(i), state_);
    ++k_;
    ++result_.activations.counts[i];
    version_x_[i] = k_;
    history_x_[i].push_back(k_);
    if (opt_.keep_write_log) result_.write_log.push_back({k_, i, false, i});
    if (duals_) {
      for (int e : net_.owned_edges(i)) {
        version_y_[e] = k_;
        history_y_[e].push_back(k_);
        if (opt_.keep_write_log) result_.write_log.push_back({k_, i, true, e});
      }
    }
  }

  void track_delays(int i) {
    DelayTrace& d = result_.delays;
    std::vector<int> tau, delta;
    if (opt_.keep_delay_vectors) {
      tau.assign(n_, 0);
      delta.assign(m_, 0);
    }
    for (int j : net_.neighbors(i)) {
      if (j == i) continue;
      const int t = staleness(history_x_[j], snap_xver_[i][j], k_);
      d.max_tau = std::max<long>(d.max_tau, t);
      if (opt_.keep_delay_vectors) tau[j] = t;
    }
    if (duals_) {
      for (int e : net_.incident_edges(i)) {
        if (net_.owner(e) == i) continue;
        const int t = staleness(history_y_[e], snap_yver_[i][e], k_);
        d.max_tau = std::max<long>(d.max_tau, t);
        if (opt_.keep_delay_vectors) delta[e] = t;
      }
    }
    if (opt_.keep_delay_vectors) {
      d.tau.push_back(std::move(tau));
      d.delta.push_back(std::move(delta));
    }
  }

  // Returns true when the run should stop.
  bool record(double time) {
    TrajectorySample s;
    s.k = k_;
    s.time_ms = time;
    s.rel_error = kNaN;
    s.residual = kNaN;
    if (rule_) {
      state_.k = k_;
      if (opt_.rel_error) s.rel_error = opt_.rel_error(state_);
      if (opt_.compute_residual) s.residual = rule_->residual(state_);
      if (opt_.observer) opt_.observer(k_, time, state_);
    }
    result_.trajectory.push_back(s);
    return opt_.stop_rel_error > 0.0 && s.rel_error < opt_.stop_rel_error;
  }

  bool maybe_record(double time) {
    const long every = std::max(1L, opt_.record_every);
    if (k_ % every != 0) return false;
    return record(time);
  }

  void send_updates(int i, double t) {
    for (int e : net_.incident_edges(i)) {
      const int j = net_.other_end(e, i);
      int slot;
      if (free_slots_.empty()) {
        slot = static_cast<int>(pool_.size());
        pool_.emplace_back();
      } else {
        slot = free_slots_.back();
        free_slots_.pop_back();
      }
      // Slots are recycled, so the payload buffers keep their allocation.
      Message& msg = pool_[slot];
      msg.dest = j;
      msg.src = i;
      msg.x_version = version_x_[i];
      msg.x = state_.X.row(i).transpose();
      msg.edge = -1;
      if (duals_ && net_.owner(e) == i) {
        msg.edge = e;
        msg.y_version = version_y_[e];
        msg.y = state_.Y.row(e).transpose();
      }
      schedule(t + draw(comm_rng_, cfg_.comm_law, cfg_.comm_mean), EventKind::Arrive, j, slot);
    }
  }

  void deliver(int slot) {
    Message& msg = pool_[slot];
    const int d = msg.dest;
    if (msg.x_version > mail_xver_[d][msg.src]) {
      mail_x_[d].row(msg.src) = msg.x.transpose();
      mail_xver_[d][msg.src] = msg.x_version;
    }
    if (msg.edge >= 0 && msg.y_version > mail_yver_[d][msg.edge]) {
      mail_y_[d].row(msg.edge) = msg.y.transpose();
      mail_yver_[d][msg.edge] = msg.y_version;
    }
    free_slots_.push_back(slot);
  }

  void log_event(double t, const char* kind, int agent, long k) {
    if (opt_.event_log) *opt_.event_log << t << ',' << kind << ',' << agent << ',' << k << '\n';
  }

  void run_events() {
    for (int i = 0; i < n_; ++i) {
      take_snapshot(i);
      schedule(draw(compute_rng_, cfg_.compute_law, cfg_.compute_means[i]), EventKind::ComputeDone, i);
    }
    while (!queue_.empty()) {
      const Event ev = queue_.top();
      if (cfg_.horizon_ms > 0.0 && ev.time > cfg_.horizon_ms) break;
      queue_.pop();
      now_ = ev.time;
      if (ev.kind == EventKind::Arrive) {
        log_event(ev.time, "arrive", ev.agent, pool_[ev.msg].x_version);
        deliver(ev.msg);
        continue;
      }
      const int i = ev.agent;
      update(i);
      log_event(ev.time, "compute", i, k_);
      send_updates(i, ev.time);
      take_snapshot(i);
      schedule(ev.time + draw(compute_rng_, cfg_.compute_law, cfg_.compute_means[i]), EventKind::ComputeDone, i);
      if (maybe_record(ev.time) || out_of_budget()) break;
    }
  }

  void run_lockstep() {
    while (!out_of_budget()) {
      double compute = 0.0;
      for (int i = 0; i < n_; ++i) {
        compute = std::max(compute, draw(compute_rng_, cfg_.compute_law, cfg_.compute_means[i]));
      }
      double comm = 0.0;
      for (int d = 0; d < 2 * m_; ++d) comm = std::max(comm, draw(comm_rng_, cfg_.comm_law, cfg_.comm_mean));
      const double end = now_ + compute + comm;
      if (cfg_.horizon_ms > 0.0 && end > cfg_.horizon_ms) break;
      now_ = end;
      for (int i = 0; i < n_; ++i) take_fresh_snapshot(i);
      bool stop = false;
      for (int i = 0; i < n_ && !out_of_budget(); ++i) {
        update(i);
        log_event(now_, "compute", i, k_);
        stop = maybe_record(now_) || stop;
      }
      if (stop) break;
    }
  }

  UpdateRule* rule_;
  const graph::Topology& topo_;
  const graph::NetworkSpec& net_;
  const AsyncConfig& cfg_;
  const RunOptions& opt_;
  int n_, m_, p_;
  bool duals_;
  Rng compute_rng_;
  Rng comm_rng_;
  Vec etas_;

  SolverState state_;
  long k_ = 0;
  double now_ = 0.0;
  long seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::vector<Message> pool_;
  std::vector<int> free_slots_;

  std::vector<long> version_x_, version_y_;
  std::vector<std::vector<long>> history_x_, history_y_;
  std::vector<Mat> mail_x_, mail_y_, snap_x_, snap_y_;
  std::vector<std::vector<long>> mail_xver_, mail_yver_, snap_xver_, snap_yver_;

  SimulationResult result_;
};

}  // namespace

long ActivationStats::total() const {
  long t = 0;
  for (long c : counts) t += c;
  return t;
}

std::vector<double> ActivationStats::empirical_q() const {
  const long t = total();
  std::vector<double> q(counts.size(), 0.0);
  if (t == 0) return q;
  for (std::size_t i = 0; i < counts.size(); ++i) q[i] = static_cast<double>(counts[i]) / static_cast<double>(t);
  return q;
}

PrimalDualRule::PrimalDualRule(const problems::ProblemInstance& prob, const graph::Topology& topo,
                               solvers::StepSizeConfig step)
    : prob_(&prob), topo_(&topo), step_(std::move(step)) {}

void PrimalDualRule::apply(int agent, const Mat& snapX, const Mat& snapY, double eta, SolverState& state) {
  const Vec x_new = solvers::agent_primal_candidate(agent, snapX, snapY, *prob_, *topo_, step_.alpha_of(agent));
  const auto owned = topo_->net.owned_edges(agent);
  // Dual candidates read the pre-update x^i, so compute them before writing.
  std::vector<Vec> y_new;
  y_new.reserve(owned.size());
  for (int e : owned) y_new.push_back(solvers::edge_dual_candidate(e, snapX, snapY, *topo_));

  if (eta == 1.0) {
    state.X.row(agent) = x_new.transpose();
    for (std::size_t k = 0; k < owned.size(); ++k) state.Y.row(owned[k]) = y_new[k].transpose();
    return;
  }
  state.X.row(agent) = snapX.row(agent) + eta * (x_new.transpose() - snapX.row(agent));
  for (std::size_t k = 0; k < owned.size(); ++k) {
    const int e = owned[k];
    state.Y.row(e) = snapY.row(e) + eta * (y_new[k].transpose() - snapY.row(e));
  }
}

double PrimalDualRule::residual(const SolverState& state) const {
  return solvers::fixed_point_residual(state, *prob_, *topo_, step_);
}

ProxDgdRule::ProxDgdRule(const problems::ProblemInstance& prob, const graph::Topology& topo, double alpha)
    : prob_(&prob), topo_(&topo), alpha_(alpha) {
  if (!(alpha > 0.0)) fail(ErrorCode::NonPositiveScale, "alpha must be positive");
}

void ProxDgdRule::apply(int agent, const Mat& snapX, const Mat&, double eta, SolverState& state) {
  const Vec x_new = solvers::agent_dgd_candidate(agent, snapX, *prob_, *topo_, alpha_);
  if (eta == 1.0) {
    state.X.row(agent) = x_new.transpose();
  } else {
    state.X.row(agent) = snapX.row(agent) + eta * (x_new.transpose() - snapX.row(agent));
  }
}

double ProxDgdRule::residual(const SolverState& state) const {
  return solvers::dgd_residual(state.X, *prob_, *topo_, alpha_);
}

Vec predicted_q(const std::vector<double>& means) {
  if (means.empty()) fail(ErrorCode::InvalidArgument, "no agents");
  Vec rates(static_cast<Eigen::Index>(means.size()));
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (!(means[i] > 0.0)) fail(ErrorCode::NonPositiveMean, "mean " + std::to_string(means[i]) + " is not positive");
    rates(static_cast<Eigen::Index>(i)) = 1.0 / means[i];
  }
  return rates / rates.sum();
}

Vec relaxation_parameters(const Vec& q, double eta) {
  if (!(eta > 0.0)) fail(ErrorCode::InvalidArgument, "eta must be positive");
  if (q.size() == 0) fail(ErrorCode::InvalidArgument, "no agents");
  Vec out(q.size());
  const double n = static_cast<double>(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (!(q(i) > 0.0)) fail(ErrorCode::DegenerateProbability, "activation probability must be positive");
    out(i) = eta / (n * q(i));
  }
  return out;
}

double eta_max_bound(int n, double q_min, double kappa, long tau) {
  return static_cast<double>(n) * q_min / (2.0 * static_cast<double>(tau) * std::sqrt(kappa * q_min) + kappa);
}

std::vector<double> default_compute_means(int n, std::uint64_t seed) {
  Rng rng(seed, "agent-speeds");
  std::vector<double> mu(static_cast<std::size_t>(n));
  for (auto& v : mu) v = 2.0 + std::abs(rng.normal());
  return mu;
}

SimulationResult run_engine(UpdateRule* rule, const graph::Topology& topo, int p, const AsyncConfig& cfg,
                            const RunOptions& options) {
  Engine engine(rule, topo, p, cfg, options);
  return engine.run();
}

SimulationResult simulate(const problems::ProblemInstance& prob, const graph::Topology& topo,
                          const solvers::StepSizeConfig& step, const AsyncConfig& cfg, const RunOptions& options) {
  if (prob.agents() != topo.agents()) fail(ErrorCode::DimensionMismatch, "problem and network disagree on n");
  PrimalDualRule rule(prob, topo, step);
  return run_engine(&rule, topo, prob.p, cfg, options);
}

SimulationResult simulate_prox_dgd(const problems::ProblemInstance& prob, const graph::Topology& topo, double alpha,
                                   const AsyncConfig& cfg, const RunOptions& options) {
  if (prob.agents() != topo.agents()) fail(ErrorCode::DimensionMismatch, "problem and network disagree on n");
  ProxDgdRule rule(prob, topo, alpha);
  return run_engine(&rule, topo, prob.p, cfg, options);
}

SimulationResult observe_timing(const graph::Topology& topo, const AsyncConfig& cfg, bool keep_delay_vectors) {
  RunOptions opt;
  opt.record_every = std::numeric_limits<long>::max();
  opt.compute_residual = false;
  opt.keep_delay_vectors = keep_delay_vectors;
  return run_engine(nullptr, topo, 0, cfg, opt);
}

double update_throughput_ratio(const graph::Topology& topo, const AsyncConfig& cfg) {
  if (!(cfg.horizon_ms > 0.0)) fail(ErrorCode::HorizonZero, "throughput needs a positive horizon");
  AsyncConfig async_cfg = cfg;
  async_cfg.lockstep = false;
  async_cfg.max_updates = 0;
  AsyncConfig sync_cfg = async_cfg;
  sync_cfg.lockstep = true;
  const long a = observe_timing(topo, async_cfg).updates;
  const long s = observe_timing(topo, sync_cfg).updates;
  if (s == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(a) / static_cast<double>(s);
}

}  // namespace dcl::async
