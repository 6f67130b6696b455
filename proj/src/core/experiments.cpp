#include "dcl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "dcl/error.hpp"
#include "dcl/matrix_completion.hpp"
#include "dcl/rng.hpp"

namespace dcl::experiments {

namespace {

constexpr double kReferenceTol = 1e-12;
constexpr long kReferenceMaxIters = 5'000'000;

Mat normal_matrix(Rng& rng, int rows, int cols) {
  Mat M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) M(r, c) = rng.normal();
  }
  return M;
}

// `nonzeros` standard normal entries at uniformly chosen positions.
Vec sparse_vector(Rng& rng, int p, int nonzeros) {
  std::vector<int> idx(static_cast<std::size_t>(p));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  Vec x = Vec::Zero(p);
  for (int k = 0; k < nonzeros; ++k) x(idx[static_cast<std::size_t>(k)]) = rng.normal();
  return x;
}

double spectral_norm(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()(0);
}

graph::Topology network(int n, std::uint64_t seed) {
  return graph::Topology::build(graph::generate_geometric_network(n, 30.0, 15.0, seed));
}

std::string cache_name(ExperimentKind kind, std::uint64_t seed) {
  return "reference_" + std::string(to_string(kind)) + "_" + std::to_string(seed) + ".json";
}

std::optional<Vec> load_reference(const std::filesystem::path& file, const Instance& inst) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  try {
    const auto doc = nlohmann::json::parse(in);
    if (graph::network_from_json(doc.at("network")) != inst.topo.net) return std::nullopt;
    const auto x = doc.at("x").get<std::vector<double>>();
    if (static_cast<int>(x.size()) != inst.prob.p) return std::nullopt;
    return Eigen::Map<const Vec>(x.data(), static_cast<Eigen::Index>(x.size()));
  } catch (const std::exception&) {
    return std::nullopt;  // stale or corrupt cache: recompute
  }
}

void store_reference(const std::filesystem::path& file, const Instance& inst, const solvers::ReferenceSolution& ref) {
  nlohmann::json doc;
  doc["network"] = graph::to_json(inst.topo.net);
  doc["x"] = std::vector<double>(ref.x.data(), ref.x.data() + ref.x.size());
  doc["residual"] = ref.residual;
  doc["iterations"] = ref.iterations;
  doc["alpha"] = ref.alpha;
  std::ofstream out(file);
  if (!out) {
    warn("cannot write reference cache " + file.string());
    return;
  }
  out << doc.dump(1) << '\n';
}

async::AsyncConfig algorithm_config(const ExperimentConfig& cfg, AlgorithmKind algo, int n) {
  async::AsyncConfig c = timing_for(n, cfg.seed);
  c.horizon_ms = cfg.horizon_ms > 0.0 ? cfg.horizon_ms : default_horizon_ms(cfg.kind);
  c.lockstep = !is_async(algo);
  c.eta = c.lockstep ? 1.0 : cfg.eta.value_or(defaults_for(cfg.kind, algo).eta);
  c.algorithm = (algo == AlgorithmKind::PgExtra || algo == AlgorithmKind::AsyncPd) ? async::Algorithm::PrimalDual
                                                                                   : async::Algorithm::ProxDgd;
  return c;
}

void append(std::vector<TrajectoryRecord>& rows, const async::SimulationResult& res, AlgorithmKind algo,
            std::uint64_t seed) {
  for (const auto& s : res.trajectory) {
    rows.push_back({std::string(to_string(algo)), seed, s.k, s.time_ms, s.rel_error, s.residual});
  }
}

std::vector<TrajectoryRecord> run_matrix_completion(const ExperimentConfig& cfg) {
  const mc::McData data = mc::mc_generate(cfg.seed);
  const auto topo = graph::Topology::build(data.net);
  const mc::MatrixCompletionState init = mc::mc_initialize(data, topo, cfg.seed);
  std::vector<TrajectoryRecord> rows;
  for (AlgorithmKind algo : cfg.algorithms) {
    const double alpha = cfg.alpha.value_or(defaults_for(cfg.kind, algo).alpha);
    mc::MatrixCompletionRule rule(data, topo, alpha, init);
    async::RunOptions opt;
    opt.record_every = cfg.record_every;
    opt.initial = rule.engine_state();
    opt.rel_error = [&rule](const solvers::SolverState&) { return rule.relative_error(); };
    const auto res = async::run_engine(&rule, topo, rule.row_width(), algorithm_config(cfg, algo, topo.agents()), opt);
    append(rows, res, algo, cfg.seed);
  }
  return rows;
}

}  // namespace

ExperimentKind parse_experiment(std::string_view name) {
  if (name == "cs") return ExperimentKind::CompressedSensing;
  if (name == "logistic") return ExperimentKind::Logistic;
  if (name == "matcomp") return ExperimentKind::MatrixCompletion;
  if (name == "geomedian") return ExperimentKind::GeometricMedian;
  fail(ErrorCode::InvalidArgument, "unknown experiment '" + std::string(name) + "'");
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::CompressedSensing: return "cs";
    case ExperimentKind::Logistic: return "logistic";
    case ExperimentKind::MatrixCompletion: return "matcomp";
    case ExperimentKind::GeometricMedian: return "geomedian";
  }
  return "?";
}

AlgorithmKind parse_algorithm(std::string_view name) {
  if (name == "pg-extra") return AlgorithmKind::PgExtra;
  if (name == "async-pd") return AlgorithmKind::AsyncPd;
  if (name == "prox-dgd") return AlgorithmKind::ProxDgd;
  if (name == "async-prox-dgd") return AlgorithmKind::AsyncProxDgd;
  fail(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(AlgorithmKind algo) {
  switch (algo) {
    case AlgorithmKind::PgExtra: return "pg-extra";
    case AlgorithmKind::AsyncPd: return "async-pd";
    case AlgorithmKind::ProxDgd: return "prox-dgd";
    case AlgorithmKind::AsyncProxDgd: return "async-prox-dgd";
  }
  return "?";
}

bool is_async(AlgorithmKind algo) { return algo == AlgorithmKind::AsyncPd || algo == AlgorithmKind::AsyncProxDgd; }

Instance gen_cs_instance(std::uint64_t seed) {
  constexpr int n = 10, rows = 3, p = 50;
  Rng rng(seed, "cs-data");
  const Vec x = sparse_vector(rng, p, p / 5);
  std::vector<problems::ObjectivePtr> objs;
  for (int i = 0; i < n; ++i) {
    Mat A = normal_matrix(rng, rows, p);
    A /= spectral_norm(A);
    Vec noise(rows);
    for (int r = 0; r < rows; ++r) noise(r) = rng.normal();
    Vec b = A * x + noise;
    objs.push_back(problems::least_squares_l1(std::move(A), std::move(b), 0.01));
  }
  return Instance{network(n, seed), problems::ProblemInstance(p, std::move(objs)), x};
}

Instance gen_logistic_instance(std::uint64_t seed) {
  constexpr int n = 10, rows = 3, p = 50;
  Rng rng(seed, "logistic-data");
  const Vec x = sparse_vector(rng, p, p / 5);
  std::vector<problems::ObjectivePtr> objs;
  for (int i = 0; i < n; ++i) {
    Mat H = normal_matrix(rng, rows, p);
    Vec d(rows);
    for (int r = 0; r < rows; ++r) {
      const double prob_plus = 1.0 / (1.0 + std::exp(-H.row(r).dot(x)));
      d(r) = rng.uniform() <= prob_plus ? 1.0 : -1.0;
    }
    objs.push_back(problems::logistic_l1(std::move(H), std::move(d), 0.1));
  }
  return Instance{network(n, seed), problems::ProblemInstance(p, std::move(objs)), x};
}

Instance gen_geomedian_instance(std::uint64_t seed) {
  constexpr int n = 11, p = 4;
  Rng rng(seed, "geomedian-data");
  Vec sd(p);
  for (int c = 0; c < p; ++c) sd(c) = std::sqrt(rng.uniform(0.0, 10.0));
  std::vector<problems::ObjectivePtr> objs;
  for (int i = 0; i < n; ++i) {
    Vec b(p);
    for (int c = 0; c < p; ++c) b(c) = sd(c) * rng.normal();
    objs.push_back(problems::geometric_median(std::move(b)));
  }
  return Instance{network(n, seed), problems::ProblemInstance(p, std::move(objs)), Vec()};
}

Instance make_instance(ExperimentKind kind, std::uint64_t seed) {
  switch (kind) {
    case ExperimentKind::CompressedSensing: return gen_cs_instance(seed);
    case ExperimentKind::Logistic: return gen_logistic_instance(seed);
    case ExperimentKind::GeometricMedian: return gen_geomedian_instance(seed);
    case ExperimentKind::MatrixCompletion: break;
  }
  fail(ErrorCode::InvalidArgument, "matrix completion has no single convex instance");
}

double relative_error(const Mat& Xk, const Mat& Xstar, const Mat& X0) {
  if (Xk.rows() != Xstar.rows() || Xk.cols() != Xstar.cols() || X0.rows() != Xstar.rows() ||
      X0.cols() != Xstar.cols()) {
    fail(ErrorCode::DimensionMismatch, "relative_error: shapes differ");
  }
  const double denom = (X0 - Xstar).norm();
  if (!(denom >= 1e-15)) fail(ErrorCode::DegenerateStart, "starting point coincides with the solution");
  return (Xk - Xstar).norm() / denom;
}

AlgorithmDefaults defaults_for(ExperimentKind kind, AlgorithmKind algo) {
  const bool dgd = algo == AlgorithmKind::ProxDgd || algo == AlgorithmKind::AsyncProxDgd;
  if (dgd) return {0.05, 0.36};
  switch (kind) {
    case ExperimentKind::CompressedSensing: return {1.0, 0.288};
    case ExperimentKind::Logistic: return {0.4, 0.224};
    case ExperimentKind::MatrixCompletion: return {0.1, 0.204};
    case ExperimentKind::GeometricMedian: return {1.0, 0.4};
  }
  return {};
}

double default_horizon_ms(ExperimentKind kind) {
  return kind == ExperimentKind::MatrixCompletion ? 3000.0 : 2760.0;
}

async::AsyncConfig timing_for(int agents, std::uint64_t seed) {
  async::AsyncConfig c;
  c.compute_means = async::default_compute_means(agents, seed);
  c.comm_mean = 0.6;
  c.seed = seed;
  return c;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.algorithms.empty()) fail(ErrorCode::InvalidArgument, "at least one algorithm is required");
  if (cfg.horizon_ms < 0.0) fail(ErrorCode::HorizonZero, "horizon must be positive");
  if (cfg.record_every < 1) fail(ErrorCode::InvalidArgument, "record_every must be at least 1");
  if (cfg.alpha && !(*cfg.alpha > 0.0)) fail(ErrorCode::NonPositiveScale, "alpha must be positive");
  if (cfg.eta && !(*cfg.eta > 0.0)) fail(ErrorCode::InvalidArgument, "eta must be positive");
  if (cfg.kind == ExperimentKind::MatrixCompletion) {
    for (auto algo : cfg.algorithms) {
      if (algo != AlgorithmKind::PgExtra && algo != AlgorithmKind::AsyncPd) {
        fail(ErrorCode::InvalidArgument, "matcomp supports pg-extra and async-pd only");
      }
    }
  }
}

solvers::ReferenceSolution reference_for(const Instance& inst, ExperimentKind kind, std::uint64_t seed,
                                         const std::filesystem::path& cache_dir) {
  std::filesystem::path file;
  if (!cache_dir.empty()) {
    file = cache_dir / cache_name(kind, seed);
    if (auto x = load_reference(file, inst)) {
      solvers::ReferenceSolution ref;
      ref.x = std::move(*x);
      return ref;
    }
  }
  auto ref = solvers::solve_reference(inst.prob, inst.topo, kReferenceTol, kReferenceMaxIters);
  if (!file.empty()) store_reference(file, inst, ref);
  return ref;
}

std::vector<TrajectoryRecord> run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.kind == ExperimentKind::MatrixCompletion) return run_matrix_completion(cfg);

  const Instance inst = make_instance(cfg.kind, cfg.seed);
  const auto ref = reference_for(inst, cfg.kind, cfg.seed, cfg.cache_dir);
  const int n = inst.topo.agents();
  const Mat Xstar = Vec::Ones(n) * ref.x.transpose();
  const Mat X0 = Mat::Zero(n, inst.prob.p);
  relative_error(X0, Xstar, X0);  // DegenerateStart before any run

  std::vector<TrajectoryRecord> rows;
  for (AlgorithmKind algo : cfg.algorithms) {
    const double alpha = cfg.alpha.value_or(defaults_for(cfg.kind, algo).alpha);
    const auto acfg = algorithm_config(cfg, algo, n);
    async::RunOptions opt;
    opt.record_every = cfg.record_every;
    opt.rel_error = [&](const solvers::SolverState& s) { return relative_error(s.X, Xstar, X0); };
    async::SimulationResult res;
    if (acfg.algorithm == async::Algorithm::PrimalDual) {
      const auto step = solvers::StepSizeConfig::global(alpha);
      if (auto msg = solvers::step_size_warning(step, inst.topo, inst.prob)) warn(std::string(to_string(algo)) + ": " + *msg);
      res = async::simulate(inst.prob, inst.topo, step, acfg, opt);
    } else {
      res = async::simulate_prox_dgd(inst.prob, inst.topo, alpha, acfg, opt);
    }
    append(rows, res, algo, cfg.seed);
  }
  return rows;
}

void run_experiment_to_csv(const ExperimentConfig& cfg, const std::string& out) {
  const auto rows = run_experiment(cfg);
  if (out == "-") {
    csv::write_trajectory(std::cout, rows);
    return;
  }
  std::ostringstream buf;
  csv::write_trajectory(buf, rows);
  std::ofstream file(out, std::ios::binary);
  if (!file || !(file << buf.str()) || !file.flush()) {
    file.close();
    std::error_code ec;
    std::filesystem::remove(out, ec);
    fail(ErrorCode::Io, "cannot write " + out);
  }
}

BoundsReport compute_bounds(const ExperimentConfig& cfg) {
  BoundsReport r;
  std::optional<graph::Topology> topo;
  if (cfg.kind == ExperimentKind::MatrixCompletion) {
    topo = graph::Topology::build(mc::mc_generate(cfg.seed).net);
    r.lipschitz = 0.0;
  } else {
    Instance inst = make_instance(cfg.kind, cfg.seed);
    r.lipschitz = inst.prob.lipschitz();
    topo = std::move(inst.topo);
  }
  r.agents = topo->agents();
  r.edges = topo->edge_count();
  r.rho_min = topo->spectrum.rho_min;
  r.kappa = topo->spectrum.kappa;
  r.alpha_bound = r.lipschitz > 0.0 ? 2.0 * r.rho_min / r.lipschitz : std::numeric_limits<double>::infinity();

  auto timing = timing_for(r.agents, cfg.seed);
  timing.horizon_ms = cfg.horizon_ms > 0.0 ? cfg.horizon_ms : default_horizon_ms(cfg.kind);
  const Vec q = async::predicted_q(timing.compute_means);
  r.q.assign(q.data(), q.data() + q.size());
  r.observed_tau = async::observe_timing(*topo, timing).delays.max_tau;
  r.eta_max = async::eta_max_bound(r.agents, q.minCoeff(), r.kappa, r.observed_tau);
  return r;
}

}  // namespace dcl::experiments
