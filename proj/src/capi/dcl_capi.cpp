#include "dcl/dcl.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>

#include "dcl/async_engine.hpp"
#include "dcl/error.hpp"
#include "dcl/experiments.hpp"
#include "dcl/graph_topology.hpp"

struct dcl_network {
  dcl::graph::Topology topo;
};

struct dcl_experiment {
  dcl::experiments::ExperimentConfig cfg;
};

namespace {

thread_local std::string last_error;

dcl_status status_of(dcl::ErrorCode code) {
  using dcl::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return DCL_INVALID_ARGUMENT;
    case ErrorCode::ConnectivityFailure: return DCL_CONNECTIVITY_FAILURE;
    case ErrorCode::FactorizationMismatch: return DCL_FACTORIZATION_MISMATCH;
    case ErrorCode::NotPositiveDefinite: return DCL_NOT_POSITIVE_DEFINITE;
    case ErrorCode::DimensionMismatch: return DCL_DIMENSION_MISMATCH;
    case ErrorCode::NonPositiveScale: return DCL_NON_POSITIVE_SCALE;
    case ErrorCode::ZeroLipschitz: return DCL_ZERO_LIPSCHITZ;
    case ErrorCode::GammaOutOfRange: return DCL_GAMMA_OUT_OF_RANGE;
    case ErrorCode::NoConvergence: return DCL_NO_CONVERGENCE;
    case ErrorCode::NonPositiveMean: return DCL_NON_POSITIVE_MEAN;
    case ErrorCode::DegenerateProbability: return DCL_DEGENERATE_PROBABILITY;
    case ErrorCode::HorizonZero: return DCL_HORIZON_ZERO;
    case ErrorCode::DegenerateStart: return DCL_DEGENERATE_START;
    case ErrorCode::Io: return DCL_IO_ERROR;
  }
  return DCL_INTERNAL_ERROR;
}

template <class F>
dcl_status guarded(F&& body) {
  try {
    body();
    return DCL_OK;
  } catch (const dcl::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DCL_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DCL_INTERNAL_ERROR;
  }
}

void require(const void* ptr, const char* what) {
  if (ptr == nullptr) dcl::fail(dcl::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

void copy_row_major(const Eigen::MatrixXd& M, double* out) {
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, M.rows(), M.cols()) = M;
}

dcl::problems::Vec vec_of(const double* data, int n) {
  if (n < 0) dcl::fail(dcl::ErrorCode::InvalidArgument, "negative length");
  return Eigen::Map<const dcl::problems::Vec>(data, n);
}

}  // namespace

extern "C" {

const char* dcl_last_error(void) { return last_error.c_str(); }

const char* dcl_status_name(dcl_status status) {
  switch (status) {
    case DCL_OK: return "ok";
    case DCL_INVALID_ARGUMENT: return "invalid argument";
    case DCL_CONNECTIVITY_FAILURE: return "connectivity failure";
    case DCL_FACTORIZATION_MISMATCH: return "factorization mismatch";
    case DCL_NOT_POSITIVE_DEFINITE: return "not positive definite";
    case DCL_DIMENSION_MISMATCH: return "dimension mismatch";
    case DCL_NON_POSITIVE_SCALE: return "non-positive scale";
    case DCL_ZERO_LIPSCHITZ: return "zero Lipschitz constant";
    case DCL_GAMMA_OUT_OF_RANGE: return "gamma out of range";
    case DCL_NO_CONVERGENCE: return "no convergence";
    case DCL_NON_POSITIVE_MEAN: return "non-positive mean";
    case DCL_DEGENERATE_PROBABILITY: return "degenerate probability";
    case DCL_HORIZON_ZERO: return "zero horizon";
    case DCL_DEGENERATE_START: return "degenerate start";
    case DCL_IO_ERROR: return "i/o error";
    case DCL_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

void dcl_set_warnings(int enabled) { dcl::set_warnings_enabled(enabled != 0); }

dcl_status dcl_network_generate(int n, double area_side, double radius, uint64_t seed, dcl_network** out) {
  return guarded([&] {
    require(out, "out");
    auto net = dcl::graph::generate_geometric_network(n, area_side, radius, seed);
    *out = new dcl_network{dcl::graph::Topology::build(std::move(net))};
  });
}

dcl_status dcl_network_create(int n, const int* edges, int m, dcl_network** out) {
  return guarded([&] {
    require(out, "out");
    if (m < 0) dcl::fail(dcl::ErrorCode::InvalidArgument, "negative edge count");
    if (m > 0) require(edges, "edges");
    std::vector<dcl::graph::Edge> list;
    for (int e = 0; e < m; ++e) list.push_back({edges[2 * e], edges[2 * e + 1]});
    *out = new dcl_network{dcl::graph::Topology::build(dcl::graph::NetworkSpec(n, std::move(list)))};
  });
}

dcl_status dcl_network_from_json(const char* json, dcl_network** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      dcl::fail(dcl::ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
    }
    *out = new dcl_network{dcl::graph::Topology::build(dcl::graph::network_from_json(doc))};
  });
}

dcl_status dcl_network_to_json(const dcl_network* net, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    require(net, "net");
    const std::string text = dcl::graph::to_json(net->topo.net).dump();
    if (needed) *needed = text.size() + 1;
    if (buf == nullptr) return;
    if (cap < text.size() + 1) dcl::fail(dcl::ErrorCode::DimensionMismatch, "buffer too small");
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

void dcl_network_free(dcl_network* net) { delete net; }

int dcl_network_agents(const dcl_network* net) { return net ? net->topo.agents() : 0; }

int dcl_network_edge_count(const dcl_network* net) { return net ? net->topo.edge_count() : 0; }

dcl_status dcl_network_edges(const dcl_network* net, int* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    int k = 0;
    for (const auto& e : net->topo.net.edges()) {
      out[k++] = e.i;
      out[k++] = e.j;
    }
  });
}

dcl_status dcl_network_weights(const dcl_network* net, double* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    copy_row_major(net->topo.W, out);
  });
}

dcl_status dcl_network_scaled_incidence(const dcl_network* net, double* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    copy_row_major(net->topo.V(), out);
  });
}

dcl_status dcl_network_spectrum(const dcl_network* net, dcl_spectrum* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    const auto& s = net->topo.spectrum;
    *out = dcl_spectrum{s.lambda_min_W, s.rho_min, s.lambda_max_G, s.kappa};
  });
}

dcl_status dcl_predicted_q(const double* means, int n, double* q_out) {
  return guarded([&] {
    require(means, "means");
    require(q_out, "q_out");
    if (n < 1) dcl::fail(dcl::ErrorCode::InvalidArgument, "no agents");
    const auto q = dcl::async::predicted_q(std::vector<double>(means, means + n));
    std::copy(q.data(), q.data() + n, q_out);
  });
}

dcl_status dcl_relaxation_parameters(const double* q, int n, double eta, double* eta_out) {
  return guarded([&] {
    require(q, "q");
    require(eta_out, "eta_out");
    const auto e = dcl::async::relaxation_parameters(vec_of(q, n), eta);
    std::copy(e.data(), e.data() + n, eta_out);
  });
}

double dcl_eta_max_bound(int n, double q_min, double kappa, long tau) {
  return dcl::async::eta_max_bound(n, q_min, kappa, tau);
}

dcl_status dcl_prox_l1(const double* u, int p, double lam, double* out) {
  return guarded([&] {
    require(u, "u");
    require(out, "out");
    const auto x = dcl::problems::prox_l1(vec_of(u, p), lam);
    std::copy(x.data(), x.data() + p, out);
  });
}

dcl_status dcl_prox_l2norm(const double* u, const double* b, int p, double lam, double* out) {
  return guarded([&] {
    require(u, "u");
    require(b, "b");
    require(out, "out");
    const auto x = dcl::problems::prox_l2norm(vec_of(u, p), vec_of(b, p), lam);
    std::copy(x.data(), x.data() + p, out);
  });
}

dcl_status dcl_throughput_ratio(const dcl_network* net, const double* compute_means, double comm_mean,
                                double horizon_ms, uint64_t seed, double* ratio) {
  return guarded([&] {
    require(net, "net");
    require(compute_means, "compute_means");
    require(ratio, "ratio");
    dcl::async::AsyncConfig cfg;
    cfg.compute_means.assign(compute_means, compute_means + net->topo.agents());
    cfg.comm_mean = comm_mean;
    cfg.horizon_ms = horizon_ms;
    cfg.seed = seed;
    *ratio = dcl::async::update_throughput_ratio(net->topo, cfg);
  });
}

dcl_status dcl_experiment_create(const char* kind, uint64_t seed, dcl_experiment** out) {
  return guarded([&] {
    require(kind, "kind");
    require(out, "out");
    auto exp = std::make_unique<dcl_experiment>();
    exp->cfg.kind = dcl::experiments::parse_experiment(kind);
    exp->cfg.seed = seed;
    exp->cfg.algorithms = {dcl::experiments::AlgorithmKind::PgExtra, dcl::experiments::AlgorithmKind::AsyncPd};
    *out = exp.release();
  });
}

void dcl_experiment_free(dcl_experiment* exp) { delete exp; }

dcl_status dcl_experiment_set_algorithms(dcl_experiment* exp, const char* list) {
  return guarded([&] {
    require(exp, "experiment");
    require(list, "list");
    std::vector<dcl::experiments::AlgorithmKind> algos;
    std::stringstream ss(list);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (name.empty()) continue;
      const auto algo = dcl::experiments::parse_algorithm(name);
      if (std::find(algos.begin(), algos.end(), algo) == algos.end()) algos.push_back(algo);
    }
    if (algos.empty()) dcl::fail(dcl::ErrorCode::InvalidArgument, "at least one algorithm is required");
    exp->cfg.algorithms = std::move(algos);
  });
}

dcl_status dcl_experiment_set_horizon(dcl_experiment* exp, double horizon_ms) {
  return guarded([&] {
    require(exp, "experiment");
    if (!(horizon_ms > 0.0)) dcl::fail(dcl::ErrorCode::HorizonZero, "horizon must be positive");
    exp->cfg.horizon_ms = horizon_ms;
  });
}

dcl_status dcl_experiment_set_alpha(dcl_experiment* exp, double alpha) {
  return guarded([&] {
    require(exp, "experiment");
    if (!(alpha > 0.0)) dcl::fail(dcl::ErrorCode::NonPositiveScale, "alpha must be positive");
    exp->cfg.alpha = alpha;
  });
}

dcl_status dcl_experiment_set_eta(dcl_experiment* exp, double eta) {
  return guarded([&] {
    require(exp, "experiment");
    if (!(eta > 0.0)) dcl::fail(dcl::ErrorCode::InvalidArgument, "eta must be positive");
    exp->cfg.eta = eta;
  });
}

dcl_status dcl_experiment_set_record_every(dcl_experiment* exp, long every) {
  return guarded([&] {
    require(exp, "experiment");
    if (every < 1) dcl::fail(dcl::ErrorCode::InvalidArgument, "record_every must be at least 1");
    exp->cfg.record_every = every;
  });
}

dcl_status dcl_experiment_run(dcl_experiment* exp, const char* out_path) {
  return guarded([&] {
    require(exp, "experiment");
    require(out_path, "out_path");
    const std::string out(out_path);
    auto cfg = exp->cfg;
    if (out != "-") {
      const auto dir = std::filesystem::path(out).parent_path();
      cfg.cache_dir = dir.empty() ? std::filesystem::path(".") : dir;
    }
    dcl::experiments::run_experiment_to_csv(cfg, out);
  });
}

dcl_status dcl_experiment_bounds(dcl_experiment* exp, dcl_bounds* out, double* q_out, int q_cap) {
  return guarded([&] {
    require(exp, "experiment");
    require(out, "out");
    const auto b = dcl::experiments::compute_bounds(exp->cfg);
    const double q_min = *std::min_element(b.q.begin(), b.q.end());
    *out = dcl_bounds{b.agents, b.edges, b.rho_min, b.kappa, b.lipschitz, b.alpha_bound, q_min, b.observed_tau,
                      b.eta_max};
    if (q_out) {
      const int count = std::min<int>(q_cap, static_cast<int>(b.q.size()));
      std::copy(b.q.begin(), b.q.begin() + std::max(0, count), q_out);
    }
  });
}

}  // extern "C"
