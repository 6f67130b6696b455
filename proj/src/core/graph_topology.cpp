#include "dcl/graph_topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include <nlohmann/json.hpp>

#include "dcl/error.hpp"
#include "dcl/rng.hpp"

namespace dcl::graph {

namespace {

constexpr double kFactorizationTol = 1e-12;
constexpr double kEigenMargin = 1e-12;

}  // namespace

bool is_connected(int n, const std::vector<Edge>& edges) {
  if (n <= 1) return n == 1;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& e : edges) {
    adj[static_cast<std::size_t>(e.i)].push_back(e.j);
    adj[static_cast<std::size_t>(e.j)].push_back(e.i);
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n;
}

NetworkSpec::NetworkSpec(int n, std::vector<Edge> edges, std::uint64_t seed)
    : n_(n), edges_(std::move(edges)), seed_(seed) {
  if (n_ < 1) fail(ErrorCode::InvalidArgument, "network needs at least one agent");
  for (auto& e : edges_) {
    if (e.i == e.j) fail(ErrorCode::InvalidArgument, "self loop on agent " + std::to_string(e.i));
    if (e.i > e.j) std::swap(e.i, e.j);
    if (e.i < 0 || e.j >= n_) {
      fail(ErrorCode::InvalidArgument,
           "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) + ") out of range");
    }
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
    fail(ErrorCode::InvalidArgument, "duplicate edge");
  }
  if (!is_connected(n_, edges_)) fail(ErrorCode::ConnectivityFailure, "network is disconnected");

  const auto un = static_cast<std::size_t>(n_);
  neighbors_.assign(un, {});
  incident_.assign(un, {});
  owned_.assign(un, {});
  for (int i = 0; i < n_; ++i) neighbors_[static_cast<std::size_t>(i)].push_back(i);
  for (int e = 0; e < edge_count(); ++e) {
    const auto [i, j] = edges_[static_cast<std::size_t>(e)];
    neighbors_[static_cast<std::size_t>(i)].push_back(j);
    neighbors_[static_cast<std::size_t>(j)].push_back(i);
    incident_[static_cast<std::size_t>(i)].push_back(e);
    incident_[static_cast<std::size_t>(j)].push_back(e);
    owned_[static_cast<std::size_t>(i)].push_back(e);
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

int NetworkSpec::other_end(int e, int agent) const {
  const auto& ed = edge(e);
  if (ed.i == agent) return ed.j;
  if (ed.j == agent) return ed.i;
  fail(ErrorCode::InvalidArgument, "agent " + std::to_string(agent) + " is not on edge " + std::to_string(e));
}

NetworkSpec generate_geometric_network(int n, double area_side, double radius, std::uint64_t seed,
                                       int max_attempts) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "n must be >= 1");
  if (!(radius > 0.0)) fail(ErrorCode::InvalidArgument, "radius must be positive");
  if (!(area_side > 0.0)) fail(ErrorCode::InvalidArgument, "area side must be positive");

  Rng rng(seed, "network");
  const double r2 = radius * radius;
  std::vector<double> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    for (int i = 0; i < n; ++i) {
      xs[static_cast<std::size_t>(i)] = rng.uniform(0.0, area_side);
      ys[static_cast<std::size_t>(i)] = rng.uniform(0.0, area_side);
    }
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double dx = xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(j)];
        const double dy = ys[static_cast<std::size_t>(i)] - ys[static_cast<std::size_t>(j)];
        if (dx * dx + dy * dy <= r2) edges.push_back({i, j});
      }
    }
    if (is_connected(n, edges)) return NetworkSpec(n, std::move(edges), seed);
  }
  fail(ErrorCode::ConnectivityFailure,
       "no connected placement of " + std::to_string(n) + " agents with radius " +
           std::to_string(radius) + " after " + std::to_string(max_attempts) + " attempts");
}

Eigen::MatrixXd metropolis_weights(const NetworkSpec& net) {
  const int n = net.agents();
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : net.edges()) {
    const double w = 1.0 / (1.0 + std::max(net.degree(i), net.degree(j)));
    W(i, j) = w;
    W(j, i) = w;
  }
  bool any_self = false;
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : net.neighbors(i)) {
      if (j != i) off += W(i, j);
    }
    W(i, i) = 1.0 - off;
    any_self = any_self || W(i, i) > 0.0;
  }
  if (!any_self) fail(ErrorCode::NotPositiveDefinite, "no positive self-weight in W");
  return W;
}

Eigen::MatrixXd incidence(const NetworkSpec& net) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(net.edge_count(), net.agents());
  for (int e = 0; e < net.edge_count(); ++e) {
    C(e, net.edge(e).i) = 1.0;
    C(e, net.edge(e).j) = -1.0;
  }
  return C;
}

ScaledIncidence scaled_incidence(const Eigen::MatrixXd& W, const Eigen::MatrixXd& C) {
  const auto m = C.rows();
  const auto n = C.cols();
  if (W.rows() != n || W.cols() != n) {
    fail(ErrorCode::DimensionMismatch, "W and C disagree on the agent count");
  }
  ScaledIncidence out;
  out.C = C;
  out.D.resize(m);
  for (Eigen::Index e = 0; e < m; ++e) {
    Eigen::Index lo = -1, hi = -1;
    for (Eigen::Index a = 0; a < n; ++a) {
      if (C(e, a) == 1.0) lo = a;
      if (C(e, a) == -1.0) hi = a;
    }
    if (lo < 0 || hi < 0) fail(ErrorCode::InvalidArgument, "incidence row without +1/-1 pair");
    out.D(e) = std::sqrt(W(lo, hi) / 2.0);
  }
  out.V = out.D.asDiagonal() * C;

  const Eigen::MatrixXd target = (Eigen::MatrixXd::Identity(n, n) - W) / 2.0;
  const double gap = n == 0 ? 0.0 : (out.V.transpose() * out.V - target).cwiseAbs().maxCoeff();
  if (!(gap <= kFactorizationTol)) {
    fail(ErrorCode::FactorizationMismatch,
         "V^T V differs from (I - W)/2 by " + std::to_string(gap));
  }
  return out;
}

Eigen::MatrixXd metric_matrix(const Eigen::MatrixXd& V) {
  const auto m = V.rows();
  const auto n = V.cols();
  Eigen::MatrixXd G = Eigen::MatrixXd::Identity(n + m, n + m);
  G.topRightCorner(n, m) = V.transpose();
  G.bottomLeftCorner(m, n) = V;
  return G;
}

SpectralData spectral(const Eigen::MatrixXd& W, const Eigen::MatrixXd& V) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> w_eig(W, Eigen::EigenvaluesOnly);
  SpectralData out;
  out.lambda_min_W = w_eig.eigenvalues().minCoeff();
  if (!(out.lambda_min_W > -1.0 + kEigenMargin)) {
    fail(ErrorCode::NotPositiveDefinite,
         "lambda_min(W) = " + std::to_string(out.lambda_min_W) + " is not above -1");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> g_eig(metric_matrix(V), Eigen::EigenvaluesOnly);
  out.rho_min = g_eig.eigenvalues().minCoeff();
  out.lambda_max_G = g_eig.eigenvalues().maxCoeff();
  if (!(out.rho_min > 0.0)) {
    fail(ErrorCode::NotPositiveDefinite, "G is not positive definite");
  }
  out.kappa = out.lambda_max_G / out.rho_min;
  return out;
}

Topology Topology::build(NetworkSpec net) {
  Eigen::MatrixXd W = metropolis_weights(net);
  ScaledIncidence inc = scaled_incidence(W, graph::incidence(net));
  SpectralData spec = spectral(W, inc.V);
  return Topology{std::move(net), std::move(W), std::move(inc), spec};
}

nlohmann::json to_json(const NetworkSpec& net) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : net.edges()) edges.push_back({e.i, e.j});
  return {{"n", net.agents()}, {"edges", std::move(edges)}, {"seed", net.seed()}};
}

NetworkSpec network_from_json(const nlohmann::json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 2) fail(ErrorCode::InvalidArgument, "edge must be [i, j]");
      edges.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    const auto seed = doc.contains("seed") ? doc.at("seed").get<std::uint64_t>() : 0;
    return NetworkSpec(n, std::move(edges), seed);
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::InvalidArgument, std::string("malformed network document: ") + ex.what());
  }
}

}  // namespace dcl::graph
