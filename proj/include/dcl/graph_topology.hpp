#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace dcl::graph {

// Undirected edge between agents `i < j` (0-based).
struct Edge {
  int i = 0;
  int j = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Connected undirected network of `n` agents.
//
// Edges are stored once with i < j, sorted lexicographically; edge index e is
// the position in that order and also the row of the dual variable Y. Agent i
// owns the edges (i, j) with j > i.
class NetworkSpec {
 public:
  // Normalizes orientation and order. Throws InvalidArgument on self loops,
  // duplicates or out-of-range endpoints, ConnectivityFailure if the graph is
  // disconnected.
  NetworkSpec(int n, std::vector<Edge> edges, std::uint64_t seed = 0);

  int agents() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  std::uint64_t seed() const { return seed_; }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_.at(static_cast<std::size_t>(e)); }

  /// Neighbors of i including i itself, ascending.
  std::span<const int> neighbors(int i) const { return neighbors_.at(static_cast<std::size_t>(i)); }
  /// Edges touching i, ascending.
  std::span<const int> incident_edges(int i) const { return incident_.at(static_cast<std::size_t>(i)); }
  /// Edges (i, j) with j > i, ascending.
  std::span<const int> owned_edges(int i) const { return owned_.at(static_cast<std::size_t>(i)); }
  int degree(int i) const { return static_cast<int>(incident_edges(i).size()); }

  /// Agent that owns (updates) dual row e: the lower endpoint.
  int owner(int e) const { return edge(e).i; }
  /// Endpoint of e that is not `agent`.
  int other_end(int e, int agent) const;

  friend bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.seed_ == b.seed_;
  }

 private:
  int n_;
  std::vector<Edge> edges_;
  std::uint64_t seed_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::vector<int>> owned_;
};

bool is_connected(int n, const std::vector<Edge>& edges);

// Agents dropped uniformly in an area_side x area_side square; pairs within
// `radius` are linked. Positions are redrawn until the graph is connected,
// up to `max_attempts` times, then ConnectivityFailure.
NetworkSpec generate_geometric_network(int n, double area_side, double radius, std::uint64_t seed,
                                       int max_attempts = 1000);

// Metropolis-Hastings mixing matrix: w_ij = 1 / (1 + max(deg_i, deg_j)) on
// edges, diagonal fills each row to 1.
Eigen::MatrixXd metropolis_weights(const NetworkSpec& net);

// m x n signed incidence: +1 at the lower endpoint, -1 at the higher one.
Eigen::MatrixXd incidence(const NetworkSpec& net);

struct ScaledIncidence {
  Eigen::MatrixXd C;  // m x n signed incidence
  Eigen::VectorXd D;  // diagonal of D, D_ee = sqrt(w_ij / 2)
  Eigen::MatrixXd V;  // D * C
};

// V = D C. Throws FactorizationMismatch if max |V^T V - (I - W)/2| > 1e-12.
ScaledIncidence scaled_incidence(const Eigen::MatrixXd& W, const Eigen::MatrixXd& C);

/// G = [[I, V^T], [V, I]], size (n + m).
Eigen::MatrixXd metric_matrix(const Eigen::MatrixXd& V);

struct SpectralData {
  double lambda_min_W = 0.0;
  double rho_min = 0.0;       // smallest eigenvalue of G
  double lambda_max_G = 0.0;
  double kappa = 0.0;         // lambda_max_G / rho_min
};

// Dense symmetric eigensolves of W and G. Throws NotPositiveDefinite when
// lambda_min(W) <= -1 + 1e-12.
SpectralData spectral(const Eigen::MatrixXd& W, const Eigen::MatrixXd& V);

// Everything the solvers need about a network, computed once.
struct Topology {
  NetworkSpec net;
  Eigen::MatrixXd W;
  ScaledIncidence incidence;
  SpectralData spectrum;

  static Topology build(NetworkSpec net);

  int agents() const { return net.agents(); }
  int edge_count() const { return net.edge_count(); }
  const Eigen::MatrixXd& V() const { return incidence.V; }
};

// {"n": ..., "edges": [[i, j], ...], "seed": ...}; weights are not stored.
nlohmann::json to_json(const NetworkSpec& net);
NetworkSpec network_from_json(const nlohmann::json& doc);

}  // namespace dcl::graph
