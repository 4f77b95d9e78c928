#ifndef GHDIFF_GRAPH_HPP
#define GHDIFF_GRAPH_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ghdiff/errors.hpp"
#include "ghdiff/kvdoc.hpp"
#include "ghdiff/rng.hpp"

namespace ghdiff {

// Undirected network over agents 0..K-1. Self-loops are never stored as
// edges; self-weights come from the combination-matrix builder.
struct Topology {
  int num_agents = 0;
  std::set<std::pair<int, int>> edges;  // normalized to first < second

  void add_edge(int l, int k) {
    if (l == k) {
      throw ConfigParseError("topology: self-loop edge (" + std::to_string(l + 1) +
                             "," + std::to_string(k + 1) + ") not allowed");
    }
    if (l < 0 || k < 0 || l >= num_agents || k >= num_agents) {
      throw ConfigParseError("topology: edge (" + std::to_string(l + 1) + "," +
                             std::to_string(k + 1) + ") out of range for K=" +
                             std::to_string(num_agents));
    }
    edges.emplace(std::min(l, k), std::max(l, k));
  }

  bool has_edge(int l, int k) const {
    return edges.count({std::min(l, k), std::max(l, k)}) != 0;
  }

  std::vector<int> degrees() const {
    std::vector<int> deg(num_agents, 0);
    for (const auto& [l, k] : edges) {
      ++deg[l];
      ++deg[k];
    }
    return deg;
  }

  bool connected() const {
    if (num_agents <= 0) return false;
    std::vector<std::vector<int>> adj(num_agents);
    for (const auto& [l, k] : edges) {
      adj[l].push_back(k);
      adj[k].push_back(l);
    }
    std::vector<char> seen(num_agents, 0);
    std::vector<int> stack = {0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const int u : adj[v]) {
        if (!seen[u]) {
          seen[u] = 1;
          ++count;
          stack.push_back(u);
        }
      }
    }
    return count == num_agents;
  }

  static Topology path(int k) {
    Topology t;
    t.num_agents = k;
    for (int i = 0; i + 1 < k; ++i) t.add_edge(i, i + 1);
    return t;
  }

  static Topology ring(int k) {
    Topology t = path(k);
    if (k > 2) t.add_edge(k - 1, 0);
    return t;
  }

  static Topology complete(int k) {
    Topology t;
    t.num_agents = k;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) t.add_edge(i, j);
    return t;
  }

  static Topology star(int k) {
    Topology t;
    t.num_agents = k;
    for (int i = 1; i < k; ++i) t.add_edge(0, i);
    return t;
  }

  // Erdos-Renyi with rejection of disconnected samples.
  static Topology erdos_renyi_connected(int k, double edge_prob, RngStream& rng) {
    constexpr int kMaxAttempts = 20000;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      Topology t;
      t.num_agents = k;
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
          if (rng.uniform01() < edge_prob) t.add_edge(i, j);
      if (t.connected()) return t;
    }
    throw ConvergenceFailure("erdos_renyi_connected: no connected sample after " +
                             std::to_string(kMaxAttempts) + " attempts (K=" +
                             std::to_string(k) + ", p=" + std::to_string(edge_prob) +
                             ")");
  }

  // Text format: `K: <n>` and `edges: [[l,k],...]` with 1-indexed agents.
  static Topology parse(const std::string& text) {
    const KvDoc doc = KvDoc::parse(text);
    for (const std::string& key : doc.keys()) {
      if (key != "K" && key != "edges") {
        throw ConfigParseError("field '" + key + "': unknown topology field");
      }
    }
    Topology t;
    t.num_agents = static_cast<int>(doc.get_int("K"));
    if (t.num_agents <= 0) {
      throw ConfigParseError("field 'K': must be a positive integer");
    }
    if (doc.has("edges")) {
      for (const auto& [l, k] : doc.get_pair_list("edges")) {
        t.add_edge(static_cast<int>(l) - 1, static_cast<int>(k) - 1);
      }
    }
    return t;
  }

  static Topology load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open topology file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  std::string to_text() const {
    std::ostringstream out;
    out << "K: " << num_agents << "\n";
    out << "edges: [";
    bool first = true;
    for (const auto& [l, k] : edges) {
      if (!first) out << ",";
      out << "[" << (l + 1) << "," << (k + 1) << "]";
      first = false;
    }
    out << "]\n";
    return out.str();
  }
};

// Symmetric doubly stochastic weight matrix with its mixing parameter
// lambda2 = rho(A - (1/K) 11^T).
struct CombinationMatrix {
  int num_agents = 0;
  Eigen::MatrixXd weights;
  double lambda2 = 0.0;

  // Neighbor structure: support of the weights plus every self pair.
  bool is_neighbor(int l, int k) const {
    return l == k || weights(l, k) > 0.0;
  }
};

// Spectral radius of A - (1/K) 11^T. Full symmetric eigendecomposition up to
// K = 512; power iteration with the all-ones direction deflated beyond that.
inline double spectral_gap(const Eigen::MatrixXd& weights) {
  const auto k = weights.rows();
  if (k == 1) return 0.0;
  Eigen::MatrixXd centered =
      weights - Eigen::MatrixXd::Constant(k, k, 1.0 / static_cast<double>(k));
  if (k <= 512) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(centered);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::VectorXd x(k);
  for (Eigen::Index i = 0; i < k; ++i) x[i] = (i % 2 == 0) ? 1.0 : -1.0;
  x.array() -= x.mean();
  x.normalize();
  double sigma = 0.0;
  constexpr long kMaxIters = 100000;
  for (long it = 0; it < kMaxIters; ++it) {
    Eigen::VectorXd y = centered * x;
    y.array() -= y.mean();  // deflate the known nullspace direction
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    const double next = norm;
    y /= norm;
    x = y;
    if (it > 0 && std::abs(next - sigma) <= 1e-13 * std::max(1.0, next)) {
      return next;
    }
    sigma = next;
  }
  throw ConvergenceFailure("spectral_gap: power iteration did not converge");
}

inline double spectral_gap(const CombinationMatrix& a) {
  return spectral_gap(a.weights);
}

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Invariant checks for a candidate combination matrix. `topology`, when
// given, pins the sparsity pattern. Returns one result per invariant.
inline std::vector<CheckResult> validate_combination_matrix(
    const Eigen::MatrixXd& weights, const Topology* topology = nullptr,
    double tol = 1e-12) {
  std::vector<CheckResult> results;
  const auto k = weights.rows();
  const bool square = weights.cols() == k && k >= 1;
  results.push_back({"matrix_square", square,
                     square ? "" : "matrix is not square or is empty"});
  if (!square) return results;

  bool symmetric = true;
  for (Eigen::Index i = 0; i < k && symmetric; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j)
      if (weights(i, j) != weights(j, i)) {  // invariant holds exactly
        symmetric = false;
        break;
      }
  results.push_back({"symmetry", symmetric, symmetric ? "" : "a[l][k] != a[k][l]"});

  double worst_row = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    worst_row = std::max(worst_row, std::abs(weights.row(i).sum() - 1.0));
  results.push_back({"row_stochastic", worst_row <= tol,
                     "max row-sum error " + std::to_string(worst_row)});

  const bool nonneg = (weights.array() >= 0.0).all();
  results.push_back({"nonnegative", nonneg, nonneg ? "" : "negative entry present"});

  if (topology != nullptr) {
    bool sparse_ok = true;
    for (Eigen::Index i = 0; i < k && sparse_ok; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        if (i != j && weights(i, j) != 0.0 &&
            !topology->has_edge(static_cast<int>(i), static_cast<int>(j))) {
          sparse_ok = false;
          break;
        }
    results.push_back(
        {"sparsity", sparse_ok, sparse_ok ? "" : "nonzero weight off the edge set"});
  }

  const bool diag_pos = (weights.diagonal().array() > 0.0).all();
  results.push_back(
      {"positive_self_weights", diag_pos, diag_pos ? "" : "a[k][k] = 0 present"});

  // disconnected graphs carry an exact unit eigenvalue that rounding can pull
  // a hair below 1, so the mixing test uses a guard band
  double lambda2 = 1.0;
  bool lambda_ok = false;
  try {
    lambda2 = spectral_gap(weights);
    lambda_ok = lambda2 < 1.0 - 1e-9;
  } catch (const ConvergenceFailure&) {
  }
  results.push_back({"lambda2_below_one", lambda_ok,
                     "lambda2 = " + std::to_string(lambda2)});
  return results;
}

inline void require_valid(const std::vector<CheckResult>& results,
                          const std::string& context) {
  for (const CheckResult& r : results) {
    if (!r.pass) {
      throw StructureMismatch(context + ": invariant '" + r.name + "' failed (" +
                              r.detail + ")");
    }
  }
}

// Metropolis-Hastings weights: a[l][k] = 1/(1 + max(deg l, deg k)) on edges,
// diagonal absorbs the remainder.
inline CombinationMatrix metropolis_weights(const Topology& topology) {
  if (!topology.connected()) {
    throw DisconnectedGraph("metropolis_weights: topology with K=" +
                            std::to_string(topology.num_agents) +
                            " is not connected");
  }
  const int k = topology.num_agents;
  const std::vector<int> deg = topology.degrees();
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(k, k);
  for (const auto& [l, m] : topology.edges) {
    const double w = 1.0 / (1.0 + std::max(deg[l], deg[m]));
    weights(l, m) = w;
    weights(m, l) = w;
  }
  for (int i = 0; i < k; ++i) {
    weights(i, i) = 1.0 - weights.row(i).sum();
    if (weights(i, i) <= 0.0) {
      throw ZeroSelfWeight("metropolis_weights: a[" + std::to_string(i + 1) + "][" +
                           std::to_string(i + 1) +
                           "] = 0; apply blend_self_loops");
    }
  }
  CombinationMatrix a;
  a.num_agents = k;
  a.weights = std::move(weights);
  a.lambda2 = spectral_gap(a.weights);
  return a;
}

// (1 - theta) A + theta I; keeps every invariant and pushes each diagonal
// entry to at least theta.
inline CombinationMatrix blend_self_loops(const CombinationMatrix& a, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw ConfigParseError("blend_self_loops: theta must lie in (0,1), got " +
                           std::to_string(theta));
  }
  CombinationMatrix out;
  out.num_agents = a.num_agents;
  out.weights = (1.0 - theta) * a.weights;
  out.weights.diagonal().array() += theta;
  out.lambda2 = spectral_gap(out.weights);
  return out;
}

}  // namespace ghdiff

#endif  // GHDIFF_GRAPH_HPP
