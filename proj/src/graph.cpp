#include "fovtopo/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fovtopo/error.hpp"

namespace fovtopo {

DirectedGraph::DirectedGraph(std::size_t vertex_count, std::vector<Edge> edges)
    : n_(vertex_count), edges_(std::move(edges)) {
  if (n_ == 0) {
    throw InvalidGraphError("graph must have at least one vertex");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    if (e.tail >= n_ || e.head >= n_) {
      throw InvalidGraphError("edge " + std::to_string(k) + " references a vertex outside [0, " +
                              std::to_string(n_) + ")");
    }
    if (e.tail == e.head) {
      throw InvalidGraphError("edge " + std::to_string(k) + " is a self-loop on vertex " +
                              std::to_string(e.tail));
    }
    if (!seen.emplace(e.tail, e.head).second) {
      throw InvalidGraphError("duplicate edge (" + std::to_string(e.tail) + " -> " +
                              std::to_string(e.head) + ")");
    }
  }
}

std::optional<std::size_t> DirectedGraph::find_edge(std::size_t tail, std::size_t head) const {
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    if (edges_[k].tail == tail && edges_[k].head == head) {
      return k;
    }
  }
  return std::nullopt;
}

std::vector<std::size_t> DirectedGraph::out_neighbors(std::size_t v) const {
  std::vector<std::size_t> out;
  for (const auto& e : edges_) {
    if (e.tail == v) out.push_back(e.head);
  }
  return out;
}

std::vector<std::size_t> DirectedGraph::in_neighbors(std::size_t v) const {
  std::vector<std::size_t> in;
  for (const auto& e : edges_) {
    if (e.head == v) in.push_back(e.tail);
  }
  return in;
}

DirectedGraph relabel(const DirectedGraph& g, std::span<const std::size_t> perm) {
  if (perm.size() != g.vertex_count()) {
    throw std::invalid_argument("permutation size does not match vertex count");
  }
  std::vector<Edge> edges;
  edges.reserve(g.edge_count());
  for (const auto& e : g.edges()) {
    edges.push_back({perm[e.tail], perm[e.head]});
  }
  return DirectedGraph(g.vertex_count(), std::move(edges));
}

DirectedGraph disjoint_union(const DirectedGraph& a, const DirectedGraph& b) {
  std::vector<Edge> edges(a.edges().begin(), a.edges().end());
  const std::size_t shift = a.vertex_count();
  for (const auto& e : b.edges()) {
    edges.push_back({e.tail + shift, e.head + shift});
  }
  return DirectedGraph(a.vertex_count() + b.vertex_count(), std::move(edges));
}

IntMatrix incidence_exact(const DirectedGraph& g) {
  IntMatrix b = IntMatrix::Zero(static_cast<Eigen::Index>(g.vertex_count()),
                                static_cast<Eigen::Index>(g.edge_count()));
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto& e = g.edge(k);
    b(static_cast<Eigen::Index>(e.tail), static_cast<Eigen::Index>(k)) = 1;
    b(static_cast<Eigen::Index>(e.head), static_cast<Eigen::Index>(k)) = -1;
  }
  return b;
}

IntMatrix outgoing_incidence_exact(const DirectedGraph& g) {
  IntMatrix b = incidence_exact(g);
  return b.cwiseMax(std::int64_t{0});
}

IntMatrix structural_lyapunov_exact(const DirectedGraph& g) {
  const IntMatrix b = incidence_exact(g);
  const IntMatrix bp = outgoing_incidence_exact(g);
  const IntMatrix l = b * b.transpose();
  return l * (bp * b.transpose());
}

Matrix incidence_matrix(const DirectedGraph& g) { return incidence_exact(g).cast<double>(); }

Matrix outgoing_incidence_matrix(const DirectedGraph& g) {
  return outgoing_incidence_exact(g).cast<double>();
}

LaplacianPair laplacians(const DirectedGraph& g) {
  const IntMatrix b = incidence_exact(g);
  const IntMatrix bp = outgoing_incidence_exact(g);
  return {(b * b.transpose()).cast<double>(), (b * bp.transpose()).cast<double>()};
}

LaplacianPair edge_laplacians(const DirectedGraph& g) {
  if (g.edge_count() == 0) {
    throw EmptyGraphError("edge Laplacian undefined for a graph without edges");
  }
  const IntMatrix b = incidence_exact(g);
  const IntMatrix bp = outgoing_incidence_exact(g);
  return {(b.transpose() * b).cast<double>(), (b.transpose() * bp).cast<double>()};
}

Matrix structural_lyapunov_matrix(const DirectedGraph& g) {
  return structural_lyapunov_exact(g).cast<double>();
}

double default_psd_tolerance(const Matrix& s) {
  double inf_norm = 0.0;
  if (s.size() > 0) {
    inf_norm = s.cwiseAbs().rowwise().sum().maxCoeff();
  }
  return 1e-9 * std::max(1.0, inf_norm);
}

double min_symmetric_eigenvalue(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("min_symmetric_eigenvalue needs a square matrix");
  }
  if (m.size() == 0) {
    return 0.0;
  }
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw EigenSolverError("symmetric eigensolver did not converge on a " +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                           " matrix");
  }
  return solver.eigenvalues().minCoeff();
}

StabilityCertificate certify_stability(const DirectedGraph& g, double tol) {
  if (!(tol >= 0.0) || !std::isfinite(tol)) {
    throw std::invalid_argument("tolerance must be finite and non-negative");
  }
  const Matrix s = structural_lyapunov_matrix(g);
  const double min_eig = min_symmetric_eigenvalue(s);
  const bool invertible = edge_laplacian_condition(g) < kInvertibilityConditionLimit;
  return {min_eig >= -tol, min_eig, invertible, tol};
}

StabilityCertificate certify_stability(const DirectedGraph& g) {
  return certify_stability(g, default_psd_tolerance(structural_lyapunov_matrix(g)));
}

namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
  std::vector<std::size_t> parent;
};

// Edge indices along the unique path from `from` to `to` in a forest given as adjacency lists
// of (neighbor, edge index).
std::vector<std::size_t> forest_path(
    const std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& adj, std::size_t from,
    std::size_t to) {
  constexpr auto kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> via_edge(adj.size(), kUnset);
  std::vector<std::size_t> prev(adj.size(), kUnset);
  std::vector<bool> visited(adj.size(), false);
  std::queue<std::size_t> frontier;
  frontier.push(from);
  visited[from] = true;
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    if (v == to) break;
    for (const auto& [w, k] : adj[v]) {
      if (!visited[w]) {
        visited[w] = true;
        prev[w] = v;
        via_edge[w] = k;
        frontier.push(w);
      }
    }
  }
  std::vector<std::size_t> path;
  for (std::size_t v = to; v != from; v = prev[v]) {
    path.push_back(via_edge[v]);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

std::optional<std::vector<std::size_t>> find_undirected_cycle(const DirectedGraph& g) {
  DisjointSets sets(g.vertex_count());
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(g.vertex_count());
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const auto& e = g.edge(k);
    if (!sets.unite(e.tail, e.head)) {
      auto cycle = forest_path(adj, e.head, e.tail);
      cycle.push_back(k);
      return cycle;
    }
    adj[e.tail].emplace_back(e.head, k);
    adj[e.head].emplace_back(e.tail, k);
  }
  return std::nullopt;
}

bool is_forest(const DirectedGraph& g) { return !find_undirected_cycle(g).has_value(); }

double edge_laplacian_condition(const DirectedGraph& g) {
  if (g.edge_count() == 0) {
    return 1.0;
  }
  const IntMatrix b = incidence_exact(g);
  const Matrix le = (b.transpose() * b).cast<double>();
  Eigen::JacobiSVD<Matrix> svd(le);
  const auto& sv = svd.singularValues();
  const double smax = sv.maxCoeff();
  const double smin = sv.minCoeff();
  if (smin <= smax * std::numeric_limits<double>::epsilon()) {
    return std::numeric_limits<double>::infinity();
  }
  return smax / smin;
}

}  // namespace fovtopo
