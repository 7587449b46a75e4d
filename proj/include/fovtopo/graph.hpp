#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace fovtopo {

using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

struct Edge {
  std::size_t tail;
  std::size_t head;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Simple directed graph with a fixed edge order.
///
/// The edge order given at construction is the column order of every incidence-derived
/// matrix in this library, including the Kronecker replicas of the extended system.
class DirectedGraph {
public:
  /// Throws InvalidGraphError on self-loops, duplicate edges, indices outside [0, n), or n == 0.
  DirectedGraph(std::size_t vertex_count, std::vector<Edge> edges);

  std::size_t vertex_count() const noexcept { return n_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t k) const { return edges_.at(k); }

  std::optional<std::size_t> find_edge(std::size_t tail, std::size_t head) const;
  /// Heads of edges leaving `v`, in edge order.
  std::vector<std::size_t> out_neighbors(std::size_t v) const;
  /// Tails of edges entering `v`, in edge order.
  std::vector<std::size_t> in_neighbors(std::size_t v) const;

  friend bool operator==(const DirectedGraph&, const DirectedGraph&) = default;

private:
  std::size_t n_;
  std::vector<Edge> edges_;
};

/// Relabels vertex v as perm[v]; edge order is preserved.
DirectedGraph relabel(const DirectedGraph& g, std::span<const std::size_t> perm);

/// Vertices of `b` are shifted by a.vertex_count(); edges of `a` come first.
DirectedGraph disjoint_union(const DirectedGraph& a, const DirectedGraph& b);

// Exact (integer) forms. Entries are small integers, so the double versions below are
// exact conversions of these.
IntMatrix incidence_exact(const DirectedGraph& g);
IntMatrix outgoing_incidence_exact(const DirectedGraph& g);
IntMatrix structural_lyapunov_exact(const DirectedGraph& g);

/// n x |E|: +1 where edge j leaves vertex i, -1 where it enters.
Matrix incidence_matrix(const DirectedGraph& g);
/// Incidence with the -1 entries zeroed.
Matrix outgoing_incidence_matrix(const DirectedGraph& g);

struct LaplacianPair {
  Matrix undirected;  // B B^T  (or B^T B for the edge form)
  Matrix directed;    // B B+^T (or B^T B+)
};

LaplacianPair laplacians(const DirectedGraph& g);
/// Throws EmptyGraphError when the graph has no edges.
LaplacianPair edge_laplacians(const DirectedGraph& g);

/// S = B B^T B+ B^T.
Matrix structural_lyapunov_matrix(const DirectedGraph& g);

struct StabilityCertificate {
  bool psd;
  double min_eig_sym;
  bool edge_laplacian_invertible;
  double tolerance_used;
};

/// 1e-9 * max(1, ||S||_inf).
double default_psd_tolerance(const Matrix& s);

/// Smallest eigenvalue of (M + M^T) / 2. Throws EigenSolverError on non-convergence.
double min_symmetric_eigenvalue(const Matrix& m);

/// PSD test of the symmetric part of S. Throws std::invalid_argument for tol < 0.
StabilityCertificate certify_stability(const DirectedGraph& g, double tol);
/// Same, with default_psd_tolerance(S).
StabilityCertificate certify_stability(const DirectedGraph& g);

/// True iff the underlying undirected multigraph is acyclic (a two-cycle counts as a cycle).
bool is_forest(const DirectedGraph& g);

/// Edge indices of one undirected cycle, or nullopt for a forest.
std::optional<std::vector<std::size_t>> find_undirected_cycle(const DirectedGraph& g);

/// Ratio of extreme singular values of B^T B; +inf when singular. 1 for the empty edge set.
double edge_laplacian_condition(const DirectedGraph& g);

inline constexpr double kInvertibilityConditionLimit = 1e12;

}  // namespace fovtopo
