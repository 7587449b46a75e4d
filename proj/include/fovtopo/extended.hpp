#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fovtopo/graph.hpp"

namespace fovtopo {

/// Replica layout of the extended state.
///
/// Every agent is replicated once per (edge slot e, point a), with P points per slot (the agent
/// itself plus its virtual points). The canonical flat index is block-major by replica and then
/// by agent:
///
///     canonical(i, e, a) = (e * P + a) * n + i        a in [0, P)
///
/// so that each replica block is a full copy of the vertex set and the extended incidence
/// matrix is literally I_{P|E|} (x) B. The per-agent stacking of the analysis state (all replicas
/// of agent 1, then agent 2, ...) is the agent-major index
///
///     agent_major(i, e, a) = i * P|E| + e * P + a
///
/// in which the coupling matrix is I_n (x) J_{P|E|}.
class ReplicaIndexing {
public:
  ReplicaIndexing(std::size_t agents, std::size_t edges, std::size_t points_per_slot);

  std::size_t agents() const noexcept { return n_; }
  std::size_t edges() const noexcept { return e_; }
  std::size_t points() const noexcept { return p_; }
  /// P |E|
  std::size_t replicas() const noexcept { return p_ * e_; }
  /// n P |E|
  std::size_t size() const noexcept { return n_ * p_ * e_; }

  std::size_t canonical(std::size_t agent, std::size_t slot, std::size_t point) const;
  std::size_t agent_major(std::size_t agent, std::size_t slot, std::size_t point) const;

  struct Replica {
    std::size_t agent;
    std::size_t slot;
    std::size_t point;
  };
  Replica from_canonical(std::size_t flat) const;

  /// Permutation matrix with Pi(canonical(r), agent_major(r)) = 1, so that
  /// M_canonical = Pi M_agent_major Pi^T.
  Matrix to_canonical() const;

private:
  std::size_t n_;
  std::size_t e_;
  std::size_t p_;
};

struct ExtendedGraph {
  DirectedGraph base;
  ReplicaIndexing indexing;
  /// n P|E| x P|E|^2, equal to I_{P|E|} (x) B. Column c = r * |E| + k is base edge k in replica
  /// block r = slot * P + point.
  IntMatrix incidence;
  IntMatrix outgoing_incidence;
};

inline constexpr std::size_t kDefaultPointsPerSlot = 4;

Matrix kron(const Matrix& a, const Matrix& b);
IntMatrix kron(const IntMatrix& a, const IntMatrix& b);
/// All-ones r x r.
IntMatrix ones(std::size_t r);

/// Throws EmptyGraphError for |E| = 0 and std::invalid_argument for P = 0.
ExtendedGraph build_extended_graph(const DirectedGraph& g, std::size_t points_per_slot);

/// I_n (x) J_{P|E|} in agent-major order.
Matrix coupling_matrix(std::size_t n, std::size_t points_per_slot, std::size_t edges);
/// The same coupling written in canonical order: J_{P|E|} (x) I_n.
IntMatrix coupling_matrix_canonical(const ReplicaIndexing& idx);

/// B_bar B_bar^T C B_bar_+ B_bar^T evaluated in canonical order, exact.
IntMatrix extended_structural_canonical(const ExtendedGraph& eg);

/// Extended structural matrix in agent-major order. Computes the product in canonical order,
/// maps it back, and compares against S (x) J_{P|E|}; throws InternalIndexingError on mismatch.
Matrix extended_structural_matrix(const DirectedGraph& g, std::size_t points_per_slot);

struct SelectorMatrices {
  /// P|E|^2 diagonal 0/1: keeps base edge k only inside its own replica slots.
  Matrix h;
  /// n P|E| x 2 P|E|: maps the compact state onto the canonical extended state.
  Matrix t_x;
};

/// Compact state layout consumed by T_x: for each (slot e, point a) a tail entry (the a-th point
/// of edge e's tail agent) and a head entry (edge e's head agent), at
///
///     compact(e, a, side) = (e * P + a) * 2 + side      side 0 = tail, 1 = head
std::size_t compact_index(std::size_t slot, std::size_t point, std::size_t side,
                          std::size_t points_per_slot);

SelectorMatrices build_selectors(const DirectedGraph& g, std::size_t points_per_slot);

/// W_bar for per-base-edge weights, in canonical column order (I_{P|E|} (x) diag(a)).
Matrix edge_weight_matrix(const DirectedGraph& g, std::size_t points_per_slot,
                          std::span<const double> edge_weights);

/// W_hat = B_bar (B_bar^T B_bar)^-1 H W_bar B_bar^T T_x for per-edge weights.
/// Throws LemmaPreconditionError (carrying one cycle) when the graph is not a forest and
/// std::invalid_argument for non-positive weights.
Matrix flipped_weight(const DirectedGraph& g, std::size_t points_per_slot,
                      std::span<const double> edge_weights);

/// Same construction for an arbitrary diagonal W_bar (one weight per extended edge column).
Matrix flipped_weight_diagonal(const DirectedGraph& g, std::size_t points_per_slot,
                               std::span<const double> column_weights);

/// max |H W_bar B_bar^T T_x - B_bar^T W_hat| for per-edge weights.
double lemma_identity_residual(const DirectedGraph& g, std::size_t points_per_slot,
                               std::span<const double> edge_weights);

struct PsdPropagation {
  bool base_psd;
  double base_min_eig_sym;
  double extended_min_eig_sym;
  double tolerance;  // base tolerance scaled by P|E|
  bool extended_psd;
};

PsdPropagation psd_propagation(const DirectedGraph& g, std::size_t points_per_slot);

}  // namespace fovtopo
