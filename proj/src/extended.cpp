#include "fovtopo/extended.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/LU>

#include "fovtopo/error.hpp"

namespace fovtopo {

ReplicaIndexing::ReplicaIndexing(std::size_t agents, std::size_t edges,
                                 std::size_t points_per_slot)
    : n_(agents), e_(edges), p_(points_per_slot) {
  if (n_ == 0 || e_ == 0 || p_ == 0) {
    throw std::invalid_argument("replica indexing needs n, |E| and P all at least 1");
  }
}

std::size_t ReplicaIndexing::canonical(std::size_t agent, std::size_t slot,
                                       std::size_t point) const {
  return (slot * p_ + point) * n_ + agent;
}

std::size_t ReplicaIndexing::agent_major(std::size_t agent, std::size_t slot,
                                         std::size_t point) const {
  return agent * p_ * e_ + slot * p_ + point;
}

ReplicaIndexing::Replica ReplicaIndexing::from_canonical(std::size_t flat) const {
  if (flat >= size()) {
    throw std::out_of_range("canonical index outside the extended state");
  }
  const std::size_t block = flat / n_;
  return {flat % n_, block / p_, block % p_};
}

Matrix ReplicaIndexing::to_canonical() const {
  const auto m = static_cast<Eigen::Index>(size());
  Matrix pi = Matrix::Zero(m, m);
  for (std::size_t flat = 0; flat < size(); ++flat) {
    const auto r = from_canonical(flat);
    pi(static_cast<Eigen::Index>(flat),
       static_cast<Eigen::Index>(agent_major(r.agent, r.slot, r.point))) = 1.0;
  }
  return pi;
}

namespace {

template <typename M>
M kron_impl(const M& a, const M& b) {
  M out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

IntMatrix identity(std::size_t r) {
  return IntMatrix::Identity(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
}

void require_edges(const DirectedGraph& g) {
  if (g.edge_count() == 0) {
    throw EmptyGraphError("extended system needs at least one edge");
  }
}

}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) { return kron_impl(a, b); }
IntMatrix kron(const IntMatrix& a, const IntMatrix& b) { return kron_impl(a, b); }

IntMatrix ones(std::size_t r) {
  return IntMatrix::Ones(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
}

ExtendedGraph build_extended_graph(const DirectedGraph& g, std::size_t points_per_slot) {
  require_edges(g);
  ReplicaIndexing idx(g.vertex_count(), g.edge_count(), points_per_slot);
  const IntMatrix eye = identity(idx.replicas());
  IntMatrix b = kron(eye, incidence_exact(g));
  IntMatrix bp = kron(eye, outgoing_incidence_exact(g));
  return {g, idx, std::move(b), std::move(bp)};
}

Matrix coupling_matrix(std::size_t n, std::size_t points_per_slot, std::size_t edges) {
  if (n == 0 || points_per_slot == 0 || edges == 0) {
    throw std::invalid_argument("coupling matrix needs n, P and |E| all at least 1");
  }
  return kron(identity(n), ones(points_per_slot * edges)).cast<double>();
}

IntMatrix coupling_matrix_canonical(const ReplicaIndexing& idx) {
  return kron(ones(idx.replicas()), identity(idx.agents()));
}

IntMatrix extended_structural_canonical(const ExtendedGraph& eg) {
  const IntMatrix& b = eg.incidence;
  const IntMatrix& bp = eg.outgoing_incidence;
  const IntMatrix c = coupling_matrix_canonical(eg.indexing);
  const IntMatrix bbt = b * b.transpose();
  return bbt * c * (bp * b.transpose());
}

Matrix extended_structural_matrix(const DirectedGraph& g, std::size_t points_per_slot) {
  const ExtendedGraph eg = build_extended_graph(g, points_per_slot);
  const Matrix pi = eg.indexing.to_canonical();
  const Matrix canonical = extended_structural_canonical(eg).cast<double>();
  Matrix agent_major = pi.transpose() * canonical * pi;

  const Matrix expected =
      kron(structural_lyapunov_exact(g), ones(eg.indexing.replicas())).cast<double>();
  const double residual = (agent_major - expected).cwiseAbs().maxCoeff();
  if (residual > 1e-12) {
    throw InternalIndexingError("extended structural matrix departs from S (x) J by " +
                                std::to_string(residual));
  }
  return agent_major;
}

std::size_t compact_index(std::size_t slot, std::size_t point, std::size_t side,
                          std::size_t points_per_slot) {
  return (slot * points_per_slot + point) * 2 + side;
}

SelectorMatrices build_selectors(const DirectedGraph& g, std::size_t points_per_slot) {
  require_edges(g);
  const ReplicaIndexing idx(g.vertex_count(), g.edge_count(), points_per_slot);
  const std::size_t ne = g.edge_count();
  const std::size_t columns = idx.replicas() * ne;

  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(columns), static_cast<Eigen::Index>(columns));
  for (std::size_t r = 0; r < idx.replicas(); ++r) {
    const std::size_t slot = r / points_per_slot;
    for (std::size_t k = 0; k < ne; ++k) {
      if (k == slot) {
        const auto c = static_cast<Eigen::Index>(r * ne + k);
        h(c, c) = 1.0;
      }
    }
  }

  Matrix tx = Matrix::Zero(static_cast<Eigen::Index>(idx.size()),
                           static_cast<Eigen::Index>(2 * idx.replicas()));
  for (std::size_t slot = 0; slot < ne; ++slot) {
    const Edge& e = g.edge(slot);
    for (std::size_t a = 0; a < points_per_slot; ++a) {
      tx(static_cast<Eigen::Index>(idx.canonical(e.tail, slot, a)),
         static_cast<Eigen::Index>(compact_index(slot, a, 0, points_per_slot))) = 1.0;
      tx(static_cast<Eigen::Index>(idx.canonical(e.head, slot, a)),
         static_cast<Eigen::Index>(compact_index(slot, a, 1, points_per_slot))) = 1.0;
    }
  }
  return {std::move(h), std::move(tx)};
}

Matrix edge_weight_matrix(const DirectedGraph& g, std::size_t points_per_slot,
                          std::span<const double> edge_weights) {
  require_edges(g);
  if (edge_weights.size() != g.edge_count()) {
    throw std::invalid_argument("need exactly one weight per edge");
  }
  const std::size_t ne = g.edge_count();
  const std::size_t replicas = points_per_slot * ne;
  Eigen::VectorXd diag(static_cast<Eigen::Index>(replicas * ne));
  for (std::size_t r = 0; r < replicas; ++r) {
    for (std::size_t k = 0; k < ne; ++k) {
      diag(static_cast<Eigen::Index>(r * ne + k)) = edge_weights[k];
    }
  }
  return diag.asDiagonal();
}

namespace {

void require_forest(const DirectedGraph& g) {
  if (auto cycle = find_undirected_cycle(g)) {
    std::string list;
    for (std::size_t k : *cycle) {
      if (!list.empty()) list += ", ";
      const auto& e = g.edge(k);
      list += std::to_string(k) + ":(" + std::to_string(e.tail) + "->" + std::to_string(e.head) +
              ")";
    }
    throw LemmaPreconditionError(*cycle, "edge Laplacian is singular; the graph contains the "
                                         "undirected cycle [" + list + "]");
  }
}

struct LemmaParts {
  Matrix b;
  Matrix lhs;  // H W_bar B_bar^T T_x
  Matrix w_hat;
};

LemmaParts lemma_parts(const DirectedGraph& g, std::size_t points_per_slot,
                       const Matrix& w_bar) {
  const ExtendedGraph eg = build_extended_graph(g, points_per_slot);
  const SelectorMatrices sel = build_selectors(g, points_per_slot);
  const Matrix b = eg.incidence.cast<double>();
  const Matrix lhs = sel.h * w_bar * b.transpose() * sel.t_x;

  const Matrix le = edge_laplacians(g).undirected;
  const Matrix le_inv = le.fullPivLu().inverse();
  const Matrix inv = kron(Matrix::Identity(static_cast<Eigen::Index>(eg.indexing.replicas()),
                                           static_cast<Eigen::Index>(eg.indexing.replicas())),
                          le_inv);
  Matrix w_hat = b * inv * lhs;
  return {b, lhs, std::move(w_hat)};
}

}  // namespace

Matrix flipped_weight_diagonal(const DirectedGraph& g, std::size_t points_per_slot,
                               std::span<const double> column_weights) {
  require_edges(g);
  require_forest(g);
  const std::size_t expected = points_per_slot * g.edge_count() * g.edge_count();
  if (column_weights.size() != expected) {
    throw std::invalid_argument("need one weight per extended edge column");
  }
  Eigen::VectorXd diag(static_cast<Eigen::Index>(expected));
  for (std::size_t c = 0; c < expected; ++c) {
    diag(static_cast<Eigen::Index>(c)) = column_weights[c];
  }
  return lemma_parts(g, points_per_slot, Matrix(diag.asDiagonal())).w_hat;
}

namespace {

LemmaParts checked_edge_lemma(const DirectedGraph& g, std::size_t points_per_slot,
                              std::span<const double> edge_weights) {
  require_edges(g);
  require_forest(g);
  for (double a : edge_weights) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("edge weights must be positive and finite");
    }
  }
  return lemma_parts(g, points_per_slot, edge_weight_matrix(g, points_per_slot, edge_weights));
}

}  // namespace

Matrix flipped_weight(const DirectedGraph& g, std::size_t points_per_slot,
                      std::span<const double> edge_weights) {
  return checked_edge_lemma(g, points_per_slot, edge_weights).w_hat;
}

double lemma_identity_residual(const DirectedGraph& g, std::size_t points_per_slot,
                               std::span<const double> edge_weights) {
  const LemmaParts parts = checked_edge_lemma(g, points_per_slot, edge_weights);
  return (parts.lhs - parts.b.transpose() * parts.w_hat).cwiseAbs().maxCoeff();
}

PsdPropagation psd_propagation(const DirectedGraph& g, std::size_t points_per_slot) {
  const StabilityCertificate base = certify_stability(g);
  const Matrix s_bar = extended_structural_matrix(g, points_per_slot);
  const double replicas = static_cast<double>(points_per_slot * g.edge_count());
  const double min_eig = min_symmetric_eigenvalue(s_bar);
  const double tol = base.tolerance_used * replicas;
  return {base.psd, base.min_eig_sym, min_eig, tol, min_eig >= -tol};
}

}  // namespace fovtopo
