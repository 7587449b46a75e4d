"""Directed limited field-of-view topology control."""

from ._fovtopo import (
    ConfigError,
    DirectedGraph,
    EmptyGraphError,
    Error,
    InvalidGraphError,
    LemmaPreconditionError,
    ResolutionError,
    UnsupportedGeometryError,
    certify_stability,
    default_approximation,
    edge_laplacians,
    extended_structural_matrix,
    fit_fov,
    incidence_matrix,
    is_forest,
    laplacians,
    lemma_identity_residual,
    outgoing_incidence_matrix,
    psd_propagation,
    simulate,
    structural_lyapunov_matrix,
)

__all__ = [
    "ConfigError",
    "DirectedGraph",
    "EmptyGraphError",
    "Error",
    "InvalidGraphError",
    "LemmaPreconditionError",
    "ResolutionError",
    "UnsupportedGeometryError",
    "certify_stability",
    "default_approximation",
    "edge_laplacians",
    "extended_structural_matrix",
    "fit_fov",
    "incidence_matrix",
    "is_forest",
    "laplacians",
    "lemma_identity_residual",
    "outgoing_incidence_matrix",
    "psd_propagation",
    "simulate",
    "structural_lyapunov_matrix",
]
