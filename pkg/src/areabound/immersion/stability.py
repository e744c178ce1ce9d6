"""Discrete stability constant: the smallest ratio of weighted Dirichlet energy
to the curvature-weighted mass integral of (q - K) W phi^2 over test functions
vanishing on the boundary."""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse.linalg as spla

from ..expr import parse
from .surface import Immersion, ImmersionError
from .weights import WeightMatrix, _mass, stiffness_matrices

#: operator-norm threshold below which the mass form counts as vanishing
DEGENERATE = 1e-14


def _q_values(q, u, v):
    if q is None:
        return np.zeros(np.shape(u))
    if isinstance(q, (int, float)):
        return np.full(np.shape(u), float(q))
    if isinstance(q, str):
        q = parse(q, ("u", "v"))
    return np.broadcast_to(np.asarray(q(u, v), dtype=float), np.shape(u))


def stability_forms(i: Immersion, G: WeightMatrix, q=None):
    """Weighted stiffness and (q - K) W mass matrices restricted to interior nodes."""
    mesh = i.mesh
    n = mesh.nodes
    K_nodes = i.gauss_curvature_at(n[:, 0], n[:, 1])
    excess = _q_values(q, n[:, 0], n[:, 1]) - K_nodes
    if np.any(excess < -1e-8):
        k = int(np.argmin(excess))
        raise ImmersionError(
            f"q - K = {excess[k]:.3g} < 0 at (u, v) = ({n[k, 0]:.4g}, {n[k, 1]:.4g})"
        )
    c = mesh.centroids
    coef = (_q_values(q, c[:, 0], c[:, 1]) - i.gauss_curvature_at(c[:, 0], c[:, 1]))
    coef = np.clip(coef, 0.0, None) * i.area_element(c[:, 0], c[:, 1])
    _, A = stiffness_matrices(i, G)
    B = _mass(i, coef)
    idx = mesh.interior_nodes
    return A[idx][:, idx].tocsc(), B[idx][:, idx].tocsc()


def mu_stability_estimate(i: Immersion, G: WeightMatrix, q=None) -> float:
    """Smallest generalized Rayleigh quotient A(phi)/B(phi); ``inf`` when B vanishes."""
    A, B = stability_forms(i, G, q)
    if spla.norm(B, ord=1) <= DEGENERATE:
        return math.inf
    v0 = np.ones(A.shape[0])
    theta = spla.eigsh(B, k=1, M=A, which="LA", v0=v0, return_eigenvectors=False)[0]
    if theta <= DEGENERATE:
        return math.inf
    return float(1.0 / theta)


def rayleigh_quotient(i: Immersion, G: WeightMatrix, phi, q=None) -> float:
    """A(phi)/B(phi) for one test field given at interior mesh nodes or as a callable."""
    A, B = stability_forms(i, G, q)
    idx = i.mesh.interior_nodes
    n = i.mesh.nodes[idx]
    vals = np.asarray(phi(n[:, 0], n[:, 1]) if callable(phi) else phi, dtype=float)
    den = float(vals @ (B @ vals))
    if den <= 0.0:
        return math.inf
    return float(vals @ (A @ vals)) / den
