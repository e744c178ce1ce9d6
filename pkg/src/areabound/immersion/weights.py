"""Weight matrices G(X, Z), parametric integrands F(X, Z) and weighted energies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..expr import parse
from .surface import Immersion, ImmersionError


class WeightError(ValueError):
    pass


def _unit(Z):
    Z = np.asarray(Z, dtype=float)
    n = np.linalg.norm(Z, axis=-1, keepdims=True)
    if np.any(n == 0.0):
        raise WeightError("direction Z must be non-zero")
    return Z / n


def fibonacci_sphere(n: int) -> np.ndarray:
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z * z)
    t = math.pi * (1.0 + math.sqrt(5.0)) * k
    return np.stack([r * np.cos(t), r * np.sin(t), z], axis=1)


def direction_samples(n: int = 200, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    axes = np.vstack([np.eye(3), -np.eye(3)])
    rand = rng.normal(size=(n, 3))
    return np.vstack([axes, fibonacci_sphere(n), rand / np.linalg.norm(rand, axis=1, keepdims=True)])


@dataclass
class WeightMatrix:
    """Symmetric 3x3 weight field G(X, Z) with eccentricity bound ``g0``."""

    func: Callable
    g0: float
    provenance: str = "user"
    name: str = "custom"

    def __call__(self, X, Z) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Z = np.asarray(Z, dtype=float)
        return np.asarray(self.func(X, Z), dtype=float)

    def check(self, X=None, Z=None, n: int = 100, seed: int = 0) -> dict:
        """Maximum deviations from the scale invariance, fixed-direction,
        spectral and unit-determinant properties over samples."""
        rng = np.random.default_rng(seed)
        if X is None:
            X = rng.uniform(-1.0, 1.0, (n, 3))
        if Z is None:
            Z = rng.normal(size=(n, 3))
        G = self(X, Z)
        lam = rng.uniform(0.1, 10.0, len(Z))
        G_scaled = self(X, Z * lam[:, None])
        GZ = np.einsum("...ij,...j->...i", G, Z)
        ev = np.linalg.eigvalsh(0.5 * (G + np.swapaxes(G, -1, -2)))
        lo, hi = 1.0 / (1.0 + self.g0), 1.0 + self.g0
        return {
            "scale_invariance": float(np.max(np.abs(G - G_scaled))),
            "fixes_direction": float(np.max(np.abs(GZ - Z) / np.linalg.norm(Z, axis=-1)[:, None])),
            "spectrum_excess": float(max(np.max(lo - ev), np.max(ev - hi), 0.0)),
            "determinant": float(np.max(np.abs(np.linalg.det(G) - 1.0))),
            "symmetry": float(np.max(np.abs(G - np.swapaxes(G, -1, -2)))),
        }

    def satisfies_axioms(self, tol: float = 1e-10, **kw) -> bool:
        c = self.check(**kw)
        return all(v <= tol for v in c.values())


def _frame(Z):
    """Orthonormal tangent frame (e1, e2) with e1 x e2 = n for n = Z/|Z|."""
    n = _unit(Z)
    ex = np.broadcast_to([1.0, 0.0, 0.0], n.shape)
    ey = np.broadcast_to([0.0, 1.0, 0.0], n.shape)
    use_y = np.abs(np.sum(n * ex, -1)) > 0.9
    ref = np.where(use_y[..., None], ey, ex)
    e1 = ref - np.sum(ref * n, -1, keepdims=True) * n
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(n, e1)
    return n, e1, e2


def identity_weight() -> WeightMatrix:
    def G(X, Z):
        shape = np.broadcast_shapes(np.shape(X)[:-1], np.shape(Z)[:-1])
        return np.broadcast_to(np.eye(3), shape + (3, 3)).copy()

    return WeightMatrix(G, 0.0, "builtin", "identity")


def anisotropic_weight(a: float = 2.0) -> WeightMatrix:
    """diag(a, 1/a, 1) in the frame (e1, e2, Z/|Z|); exact g0 = max(a, 1/a) - 1."""
    if a <= 0:
        raise WeightError("anisotropy must be positive")

    def G(X, Z):
        n, e1, e2 = _frame(Z)
        outer = lambda w: w[..., :, None] * w[..., None, :]
        return a * outer(e1) + outer(e2) / a + outer(n)

    return WeightMatrix(G, max(a, 1.0 / a) - 1.0, "builtin", f"anisotropic:a={a:g}")


# --- parametric integrands F(X, Z) --------------------------------------------------


class ParametricIntegrand:
    """F(X, Z), positively 1-homogeneous in Z.

    ``hessian_z`` and ``mixed`` (F_XZ with rows X, columns Z) fall back to
    central differences.
    """

    name = "custom"

    def __init__(self, func: Callable | None = None, name: str = "custom"):
        self._func = func
        self.name = name

    def value(self, X, Z):
        return np.asarray(self._func(X, Z), dtype=float)

    def hessian_z(self, X, Z) -> np.ndarray:
        return _fd_hessian(lambda W: self.value(X, W), np.asarray(Z, dtype=float))

    def mixed(self, X, Z) -> np.ndarray:
        return fd_mixed(self, X, Z)


def _fd_hessian(f, Z, h=1e-4):
    Z = np.asarray(Z, dtype=float)
    H = np.empty(Z.shape + (3,))
    step = h * (1.0 + np.linalg.norm(Z, axis=-1))
    f0 = f(Z)
    for i in range(3):
        for j in range(i, 3):
            def at(si, sj):
                W = Z.copy()
                W[..., i] += si * step
                W[..., j] += sj * step
                return f(W)

            if i == j:
                val = (at(1, 0) - 2 * f0 + at(-1, 0)) / step**2
            else:
                val = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * step**2)
            H[..., i, j] = H[..., j, i] = val
    return H


def fd_mixed(F: ParametricIntegrand, X, Z, h: float = 1e-4) -> np.ndarray:
    """Central-difference F_{x^i z^j}."""
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    out = np.empty(np.broadcast_shapes(X.shape, Z.shape)[:-1] + (3, 3))
    for i in range(3):
        for j in range(3):
            def at(si, sj):
                Xs = X.copy()
                Zs = Z.copy()
                Xs[..., i] += si * h
                Zs[..., j] += sj * h
                return F.value(Xs, Zs)

            out[..., i, j] = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h)
    return out


class NormIntegrand(ParametricIntegrand):
    """F(Z) = |Z|."""

    name = "norm"

    def value(self, X, Z):
        return np.linalg.norm(Z, axis=-1)

    def hessian_z(self, X, Z):
        Z = np.asarray(Z, dtype=float)
        r = np.linalg.norm(Z, axis=-1)[..., None, None]
        n = Z / r[..., 0]
        return (np.eye(3) - n[..., :, None] * n[..., None, :]) / r

    def mixed(self, X, Z):
        return np.zeros(np.broadcast_shapes(np.shape(X), np.shape(Z))[:-1] + (3, 3))


class QuadraticNormIntegrand(ParametricIntegrand):
    """F(Z) = sqrt(Z A Z^t) for a symmetric positive definite A."""

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)
        self.name = "quadratic_norm"

    def value(self, X, Z):
        return np.sqrt(np.einsum("...i,ij,...j->...", Z, self.A, Z))

    def hessian_z(self, X, Z):
        Z = np.asarray(Z, dtype=float)
        AZ = Z @ self.A
        F = np.sqrt(np.sum(AZ * Z, axis=-1))[..., None, None]
        return self.A / F - AZ[..., :, None] * AZ[..., None, :] / F**3

    def mixed(self, X, Z):
        return np.zeros(np.broadcast_shapes(np.shape(X), np.shape(Z))[:-1] + (3, 3))


class ScaledNormIntegrand(ParametricIntegrand):
    """F(X, Z) = Gamma(X) |Z| with Gamma an expression in x, y, z."""

    def __init__(self, gamma: str):
        self.gamma = parse(gamma, ("x", "y", "z"))
        self.name = f"scaled_norm:{gamma}"

    def _g(self, X):
        X = np.asarray(X, dtype=float)
        return self.gamma.with_gradient(X[..., 0], X[..., 1], X[..., 2])

    def value(self, X, Z):
        g, _ = self._g(X)
        return g * np.linalg.norm(Z, axis=-1)

    def hessian_z(self, X, Z):
        g, _ = self._g(X)
        return np.asarray(g)[..., None, None] * NormIntegrand().hessian_z(X, Z)

    def mixed(self, X, Z):
        _, grad = self._g(X)
        Z = np.asarray(Z, dtype=float)
        n = Z / np.linalg.norm(Z, axis=-1, keepdims=True)
        shape = np.broadcast_shapes(np.shape(X), Z.shape)
        gvec = np.stack([np.broadcast_to(gi, shape[:-1]) for gi in grad], axis=-1)
        return gvec[..., :, None] * n[..., None, :]


def _restricted(F: ParametricIntegrand, X, Z):
    """Projected F_ZZ at unit Z, its two tangential eigenvalues, and the unit direction."""
    n = _unit(Z)
    H = F.hessian_z(X, n)
    P = np.eye(3) - n[..., :, None] * n[..., None, :]
    B = P @ H @ P
    B = 0.5 * (B + np.swapaxes(B, -1, -2))
    ev = np.linalg.eigvalsh(B)
    tangential = ev[..., 1:]  # the projected kernel eigenvalue sits at the bottom when elliptic
    if np.any(tangential <= 0.0):
        raise WeightError("integrand Hessian has fewer than two positive eigenvalues (not elliptic)")
    return B, tangential, n


def det_prime(F: ParametricIntegrand, X, Z) -> np.ndarray:
    """Product of the two positive eigenvalues of F_ZZ restricted to Z-orthogonal directions."""
    _, ev, _ = _restricted(F, X, Z)
    return ev[..., 0] * ev[..., 1]


def eccentricity(G: Callable, X, Z) -> float:
    ev = np.linalg.eigvalsh(G(X, Z))
    return float(max(np.max(ev[..., -1] - 1.0), np.max(1.0 / ev[..., 0] - 1.0), 0.0))


def weight_from_integrand(F: ParametricIntegrand, X_samples=None, n_dirs: int = 200,
                          seed: int = 0) -> WeightMatrix:
    """G = (F_ZZ / sqrt(det') + Z Z^t)^{-1} at unit Z, with sampled eccentricity g0."""

    def G(X, Z):
        X = np.asarray(X, dtype=float)
        B, ev, n = _restricted(F, X, Z)
        dp = np.sqrt(ev[..., 0] * ev[..., 1])[..., None, None]
        M = B / dp + n[..., :, None] * n[..., None, :]
        return np.linalg.inv(M)

    rng = np.random.default_rng(seed)
    if X_samples is None:
        X_samples = np.vstack([np.zeros((1, 3)), rng.uniform(-1.0, 1.0, (7, 3))])
    X_samples = np.atleast_2d(np.asarray(X_samples, dtype=float))
    g0 = 0.0
    for s in (seed, seed + 1):  # second pass re-samples to certify the first
        dirs = direction_samples(n_dirs, s)
        Xs = np.repeat(X_samples, len(dirs), axis=0)
        Zs = np.tile(dirs, (len(X_samples), 1))
        g0 = max(g0, eccentricity(G, Xs, Zs))
    if g0 < 1e-12:
        g0 = 0.0
    return WeightMatrix(G, g0, "from_integrand", f"from:{F.name}")


def weighted_mean_curvature(F: ParametricIntegrand, i: Immersion) -> np.ndarray:
    """trace F_XZ(X, N) / (2 sqrt(det' F_ZZ(X, N))) at mesh nodes."""
    n = i.mesh.nodes
    X = i(n[:, 0], n[:, 1])
    N = i.normal(n[:, 0], n[:, 1])
    tr = np.trace(F.mixed(X, N), axis1=-2, axis2=-1)
    return tr / (2.0 * np.sqrt(det_prime(F, X, N)))


def weighted_metric_at(i: Immersion, G: WeightMatrix, u, v) -> np.ndarray:
    """h_ij = X_{u^i} G(X, N) X_{u^j}^t, shape (..., 2, 2)."""
    Xu, Xv = i.first(u, v)
    X = i(u, v)
    N = i.normal(u, v)
    Gm = G(X, N)
    J = np.stack([Xu, Xv], axis=-2)  # (..., 2, 3)
    h = J @ Gm @ np.swapaxes(J, -1, -2)
    h = 0.5 * (h + np.swapaxes(h, -1, -2))
    det = h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] ** 2
    if np.any(h[..., 0, 0] <= 0.0) or np.any(det <= 0.0):
        raise WeightError("weighted metric not positive definite")
    return h


def weighted_metric(i: Immersion, G: WeightMatrix) -> np.ndarray:
    n = i.mesh.nodes
    return weighted_metric_at(i, G, n[:, 0], n[:, 1])


def first_fundamental_form(i: Immersion, u, v) -> np.ndarray:
    E, F, Gm = i.metric(u, v)
    return np.stack([np.stack([E, F], -1), np.stack([F, Gm], -1)], -2)


# --- finite element energies ---------------------------------------------------------


def _stiffness(i: Immersion, metric: np.ndarray):
    """P1 stiffness of the form int grad(phi) W metric^{-1} grad(phi) du dv."""
    import scipy.sparse as sp

    mesh = i.mesh
    area, grads = mesh.shape_gradients
    c = mesh.centroids
    W = i.area_element(c[:, 0], c[:, 1])
    coef = W[:, None, None] * np.linalg.inv(metric)  # (T, 2, 2)
    local = area[:, None, None] * np.einsum("tai,tij,tbj->tab", grads, coef, grads)
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = len(mesh.nodes)
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _mass(i: Immersion, weight: np.ndarray):
    """P1 mass matrix with a per-triangle coefficient."""
    import scipy.sparse as sp

    mesh = i.mesh
    area, _ = mesh.shape_gradients
    base = (np.ones((3, 3)) + np.eye(3)) / 12.0
    local = (area * weight)[:, None, None] * base
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = len(mesh.nodes)
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def stiffness_matrices(i: Immersion, G: WeightMatrix):
    """(unweighted, weighted) P1 Dirichlet stiffness matrices over all mesh nodes."""
    c = i.mesh.centroids
    g = first_fundamental_form(i, c[:, 0], c[:, 1])
    h = weighted_metric_at(i, G, c[:, 0], c[:, 1])
    return _stiffness(i, g), _stiffness(i, h)


def _node_field(i: Immersion, phi) -> np.ndarray:
    n = i.mesh.nodes
    if callable(phi):
        vals = np.asarray(phi(n[:, 0], n[:, 1]), dtype=float)
    elif isinstance(phi, str):
        vals = np.asarray(parse(phi, ("u", "v"))(n[:, 0], n[:, 1]), dtype=float)
    else:
        vals = np.asarray(phi, dtype=float)
    vals = np.broadcast_to(vals, (len(n),)).astype(float)
    return vals


def dirichlet_energies(i: Immersion, G: WeightMatrix, phi) -> tuple[float, float]:
    """Unweighted and weighted Dirichlet energies of a test field vanishing on the boundary."""
    vals = _node_field(i, phi)
    if np.max(np.abs(vals[i.mesh.boundary_nodes])) > 1e-12:
        raise ImmersionError("test field must vanish on the boundary")
    A0, AG = stiffness_matrices(i, G)
    return float(vals @ (A0 @ vals)), float(vals @ (AG @ vals))
