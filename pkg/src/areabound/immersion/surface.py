"""Parametric immersions X: B -> R^3 over the closed unit disc B.

An :class:`Immersion` wraps a vectorised map ``X(u, v) -> (..., 3)`` and
optional analytic first and second derivatives; missing derivatives come
from fourth-order central differences.  A polar P1 triangle mesh of B
carries the finite element quantities used for energies and stability.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from ..expr import parse

FD_FIRST = 1e-3
FD_SECOND = 2e-3


class ImmersionError(ValueError):
    pass


@dataclass(frozen=True)
class PolarMesh:
    """Centre node plus ``n_rho`` rings of ``n_phi`` nodes; P1 triangles."""

    n_rho: int
    n_phi: int

    @cached_property
    def nodes(self) -> np.ndarray:
        r = np.arange(1, self.n_rho + 1) / self.n_rho
        t = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        R, T = np.meshgrid(r, t, indexing="ij")
        ring = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1).reshape(-1, 2)
        return np.vstack([[0.0, 0.0], ring])

    def index(self, k, j):
        """Node index of ring ``k`` (1-based) and angle ``j``."""
        return 1 + (k - 1) * self.n_phi + np.mod(j, self.n_phi)

    @cached_property
    def triangles(self) -> np.ndarray:
        j = np.arange(self.n_phi)
        tris = [np.stack([np.zeros_like(j), self.index(1, j), self.index(1, j + 1)], axis=1)]
        for k in range(1, self.n_rho):
            a, b = self.index(k, j), self.index(k, j + 1)
            c, d = self.index(k + 1, j), self.index(k + 1, j + 1)
            tris.append(np.stack([a, c, d], axis=1))
            tris.append(np.stack([a, d, b], axis=1))
        return np.vstack(tris)

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        return self.index(self.n_rho, np.arange(self.n_phi))

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(len(self.nodes), bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @cached_property
    def shape_gradients(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-triangle parameter area and gradients of the three hat functions."""
        P = self.nodes[self.triangles]  # (T, 3, 2)
        e1 = P[:, 1] - P[:, 0]
        e2 = P[:, 2] - P[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        area = 0.5 * np.abs(det)
        inv = np.empty((len(P), 2, 2))
        inv[:, 0, 0] = e2[:, 1] / det
        inv[:, 0, 1] = -e2[:, 0] / det
        inv[:, 1, 0] = -e1[:, 1] / det
        inv[:, 1, 1] = e1[:, 0] / det
        # gradients of barycentric coordinates 1 and 2; coordinate 0 is minus their sum
        g12 = inv  # rows: d lambda_1, d lambda_2
        g0 = -(g12[:, 0] + g12[:, 1])
        grads = np.stack([g0, g12[:, 0], g12[:, 1]], axis=1)  # (T, 3, 2)
        return area, grads


def _fd1(f, u, v, axis, h=FD_FIRST):
    def at(s):
        return f(u + s * h, v) if axis == 0 else f(u, v + s * h)

    return (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h)


class Immersion:
    """A parametric surface over the closed unit disc.

    ``func(u, v)`` returns points with a trailing axis of length 3;
    ``first(u, v)`` (optional) returns ``(X_u, X_v)`` and ``second(u, v)``
    (optional) returns ``(X_uu, X_uv, X_vv)``.
    """

    def __init__(self, func: Callable, first: Callable | None = None,
                 second: Callable | None = None, name: str = "custom",
                 n_rho: int = 32, n_phi: int = 64, meta: dict | None = None):
        self._func = func
        self._first = first
        self._second = second
        self.name = name
        self.mesh = PolarMesh(n_rho, n_phi)
        self.meta = meta or {"name": name}

    def with_mesh(self, n_rho: int, n_phi: int) -> "Immersion":
        return Immersion(self._func, self._first, self._second, self.name, n_rho, n_phi, self.meta)

    def __call__(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.asarray(self._func(u, v), dtype=float)

    def first(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self._first is not None:
            return tuple(np.asarray(a, dtype=float) for a in self._first(u, v))
        return _fd1(self, u, v, 0), _fd1(self, u, v, 1)

    def second(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self._second is not None:
            return tuple(np.asarray(a, dtype=float) for a in self._second(u, v))
        if self._first is not None:
            fu = lambda a, b: self.first(a, b)[0]
            fv = lambda a, b: self.first(a, b)[1]
            return _fd1(fu, u, v, 0), _fd1(fu, u, v, 1), _fd1(fv, u, v, 1)
        h = FD_SECOND

        def at(du, dv):
            return self(u + du * h, v + dv * h)

        c = self(u, v)
        Xuu = (-at(2, 0) + 16 * at(1, 0) - 30 * c + 16 * at(-1, 0) - at(-2, 0)) / (12 * h * h)
        Xvv = (-at(0, 2) + 16 * at(0, 1) - 30 * c + 16 * at(0, -1) - at(0, -2)) / (12 * h * h)
        Xuv = _fd1(lambda a, b: _fd1(self, a, b, 1, h), u, v, 0, h)
        return Xuu, Xuv, Xvv

    # --- pointwise geometry -------------------------------------------------

    def metric(self, u, v):
        """First fundamental form (E, F, G) at parameter points."""
        Xu, Xv = self.first(u, v)
        return (np.sum(Xu * Xu, -1), np.sum(Xu * Xv, -1), np.sum(Xv * Xv, -1))

    def area_element(self, u, v) -> np.ndarray:
        Xu, Xv = self.first(u, v)
        return np.linalg.norm(np.cross(Xu, Xv), axis=-1)

    def normal(self, u, v) -> np.ndarray:
        Xu, Xv = self.first(u, v)
        c = np.cross(Xu, Xv)
        w = np.linalg.norm(c, axis=-1)
        bad = w < 1e-14
        if np.any(bad):
            uu, vv = np.broadcast_arrays(u, v)
            k = np.flatnonzero(np.ravel(bad))[0]
            raise ImmersionError(
                f"degenerate immersion at (u, v) = ({np.ravel(uu)[k]:.6g}, {np.ravel(vv)[k]:.6g})"
            )
        return c / w[..., None]

    def gauss_curvature_at(self, u, v) -> np.ndarray:
        E, F, G = self.metric(u, v)
        det = E * G - F * F
        if np.any(det <= 1e-28):
            raise ImmersionError("degenerate first fundamental form")
        N = self.normal(u, v)
        Xuu, Xuv, Xvv = self.second(u, v)
        L = np.sum(Xuu * N, -1)
        M = np.sum(Xuv * N, -1)
        Nn = np.sum(Xvv * N, -1)
        return (L * Nn - M * M) / det

    # --- mesh quantities -----------------------------------------------------

    @property
    def nodes(self) -> np.ndarray:
        return self.mesh.nodes

    def node_values(self) -> np.ndarray:
        n = self.mesh.nodes
        return self(n[:, 0], n[:, 1])


def unit_normal(i: Immersion) -> np.ndarray:
    """Unit normal at every mesh node, shape (nodes, 3)."""
    n = i.mesh.nodes
    return i.normal(n[:, 0], n[:, 1])


def gauss_curvature(i: Immersion) -> np.ndarray:
    """Gaussian curvature at every mesh node."""
    n = i.mesh.nodes
    return i.gauss_curvature_at(n[:, 0], n[:, 1])


# --- builtins ----------------------------------------------------------------------


def plane(**kw) -> Immersion:
    def X(u, v):
        return np.stack([u, v, np.zeros(np.broadcast(u, v).shape)], axis=-1)

    def first(u, v):
        shape = np.broadcast(u, v).shape
        return (np.broadcast_to([1.0, 0.0, 0.0], shape + (3,)),
                np.broadcast_to([0.0, 1.0, 0.0], shape + (3,)))

    def second(u, v):
        z = np.zeros(np.broadcast(u, v).shape + (3,))
        return z, z, z

    return Immersion(X, first, second, name="plane", meta={"builtin": "plane"}, **kw)


def sphere_cap(cap: float = 1.0, **kw) -> Immersion:
    """Unit-sphere cap of geodesic radius ``cap`` about the north pole (conformal chart)."""
    if not 0.0 < cap < math.pi:
        raise ImmersionError("cap radius must lie in (0, pi)")
    k = math.tan(cap / 2.0)

    def X(u, v):
        s2 = k * k * (u * u + v * v)
        d = 1.0 + s2
        return np.stack([2 * k * u / d, 2 * k * v / d, (1.0 - s2) / d], axis=-1)

    return Immersion(X, name="sphere", meta={"builtin": "sphere", "params": {"cap": cap}}, **kw)


def catenoid(scale: float = 1.0, u0: float = 0.0, v0: float = 0.0, **kw) -> Immersion:
    """Catenoid patch (cosh v cos u, cosh v sin u, v) with (u, v) = (u0, v0) + scale * (s, t)."""

    def X(s, t):
        u = u0 + scale * s
        v = v0 + scale * t
        return np.stack([np.cosh(v) * np.cos(u), np.cosh(v) * np.sin(u), v], axis=-1)

    meta = {"builtin": "catenoid", "params": {"scale": scale, "u0": u0, "v0": v0}}
    return Immersion(X, name="catenoid", meta=meta, **kw)


def scherk(scale: float = 1.0, **kw) -> Immersion:
    """Scherk's minimal graph (x, y, log(cos x / cos y)) with (x, y) = scale * (u, v)."""
    if not 0.0 < scale < math.pi / 2:
        raise ImmersionError("scale must lie in (0, pi/2)")

    def X(u, v):
        x = scale * u
        y = scale * v
        return np.stack([x, y, np.log(np.cos(x) / np.cos(y))], axis=-1)

    return Immersion(X, name="scherk", meta={"builtin": "scherk", "params": {"scale": scale}}, **kw)


def enneper(scale: float = 0.5, **kw) -> Immersion:
    """Enneper's minimal surface in conformal parameters, scaled in the parameter plane."""

    def X(u, v):
        a = scale * u
        b = scale * v
        return np.stack([a - a**3 / 3 + a * b * b, -b - a * a * b + b**3 / 3, a * a - b * b], axis=-1)

    return Immersion(X, name="enneper", meta={"builtin": "enneper", "params": {"scale": scale}}, **kw)


def graph(height: Callable | str, **kw) -> Immersion:
    """Graph (u, v, f(u, v)) of a scalar function or expression in u, v."""
    src = height if isinstance(height, str) else None
    f = parse(height, ("u", "v")) if isinstance(height, str) else height

    def X(u, v):
        z = np.broadcast_to(np.asarray(f(u, v), dtype=float), np.broadcast(u, v).shape)
        return np.stack(np.broadcast_arrays(u, v, z), axis=-1)

    meta = {"expr": ["u", "v", src]} if src else {"name": "graph"}
    return Immersion(X, name="graph", meta=meta, **kw)


def from_expressions(exprs, **kw) -> Immersion:
    """Immersion from three expressions in u, v."""
    if isinstance(exprs, str):
        exprs = [e for e in exprs.split(",")]
    if len(exprs) != 3:
        raise ImmersionError("need exactly three coordinate expressions")
    fs = [parse(e, ("u", "v")) for e in exprs]

    def X(u, v):
        shape = np.broadcast(u, v).shape
        return np.stack([np.broadcast_to(np.asarray(f(u, v), dtype=float), shape) for f in fs], axis=-1)

    def first(u, v):
        shape = np.broadcast(u, v).shape
        grads = [f.gradient(u, v) for f in fs]
        Xu = np.stack([np.broadcast_to(g[0], shape) for g in grads], axis=-1)
        Xv = np.stack([np.broadcast_to(g[1], shape) for g in grads], axis=-1)
        return Xu, Xv

    return Immersion(X, first, name="expr", meta={"expr": list(exprs)}, **kw)


def from_values(nodes: np.ndarray, values: np.ndarray, degree: int = 8, **kw) -> Immersion:
    """Least-squares Legendre polynomial surface through sampled points of B."""
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.shape != (len(nodes), 3):
        raise ImmersionError("values must have shape (points, 3)")
    from numpy.polynomial import legendre as leg

    deg = [degree, degree]
    V = leg.legvander2d(nodes[:, 0], nodes[:, 1], deg)
    if len(nodes) < V.shape[1]:
        raise ImmersionError(f"need at least {V.shape[1]} samples for degree {degree}")
    coef, *_ = np.linalg.lstsq(V, values, rcond=None)
    coefs = [coef[:, k].reshape(degree + 1, degree + 1) for k in range(3)]

    def X(u, v):
        return np.stack([leg.legval2d(u, v, c) for c in coefs], axis=-1)

    def first(u, v):
        out = []
        for ax in (0, 1):
            out.append(np.stack([leg.legval2d(u, v, leg.legder(c, axis=ax)) for c in coefs], axis=-1))
        return tuple(out)

    def second(u, v):
        d = lambda c, a, b: leg.legval2d(u, v, leg.legder(leg.legder(c, axis=a), axis=b))
        return tuple(np.stack([d(c, a, b) for c in coefs], axis=-1) for a, b in ((0, 0), (0, 1), (1, 1)))

    return Immersion(X, first, second, name="values", meta={"name": "values"}, **kw)


BUILTINS: dict[str, Callable[..., Immersion]] = {
    "plane": plane,
    "sphere": sphere_cap,
    "catenoid": catenoid,
    "scherk": scherk,
    "enneper": enneper,
}


def immersion_from_json(obj: dict | str | Path) -> Immersion:
    """Build from ``{"builtin": name, "params": {...}}``, ``{"expr": [x, y, z]}``
    or ``{"polar": {"n_rho", "n_phi"}, "values": [[x, y, z], ...]}`` (mesh node order)."""
    if isinstance(obj, (str, Path)):
        obj = json.loads(Path(obj).read_text())
    obj = dict(obj)
    mesh = obj.get("mesh", {})
    kw = {k: int(mesh[k]) for k in ("n_rho", "n_phi") if k in mesh}
    if "builtin" in obj:
        name = obj["builtin"]
        if name not in BUILTINS:
            raise ImmersionError(f"unknown builtin immersion {name!r}; known: {', '.join(BUILTINS)}")
        return BUILTINS[name](**obj.get("params", {}), **kw)
    if "expr" in obj:
        return from_expressions(obj["expr"], **kw)
    if "values" in obj:
        polar = obj.get("polar")
        if not polar:
            raise ImmersionError("'values' requires a 'polar' grid spec with n_rho and n_phi")
        m = PolarMesh(int(polar["n_rho"]), int(polar["n_phi"]))
        return from_values(m.nodes, np.asarray(obj["values"], dtype=float),
                           degree=int(obj.get("degree", 8)), **kw)
    raise ImmersionError("immersion file needs one of 'builtin', 'expr' or 'values'")
