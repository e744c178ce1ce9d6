"""Graph surfaces (x, y, zeta_1, ..., zeta_m) over a planar domain.

Slopes ``p = d zeta / dx`` and ``q = d zeta / dy`` are recomputed from the
stored heights on construction.  The area element uses the
sum-of-squared-minors form of the Gram determinant, which is exact for
``m = 1`` and never produces a negative radicand.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import DomainError, Field, PlanarDomain, integrate


def _axis_gradient(f: np.ndarray, h: float, axis: int, strict: bool = True) -> np.ndarray:
    """Derivative along ``axis`` of a NaN-masked array, order 2 wherever stencils allow."""
    f = np.moveaxis(f, axis, 0)
    n = f.shape[0]
    valued = np.isfinite(f)

    def shifted(k):
        out = np.full_like(f, np.nan)
        if k > 0:
            out[:-k] = f[k:]
        else:
            out[-k:] = f[: n + k]
        return out

    fp1, fm1 = shifted(1), shifted(-1)
    fp2, fm2 = shifted(2), shifted(-2)
    d = np.full_like(f, np.nan)
    central = np.isfinite(fp1) & np.isfinite(fm1)
    d[central] = (fp1[central] - fm1[central]) / (2 * h)
    fwd2 = ~central & np.isfinite(fp1) & np.isfinite(fp2)
    d[fwd2] = (-3 * f[fwd2] + 4 * fp1[fwd2] - fp2[fwd2]) / (2 * h)
    bwd2 = ~central & ~fwd2 & np.isfinite(fm1) & np.isfinite(fm2)
    d[bwd2] = (3 * f[bwd2] - 4 * fm1[bwd2] + fm2[bwd2]) / (2 * h)
    rest = ~(central | fwd2 | bwd2)
    fwd1 = rest & np.isfinite(fp1)
    d[fwd1] = (fp1[fwd1] - f[fwd1]) / h
    bwd1 = rest & ~fwd1 & np.isfinite(fm1)
    d[bwd1] = (f[bwd1] - fm1[bwd1]) / h
    isolated = valued & ~np.isfinite(d)
    if strict and np.any(isolated):
        raise DomainError("valued node without a valued neighbour; cannot difference")
    d[~valued] = np.nan
    return np.moveaxis(d, 0, axis)


def grid_gradient(d: PlanarDomain, values: np.ndarray, strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference (d/dx, d/dy) of node values with shape (ny, nx[, m]).

    With ``strict=False`` isolated values get NaN derivatives instead of an error.
    """
    return _axis_gradient(values, d.hx, 1, strict), _axis_gradient(values, d.hy, 0, strict)


def cross_term(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Sum over sigma < theta of (p_s q_t - p_t q_s)^2, along the last axis."""
    m = p.shape[-1]
    total = np.zeros(p.shape[:-1])
    for s in range(m):
        for t in range(s + 1, m):
            total = total + (p[..., s] * q[..., t] - p[..., t] * q[..., s]) ** 2
    return total


def area_element_from_slopes(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """W = sqrt(1 + |p|^2 + |q|^2 + |p|^2|q|^2 - (p.q)^2) for slopes of shape (..., m)."""
    return np.sqrt(1.0 + np.sum(p * p, axis=-1) + np.sum(q * q, axis=-1) + cross_term(p, q))


def cross_term_identity(p, q) -> tuple[float, float]:
    """Return (|p|^2|q|^2 - (p.q)^2, half the full double sum of squared 2x2 minors)."""
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise ValueError("p and q must have the same length")
    lhs = float(p @ p * (q @ q) - (p @ q) ** 2)
    minors = np.outer(p, q) - np.outer(q, p)
    rhs = float(0.5 * np.sum(minors * minors))
    return lhs, rhs


@dataclass(frozen=True)
class GraphSurface:
    """Heights ``zeta`` of shape (ny, nx, m); NaN at exterior nodes."""

    domain: PlanarDomain
    zeta: np.ndarray
    p: np.ndarray = field(init=False, repr=False, compare=False)
    q: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        z = np.array(self.zeta, dtype=float)
        if z.ndim == 2:
            z = z[..., None]
        if z.ndim != 3 or z.shape[:2] != self.domain.shape:
            raise DomainError(f"zeta shape {z.shape} does not match grid {self.domain.shape}")
        if z.shape[2] < 1:
            raise DomainError("codimension must be at least 1")
        z[~self.domain.valued_mask] = np.nan
        if not np.all(np.isfinite(z[self.domain.valued_mask])):
            raise DomainError("zeta must be finite on interior and boundary nodes")
        z.setflags(write=False)
        object.__setattr__(self, "zeta", z)
        p, q = grid_gradient(self.domain, z)
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_functions(cls, d: PlanarDomain, funcs) -> "GraphSurface":
        """Sample a list of callables f(x, y) (or parsed expressions) on the grid."""
        if callable(funcs):
            funcs = [funcs]
        comps = [np.broadcast_to(np.asarray(f(d.X, d.Y), dtype=float), d.shape) for f in funcs]
        return cls(d, np.stack(comps, axis=-1))

    @property
    def codim(self) -> int:
        return self.zeta.shape[2]

    def with_zeta(self, zeta: np.ndarray) -> "GraphSurface":
        return GraphSurface(self.domain, zeta)


def induced_metric(s: GraphSurface) -> tuple[Field, Field, Field]:
    p, q = s.p, s.q
    h11 = 1.0 + np.sum(p * p, axis=-1)
    h12 = np.sum(p * q, axis=-1)
    h22 = 1.0 + np.sum(q * q, axis=-1)
    return Field(s.domain, h11), Field(s.domain, h12), Field(s.domain, h22)


def area_element(s: GraphSurface) -> Field:
    W = area_element_from_slopes(s.p, s.q)
    valued = np.isfinite(W)
    assert np.all(W[valued] >= 1.0), "area element below 1"
    return Field(s.domain, W)


def area(s: GraphSurface) -> float:
    return integrate(area_element(s))


def boundary_slopes(s: GraphSurface) -> tuple[np.ndarray, np.ndarray]:
    """Slopes p, q at the boundary polyline points, shape (nb, m)."""
    d = s.domain
    return d.boundary_values(s.p), d.boundary_values(s.q)


def tangential_derivative(s: GraphSurface, sigma: int) -> np.ndarray:
    """(q_sigma, -p_sigma) . nu at each boundary polyline point (sigma is 1-based)."""
    if not isinstance(sigma, (int, np.integer)) or not 1 <= sigma <= s.codim:
        raise ValueError(f"component index must be in 1..{s.codim}, got {sigma!r}")
    pb, qb = boundary_slopes(s)
    nu = s.domain.boundary.normals
    return qb[:, sigma - 1] * nu[:, 0] - pb[:, sigma - 1] * nu[:, 1]


def surface_to_json(s: GraphSurface, meta: dict | None = None) -> dict:
    d = s.domain
    comps = []
    for k in range(s.codim):
        flat = s.zeta[..., k].ravel()
        comps.append([None if not np.isfinite(v) else float(v) for v in flat])
    out = {"domain": d.to_spec(), "codim": s.codim, "nx": d.nx, "ny": d.ny, "values": comps}
    if meta:
        out["meta"] = meta
    return out


def surface_from_json(obj: dict) -> GraphSurface:
    d = PlanarDomain.from_spec(obj["domain"])
    m = int(obj["codim"])
    vals = obj["values"]
    if len(vals) != m:
        raise DomainError(f"expected {m} value arrays, got {len(vals)}")
    comps = []
    for arr in vals:
        a = np.array([np.nan if v is None else v for v in arr], dtype=float)
        if a.size != d.nx * d.ny:
            raise DomainError("value array length does not match nx*ny")
        comps.append(a.reshape(d.shape))
    return GraphSurface(d, np.stack(comps, axis=-1))
