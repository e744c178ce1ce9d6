"""Planar parameter domains on structured grids.

A :class:`PlanarDomain` is a tensor grid over a box together with a region
(a rectangle or a disc) that the grid covers or masks.  Every grid node is
classified as interior (strictly inside the region), boundary (Dirichlet
nodes on or just outside the region) or exterior.  Quadrature uses node
weights equal to the area of the node's dual cell clipped to the region, so
integrals of constants are exact for both rectangles and discs.

The closed boundary curve is carried separately as a positively oriented
polyline with analytic outward normals and arclength weights.  For
rectangles its vertices are the edge nodes of the grid; for discs they are
equally spaced points on the circle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

EXTERIOR, INTERIOR, BOUNDARY = 0, 1, 2

#: Dirichlet ring thickness around a masked region, in grid spacings.
RING_WIDTH = 2.0


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Boundary:
    """Closed boundary polyline with unit outward normals and arclength weights."""

    points: np.ndarray
    normals: np.ndarray
    ds: np.ndarray

    @property
    def length(self) -> float:
        return float(np.sum(self.ds))

    @property
    def angles(self) -> np.ndarray:
        return np.arctan2(self.normals[:, 1], self.normals[:, 0])


def _overlap(a0, a1, b0, b1):
    return np.clip(np.minimum(a1, b1) - np.maximum(a0, b0), 0.0, None)


def _quarter_disc_area(X, Y, R):
    """Area of [0, X] x [0, Y] inside the disc of radius R about the origin (X, Y >= 0)."""
    X = np.minimum(X, R)
    Y = np.minimum(Y, R)
    inside = X * X + Y * Y <= R * R
    xa = np.sqrt(np.clip(R * R - Y * Y, 0.0, None))
    xa = np.minimum(xa, X)

    def antiderivative(t):
        s = np.sqrt(np.clip(R * R - t * t, 0.0, None))
        return 0.5 * (t * s + R * R * np.arcsin(np.clip(t / R, -1.0, 1.0)))

    cut = Y * xa + antiderivative(X) - antiderivative(xa)
    return np.where(inside, X * Y, cut)


def disc_rectangle_area(x0, x1, y0, y1, cx, cy, R):
    """Exact area of the rectangle [x0,x1] x [y0,y1] intersected with a disc."""

    def G(X, Y):
        return np.sign(X) * np.sign(Y) * _quarter_disc_area(np.abs(X), np.abs(Y), R)

    x0, x1, y0, y1 = (np.asarray(a, dtype=float) for a in (x0 - cx, x1 - cx, y0 - cy, y1 - cy))
    area = G(x1, y1) - G(x0, y1) - G(x1, y0) + G(x0, y0)
    return np.clip(area, 0.0, None)


def _segment_distance(points, a, b):
    ab = b - a
    t = np.einsum("...i,...i->...", points - a, ab) / np.einsum("...i,...i->...", ab, ab)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.linalg.norm(points - closest, axis=-1)


@dataclass(frozen=True)
class PlanarDomain:
    """Structured grid over a rectangle or a masked disc.

    ``extents`` is the grid box ``(x0, x1, y0, y1)``; ``region`` is
    ``(ax, bx, ay, by)`` for rectangles and ``(cx, cy, R)`` for discs.
    Node arrays have shape ``(ny, nx)`` with ``X[j, i] = x_i``.
    """

    kind: str
    nx: int
    ny: int
    extents: tuple[float, float, float, float]
    region: tuple[float, ...]
    offset: float = 0.0
    _parent_region: tuple[float, ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("unit_square", "rectangle", "unit_disc", "disc"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if self.nx < 3 or self.ny < 3:
            raise DomainError("need at least 3 nodes per direction")
        x0, x1, y0, y1 = self.extents
        if not (x1 > x0 and y1 > y0):
            raise DomainError("degenerate grid extents")

    # --- construction -------------------------------------------------

    @classmethod
    def unit_square(cls, n: int = 65, ny: int | None = None) -> "PlanarDomain":
        ny = n if ny is None else ny
        return cls("unit_square", n, ny, (0.0, 1.0, 0.0, 1.0), (0.0, 1.0, 0.0, 1.0))

    @classmethod
    def rectangle(cls, x0, x1, y0, y1, nx: int = 65, ny: int | None = None) -> "PlanarDomain":
        ny = nx if ny is None else ny
        box = (float(x0), float(x1), float(y0), float(y1))
        return cls("rectangle", nx, ny, box, box)

    @classmethod
    def unit_disc(cls, n: int = 65, ny: int | None = None) -> "PlanarDomain":
        ny = n if ny is None else ny
        return cls("unit_disc", n, ny, (-1.0, 1.0, -1.0, 1.0), (0.0, 0.0, 1.0))

    @classmethod
    def from_spec(cls, spec) -> "PlanarDomain":
        """Build from a dict, a JSON file path, or a ``kind:n`` shorthand."""
        if isinstance(spec, PlanarDomain):
            return spec
        if isinstance(spec, (str, Path)):
            text = str(spec)
            if text.endswith(".json") or Path(text).is_file():
                spec = json.loads(Path(text).read_text())
            else:
                kind, _, n = text.partition(":")
                spec = {"kind": kind, "nx": int(n) if n else 65}
        spec = dict(spec)
        kind = spec.pop("kind", None)
        nx = int(spec.pop("nx", 65))
        ny = int(spec.pop("ny", nx))
        if kind == "unit_square":
            d = cls.unit_square(nx, ny)
        elif kind == "unit_disc":
            d = cls.unit_disc(nx, ny)
        elif kind == "rectangle":
            ext = spec.pop("extents", None)
            if ext is None or len(ext) != 4:
                raise DomainError("rectangle needs 'extents': [x0, x1, y0, y1]")
            d = cls.rectangle(*ext, nx=nx, ny=ny)
        else:
            raise DomainError(f"unknown domain kind {kind!r}")
        if spec:
            raise DomainError(f"unknown domain keys: {sorted(spec)}")
        return d

    def to_spec(self) -> dict:
        spec = {"kind": self.kind, "nx": self.nx, "ny": self.ny}
        if self.kind == "rectangle":
            spec["extents"] = list(self.extents)
        if self.offset:
            spec["offset"] = self.offset
        return spec

    # --- grid ---------------------------------------------------------

    @property
    def is_disc(self) -> bool:
        return self.kind in ("unit_disc", "disc")

    @cached_property
    def hx(self) -> float:
        return (self.extents[1] - self.extents[0]) / (self.nx - 1)

    @cached_property
    def hy(self) -> float:
        return (self.extents[3] - self.extents[2]) / (self.ny - 1)

    @property
    def h(self) -> float:
        return max(self.hx, self.hy)

    @cached_property
    def xs(self) -> np.ndarray:
        return np.linspace(self.extents[0], self.extents[1], self.nx)

    @cached_property
    def ys(self) -> np.ndarray:
        return np.linspace(self.extents[2], self.extents[3], self.ny)

    @cached_property
    def X(self) -> np.ndarray:
        return np.broadcast_to(self.xs[None, :], (self.ny, self.nx))

    @cached_property
    def Y(self) -> np.ndarray:
        return np.broadcast_to(self.ys[:, None], (self.ny, self.nx))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    # --- region geometry ----------------------------------------------

    def signed_distance(self, x, y) -> np.ndarray:
        """Signed distance to the region boundary (negative inside)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.is_disc:
            cx, cy, R = self.region
            return np.hypot(x - cx, y - cy) - R
        ax, bx, ay, by = self.region
        dx = np.maximum(ax - x, x - bx)
        dy = np.maximum(ay - y, y - by)
        outside = np.hypot(np.clip(dx, 0, None), np.clip(dy, 0, None))
        inside = np.minimum(np.maximum(dx, dy), 0.0)
        return outside + inside

    @cached_property
    def inradius(self) -> float:
        if self.is_disc:
            return self.region[2]
        ax, bx, ay, by = self.region
        return 0.5 * min(bx - ax, by - ay)

    @cached_property
    def exact_area(self) -> float:
        if self.is_disc:
            return math.pi * self.region[2] ** 2
        ax, bx, ay, by = self.region
        return (bx - ax) * (by - ay)

    @cached_property
    def exact_perimeter(self) -> float:
        if self.is_disc:
            return 2.0 * math.pi * self.region[2]
        ax, bx, ay, by = self.region
        return 2.0 * ((bx - ax) + (by - ay))

    # --- node classification ------------------------------------------

    @cached_property
    def node_kind(self) -> np.ndarray:
        sd = self.signed_distance(self.X, self.Y)
        tiny = 1e-12 * max(1.0, self.inradius)
        kind = np.full(self.shape, EXTERIOR, dtype=np.int8)
        inside = sd < -tiny
        if self.offset > 0.0:
            inside &= self._polyline_distance_parent() > self.offset
        kind[inside] = INTERIOR
        ring = ~inside & (sd <= RING_WIDTH * self.h * (1 + 1e-9))
        kind[ring] = BOUNDARY
        return kind

    @property
    def interior_mask(self) -> np.ndarray:
        return self.node_kind == INTERIOR

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.node_kind == BOUNDARY

    @property
    def valued_mask(self) -> np.ndarray:
        return self.node_kind != EXTERIOR

    @cached_property
    def closure_mask(self) -> np.ndarray:
        """Nodes lying in the closed region."""
        tiny = 1e-12 * max(1.0, self.inradius)
        return self.signed_distance(self.X, self.Y) <= tiny

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weight per node: dual-cell area clipped to the region."""
        x0 = self.X - 0.5 * self.hx
        x1 = self.X + 0.5 * self.hx
        y0 = self.Y - 0.5 * self.hy
        y1 = self.Y + 0.5 * self.hy
        if self.is_disc:
            cx, cy, R = self.region
            w = np.zeros(self.shape)
            near = np.abs(self.signed_distance(self.X, self.Y)) < self.h
            full = ~near & (self.signed_distance(self.X, self.Y) < 0)
            w[full] = self.hx * self.hy
            w[near] = disc_rectangle_area(x0[near], x1[near], y0[near], y1[near], cx, cy, R)
            return w
        ax, bx, ay, by = self.region
        return _overlap(x0, x1, ax, bx) * _overlap(y0, y1, ay, by)

    # --- boundary polyline ----------------------------------------------

    @cached_property
    def boundary(self) -> Boundary:
        if self.is_disc:
            cx, cy, R = self.region
            nb = 4 * max(self.nx - 1, self.ny - 1)
            t = 2.0 * np.pi * np.arange(nb) / nb
            normals = np.stack([np.cos(t), np.sin(t)], axis=1)
            points = np.array([cx, cy]) + R * normals
        else:
            points, normals = self._rectangle_polyline()
        seg = np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)
        ds = 0.5 * (seg + np.roll(seg, 1))
        return Boundary(points, normals, ds)

    def _rectangle_polyline(self):
        ax, bx, ay, by = self.region
        corners = [(ax, ay), (bx, ay), (bx, by), (ax, by)]
        edge_normals = [(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)]
        steps = [self.hx, self.hy, self.hx, self.hy]
        pts, nrm = [], []
        for k in range(4):
            a = np.array(corners[k])
            b = np.array(corners[(k + 1) % 4])
            n_seg = max(1, int(round(np.linalg.norm(b - a) / steps[k])))
            t = np.arange(n_seg) / n_seg
            pts.append(a + t[:, None] * (b - a))
            e = np.tile(edge_normals[k], (n_seg, 1))
            diag = np.add(edge_normals[k], edge_normals[(k - 1) % 4])
            e[0] = diag / np.linalg.norm(diag)
            nrm.append(e)
        return np.concatenate(pts), np.concatenate(nrm)

    def interpolate(self, values: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Bilinear interpolation of node values (trailing component axes allowed)."""
        values = np.asarray(values, dtype=float)
        px = (points[:, 0] - self.extents[0]) / self.hx
        py = (points[:, 1] - self.extents[2]) / self.hy
        i = np.clip(np.floor(px + 1e-9).astype(int), 0, self.nx - 2)
        j = np.clip(np.floor(py + 1e-9).astype(int), 0, self.ny - 2)
        t = np.clip(px - i, 0.0, 1.0)
        s = np.clip(py - j, 0.0, 1.0)
        extra = (slice(None),) + (None,) * (values.ndim - 2)
        t = t[extra]
        s = s[extra]
        out = 0.0
        for di, dj, wgt in ((0, 0, (1 - t) * (1 - s)), (1, 0, t * (1 - s)),
                            (0, 1, (1 - t) * s), (1, 1, t * s)):
            corner = values[j + dj, i + di]
            out = out + np.where(wgt == 0.0, 0.0, wgt * corner)
        return out

    def boundary_values(self, values: np.ndarray) -> np.ndarray:
        return self.interpolate(values, self.boundary.points)

    # --- offsets --------------------------------------------------------

    def _polyline_distance_parent(self) -> np.ndarray:
        parent = PlanarDomain(self.kind, self.nx, self.ny, self.extents, self._parent_region)
        return polyline_distance(parent, np.stack([self.X.ravel(), self.Y.ravel()], axis=1)).reshape(self.shape)


def polyline_distance(d: PlanarDomain, points: np.ndarray) -> np.ndarray:
    """Distance from points to the closed boundary polyline of ``d``."""
    verts = d.boundary.points
    nb = len(verts)
    tree = cKDTree(verts)
    k = min(4, nb)
    _, idx = tree.query(points, k=k)
    idx = np.atleast_2d(idx.T).T if idx.ndim == 1 else idx
    best = np.full(len(points), np.inf)
    for col in range(idx.shape[1]):
        for shift in (-1, 0):
            a = verts[(idx[:, col] + shift) % nb]
            b = verts[(idx[:, col] + shift + 1) % nb]
            best = np.minimum(best, _segment_distance(points, a, b))
    return best


@dataclass
class Field:
    """Node values on a domain grid: shape ``(ny, nx)`` or ``(ny, nx, m)``."""

    domain: PlanarDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[:2] != self.domain.shape:
            raise DomainError(
                f"field shape {self.values.shape[:2]} does not match grid {self.domain.shape}"
            )

    @classmethod
    def from_function(cls, d: PlanarDomain, f) -> "Field":
        return cls(d, np.asarray(f(d.X, d.Y), dtype=float) * np.ones(d.shape))

    def to_json(self) -> dict:
        vals = self.values.reshape(self.domain.ny * self.domain.nx, -1)
        rows = [[None if not np.isfinite(v) else float(v) for v in col] for col in vals.T]
        return {"nx": self.domain.nx, "ny": self.domain.ny, "values": rows if len(rows) > 1 else rows[0]}


ScalarField = Field
VectorField = Field


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


def area_of_domain(d: PlanarDomain) -> float:
    return float(np.sum(d.weights))


def boundary_length(d: PlanarDomain) -> float:
    return d.boundary.length


def integrate(f, d: PlanarDomain | None = None) -> float:
    """Quadrature of a node field with the domain's clipped-cell weights."""
    if d is None:
        d = f.domain
    v = _values(f)
    w = d.weights
    return float(np.sum(np.where(w > 0, w * np.where(w > 0, v, 0.0), 0.0)))


def sup_norm(f, region: str = "interior", d: PlanarDomain | None = None) -> float:
    """Maximum of |f| over the closed domain ('interior') or its boundary curve."""
    if d is None:
        d = f.domain
    v = _values(f)
    bvals = np.abs(d.boundary_values(v)).ravel()
    if region == "boundary":
        samples = bvals
    elif region == "interior":
        samples = np.concatenate([np.abs(v[d.closure_mask]).ravel(), bvals])
    else:
        raise DomainError(f"region must be 'interior' or 'boundary', not {region!r}")
    if samples.size == 0:
        raise DomainError("empty region")
    if not np.all(np.isfinite(samples)):
        raise DomainError("field has no value at some node of the region")
    return float(samples.max())


def interior_subdomain(d: PlanarDomain, nu: float) -> PlanarDomain:
    """The set of points farther than ``nu`` from the boundary, on the same grid."""
    if not nu > 0:
        raise DomainError("offset must be positive")
    if nu >= d.inradius:
        raise DomainError(f"offset {nu} leaves an empty set (inradius {d.inradius})")
    if d.is_disc:
        cx, cy, R = d.region
        region = (cx, cy, R - nu)
        kind = "disc"
    else:
        ax, bx, ay, by = d.region
        region = (ax + nu, bx - nu, ay + nu, by - nu)
        kind = "rectangle"
    parent = d._parent_region if d._parent_region is not None else d.region
    return PlanarDomain(kind, d.nx, d.ny, d.extents, region, offset=d.offset + nu,
                        _parent_region=parent)
