"""Area inequalities evaluated as left side, right side and slack.

Each evaluator returns a :class:`BoundReport`.  The verdict is
``not_applicable`` whenever an audited hypothesis fails, otherwise ``holds``
when ``slack >= -tolerance`` (``slack > -tolerance`` for strict bounds) and
``violated`` in the remaining case.  Norms are taken from the discrete data:
grid sup over the closed domain and polyline sup on the boundary curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .domain import (
    PlanarDomain,
    area_of_domain,
    boundary_length,
    integrate,
    interior_subdomain,
    sup_norm,
)
from .graph_surface import GraphSurface, area, area_element, tangential_derivative
from .integrands import (
    FermatWeight,
    Integrand,
    RightSide,
    check_A3,
    coercivity_check,
    estimate_k0,
    estimate_m1,
    h0_bound,
    nonneg_radial_check,
)
from .immersion.geodesic import GeodesicPolarChart, chart_boundary_curvatures
from .immersion.stability import _q_values
from .immersion.surface import Immersion
from .solver import SolveResult

SQRT8 = math.sqrt(8.0)
#: slack allowed when auditing sampled constants against declared ones
CONSTANT_TOL = 1e-8
#: tolerance on K <= K0 when sampling the Gaussian curvature
CURVATURE_TOL = 1e-8

BOUND_IDS = (
    "thm2.13", "eq2.23", "eq2.25", "eq2.27", "eq2.31",
    "eq3.8", "eq3.19", "eq3.22", "eq3.24", "eq3.25", "eq3.28",
    "eq4.21", "eq4.38",
)


@dataclass(frozen=True)
class Hypothesis:
    name: str
    satisfied: bool
    value: float

    def to_dict(self) -> dict:
        return {"name": self.name, "satisfied": bool(self.satisfied), "value": _num(self.value)}


@dataclass
class BoundReport:
    bound_id: str
    lhs: float
    rhs: float
    hypotheses: list[Hypothesis] = field(default_factory=list)
    inputs: dict[str, Any] = field(default_factory=dict)
    grid: dict[str, Any] = field(default_factory=dict)
    tolerance: float = 0.0
    strict: bool = False
    rhs_alternate: float | None = None

    @property
    def slack(self) -> float:
        return float(self.rhs - self.lhs)

    @property
    def applicable(self) -> bool:
        return all(h.satisfied for h in self.hypotheses)

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "not_applicable"
        ok = self.slack > -self.tolerance if self.strict else self.slack >= -self.tolerance
        return "holds" if ok else "violated"

    def hypothesis(self, name: str) -> Hypothesis:
        for h in self.hypotheses:
            if h.name == name:
                return h
        raise KeyError(name)

    def to_dict(self) -> dict:
        out = {
            "bound_id": self.bound_id,
            "lhs": _num(self.lhs),
            "rhs": _num(self.rhs),
            "slack": _num(self.slack),
            "verdict": self.verdict,
            "strict": self.strict,
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "inputs": {k: _num(v) for k, v in self.inputs.items()},
            "grid": dict(self.grid),
            "tolerance": self.tolerance,
        }
        if self.rhs_alternate is not None:
            out["rhs_alternate"] = _num(self.rhs_alternate)
        return out


def _num(v):
    """JSON-safe number: infinities and NaN become strings."""
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


# --- shared helpers -----------------------------------------------------------


def _surface_of(s) -> tuple[GraphSurface, list[Hypothesis]]:
    """Unwrap a solve result, auditing convergence; plain surfaces are taken as given."""
    if isinstance(s, SolveResult):
        return s.surface, [Hypothesis("solver_converged", s.converged, s.residual)]
    if isinstance(s, GraphSurface):
        return s, []
    raise TypeError(f"expected SolveResult or GraphSurface, got {type(s).__name__}")


def _graph_grid(d: PlanarDomain) -> dict:
    return {"kind": d.kind, "nx": d.nx, "ny": d.ny, "h": d.h, "region": list(d.region)}


def _chart_grid(chart: GeodesicPolarChart) -> dict:
    return {"kind": "geodesic_polar", "n_rho": chart.n_rho, "n_phi": chart.n_phi,
            "radius": chart.radius}


@dataclass(frozen=True)
class GraphNorms:
    """Per-component sup norms of heights over the closed domain and on its boundary."""

    interior: np.ndarray
    boundary: np.ndarray
    tangential: np.ndarray

    @classmethod
    def of(cls, s: GraphSurface) -> "GraphNorms":
        d = s.domain
        zi = np.array([sup_norm(s.zeta[..., k], "interior", d) for k in range(s.codim)])
        zb = np.array([sup_norm(s.zeta[..., k], "boundary", d) for k in range(s.codim)])
        dt = np.array([float(np.max(np.abs(tangential_derivative(s, k + 1))))
                       for k in range(s.codim)])
        return cls(zi, zb, dt)


def _rhs_sup(R: RightSide, s: GraphSurface) -> float:
    """Sup of |R(x, y, zeta)| over valued closure nodes."""
    if R.is_zero:
        return 0.0
    d = s.domain
    m = d.closure_mask
    vals = R.value(d.X[m], d.Y[m], s.zeta[..., 0][m])
    return float(np.max(np.abs(vals)))


def structural_hypotheses(F: Integrand, k0: float | None, m1: float | None):
    """Audit gradient boundedness, restricted ellipticity and zero-gradient normalization.

    Returns ``(hypotheses, k0, m1)`` with declared constants defaulting to the
    integrand's certified ones, then to the sampled estimates.
    """
    k0_est = estimate_k0(F)
    m1_est = estimate_m1(F)
    if k0 is None:
        k0 = F.k0 if F.k0 is not None else k0_est
    if m1 is None:
        m1 = F.m1 if F.m1 is not None else m1_est
    hyps = [
        Hypothesis("gradient_bounded", math.isfinite(k0_est) and k0_est <= k0 + CONSTANT_TOL,
                   k0_est),
        Hypothesis("ellipticity_positive", m1 > 0.0 and m1_est >= m1 - CONSTANT_TOL, m1_est),
        Hypothesis("zero_gradient_normalized", check_A3(F), 0.0),
    ]
    if m1 > 0.0:
        slack = coercivity_check(F, m1)
        hyps.append(Hypothesis("coercivity", slack >= -CONSTANT_TOL, slack))
    return hyps, float(k0), float(m1)


# --- graphs in R^3 ---------------------------------------------------------------


def bound_divergence_graph(s, F: Integrand, R=None, k0: float | None = None,
                           m1: float | None = None, tolerance: float = 0.0) -> BoundReport:
    """Area bound for a solution of a divergence-form equation with right side R.

    ``rhs_alternate`` replaces ``|zeta|_0 |R|_0 A[Omega]`` by the integral of
    ``|zeta R|`` over the domain.
    """
    surf, hyps = _surface_of(s)
    if surf.codim != 1:
        raise ValueError("divergence-form bounds need codimension 1")
    R = RightSide.parse(R)
    structural, k0, m1 = structural_hypotheses(F, k0, m1)
    hyps += structural
    d = surf.domain
    norms = GraphNorms.of(surf)
    A_omega = area_of_domain(d)
    L = boundary_length(d)
    R0 = _rhs_sup(R, surf)
    z0, zb = float(norms.interior[0]), float(norms.boundary[0])
    boundary_term = zb * k0 * L / m1 if m1 > 0 else math.inf
    rhs = (1.0 + z0 * R0 / m1) * A_omega + boundary_term if m1 > 0 else math.inf
    if R.is_zero:
        zR = 0.0
    else:
        zR = integrate(np.abs(surf.zeta[..., 0] * R.value(d.X, d.Y, surf.zeta[..., 0])), d)
    alt = A_omega + zR / m1 + boundary_term if m1 > 0 else math.inf
    return BoundReport(
        "eq3.8", area(surf), rhs, hyps,
        {"k0": k0, "m1": m1, "R_sup": R0, "zeta_sup": z0, "zeta_boundary_sup": zb,
         "domain_area": A_omega, "boundary_length": L, "zeta_R_l1": zR,
         "integrand": F.name, "R": R.describe()},
        _graph_grid(d), tolerance, rhs_alternate=alt,
    )


def bound_homogeneous(s, F: Integrand, k0: float | None = None, m1: float | None = None,
                      tolerance: float = 0.0) -> BoundReport:
    """Homogeneous case R = 0 of the divergence-form bound."""
    r = bound_divergence_graph(s, F, None, k0, m1, tolerance)
    r.bound_id = "eq3.19"
    r.rhs_alternate = None
    return r


def bound_minimal_graph(s, tolerance: float = 0.0) -> BoundReport:
    """Minimal graph bound with the certified area constants k0 = 1, m1 = 1/sqrt(8)."""
    surf, hyps = _surface_of(s)
    if surf.codim != 1:
        raise ValueError("minimal graph bound needs codimension 1")
    d = surf.domain
    norms = GraphNorms.of(surf)
    A_omega = area_of_domain(d)
    L = boundary_length(d)
    zb = float(norms.boundary[0])
    rhs = A_omega + SQRT8 * zb * L
    return BoundReport(
        "eq3.22", area(surf), rhs, hyps,
        {"k0": 1.0, "m1": 1.0 / SQRT8, "zeta_boundary_sup": zb, "domain_area": A_omega,
         "boundary_length": L},
        _graph_grid(d), tolerance,
    )


def bound_prescribed_H(s, h0: float, sharp: bool = False, tolerance: float = 0.0) -> BoundReport:
    """Prescribed mean curvature bound with |H|_0 = h0; ``sharp`` drops the sqrt(8) factors."""
    surf, hyps = _surface_of(s)
    if surf.codim != 1:
        raise ValueError("prescribed mean curvature bound needs codimension 1")
    if h0 < 0:
        raise ValueError("h0 must be non-negative")
    d = surf.domain
    norms = GraphNorms.of(surf)
    A_omega = area_of_domain(d)
    L = boundary_length(d)
    z0, zb = float(norms.interior[0]), float(norms.boundary[0])
    c = 1.0 if sharp else SQRT8
    rhs = (1.0 + 2.0 * c * h0 * z0) * A_omega + c * zb * L
    return BoundReport(
        "eq3.25" if sharp else "eq3.24", area(surf), rhs, hyps,
        {"h0": h0, "zeta_sup": z0, "zeta_boundary_sup": zb, "domain_area": A_omega,
         "boundary_length": L, "sharp": bool(sharp)},
        _graph_grid(d), tolerance,
    )


def bound_interior(s, F: Integrand, R=None, k0: float | None = None, m1: float | None = None,
                   nu: float = 0.25, tolerance: float = 0.0) -> BoundReport:
    """Area of the part of the graph over the points at distance > nu from the boundary."""
    surf, hyps = _surface_of(s)
    if surf.codim != 1:
        raise ValueError("interior bound needs codimension 1")
    d = surf.domain
    sub = interior_subdomain(d, nu)
    R = RightSide.parse(R)
    structural, k0, m1 = structural_hypotheses(F, k0, m1)
    hyps += structural
    hyps.append(Hypothesis("radial_flux_nonnegative", nonneg_radial_check(F), 0.0))
    W = area_element(surf).values
    lhs = integrate(np.where(sub.weights > 0, W, 0.0), sub)
    A_omega = area_of_domain(d)
    R0 = _rhs_sup(R, surf)
    z0 = float(GraphNorms.of(surf).interior[0])
    rhs = A_omega + (2.0 * k0 / nu + R0) * z0 * A_omega / m1 if m1 > 0 else math.inf
    return BoundReport(
        "eq3.28", lhs, rhs, hyps,
        {"k0": k0, "m1": m1, "nu": nu, "R_sup": R0, "zeta_sup": z0, "domain_area": A_omega,
         "interior_area": area_of_domain(sub), "integrand": F.name, "R": R.describe()},
        _graph_grid(d), tolerance,
    )


# --- graphs of higher codimension -------------------------------------------------


def smallness_factor(m: int, gamma: FermatWeight, zeta_sup: float) -> float:
    """1 - sqrt(2) m^2 Gamma_2 max|zeta|_0 / Gamma_0, fixed to 1 for m = 1 or constant Gamma."""
    if m == 1 or gamma.gamma2 == 0.0:
        return 1.0
    return 1.0 - math.sqrt(2.0) * m * m * gamma.gamma2 * zeta_sup / gamma.gamma0


def _codim_rhs(surf: GraphSurface, h0: float):
    d = surf.domain
    m = surf.codim
    norms = GraphNorms.of(surf)
    A_omega = area_of_domain(d)
    L = boundary_length(d)
    zb = float(norms.boundary.max())
    z0 = float(norms.interior.max())
    mixed = float(np.max(norms.boundary * norms.tangential))
    rhs = A_omega + m * L * zb + 2.0 * m * h0 * A_omega * z0
    if m > 1:
        rhs += m * m * L * mixed
    inputs = {"codim": m, "domain_area": A_omega, "boundary_length": L,
              "zeta_boundary_sup": zb, "zeta_sup": z0,
              "tangential_sup": float(norms.tangential.max()), "boundary_mixed": mixed}
    return rhs, inputs


def bound_fermat(s, gamma: FermatWeight | str = "1", h0: float | None = None,
                 tolerance: float = 0.0) -> BoundReport:
    """Weighted-area (Fermat) system bound; the left side is Lambda times the area.

    ``h0`` defaults to the sampled sup of the mean curvature field on the surface.
    """
    surf, hyps = _surface_of(s)
    d = surf.domain
    if isinstance(gamma, str):
        gamma = FermatWeight.parse(gamma)
    gamma = gamma.sampled_on(d)
    hyps.append(Hypothesis("weight_positive", gamma.gamma0 > 0.0, gamma.gamma0))
    h0b = h0_bound(gamma, [surf], override=h0) if gamma.gamma0 > 0 else None
    h0v = h0b.value if h0b is not None else math.nan
    z0 = float(GraphNorms.of(surf).interior.max())
    lam = smallness_factor(surf.codim, gamma, z0) if gamma.gamma0 > 0 else -math.inf
    hyps.append(Hypothesis("smallness", lam > 0.0, lam))
    rhs, inputs = _codim_rhs(surf, h0v if math.isfinite(h0v) else 0.0)
    A = area(surf)
    inputs.update({"Lambda": lam, "h0": h0v, "h0_source": h0b.source if h0b else "none",
                   "h0_envelope": h0b.envelope if h0b else math.nan,
                   "Gamma0": gamma.gamma0, "Gamma1": gamma.gamma1, "Gamma2": gamma.gamma2,
                   "gamma": gamma.source, "area": A})
    return BoundReport("eq4.21", lam * A, rhs, hyps, inputs, _graph_grid(d), tolerance)


def bound_minimal_system(s, tolerance: float = 0.0) -> BoundReport:
    """Bound for graphs solving the minimal surface system (constant weight, h0 = 0)."""
    surf, hyps = _surface_of(s)
    rhs, inputs = _codim_rhs(surf, 0.0)
    return BoundReport("eq4.38", area(surf), rhs, hyps, inputs, _graph_grid(surf.domain), tolerance)


# --- immersions -------------------------------------------------------------------


def _chart_q(chart: GeodesicPolarChart, q) -> np.ndarray:
    return np.asarray(_q_values(q, chart.uv[..., 0], chart.uv[..., 1]), dtype=float)


def bound_mu_stable_disc(chart: GeodesicPolarChart, mu: float, g0: float = 0.0, q=None,
                         tolerance: float = 0.0) -> BoundReport:
    """Geodesic disc area against 2 pi mu r^2 / (2 mu - (1 + g0)).

    When q takes negative values the right side gains the term
    ``-mu r^2/(2 mu - (1 + g0))`` times the integral of ``min(q, 0)`` over the disc.
    """
    r = chart.radius
    denom = 2.0 * mu - (1.0 + g0)
    qv = _chart_q(chart, q)
    q_min = float(qv.min())
    hyps = [
        Hypothesis("mu_above_threshold", mu > 0.5 * (1.0 + g0), mu - 0.5 * (1.0 + g0)),
        Hypothesis("eccentricity_nonnegative", g0 >= 0.0, g0),
    ]
    if denom > 0:
        rhs = 2.0 * math.pi * mu * r * r / denom
    else:
        rhs = math.inf
    q_neg = 0.0
    if q_min < 0.0:
        q_neg = chart.polar_integral(np.minimum(qv, 0.0))
        if denom > 0:
            rhs -= mu * r * r / denom * q_neg
    return BoundReport(
        "thm2.13", chart.area, rhs, hyps,
        {"mu": mu, "g0": g0, "radius": r, "q_min": q_min, "q_negative_integral": q_neg,
         "negative_part_variant": q_min < 0.0},
        _chart_grid(chart), tolerance,
    )


def bound_cmc(r: float, mu: float, h0: float, lhs: float, tolerance: float = 0.0) -> BoundReport:
    """Constant mean curvature disc with identity weight: rhs = 2 pi mu r^2 / (2 mu - 1)."""
    hyps = [Hypothesis("mu_above_half", mu > 0.5, mu - 0.5)]
    rhs = 2.0 * math.pi * mu * r * r / (2.0 * mu - 1.0) if mu > 0.5 else math.inf
    return BoundReport("eq2.23", float(lhs), rhs, hyps,
                       {"mu": mu, "h0": h0, "q": 2.0 * h0 * h0, "g0": 0.0, "radius": r},
                       {"kind": "closed_form"}, tolerance)


def bound_curvatura_integra(chart: GeodesicPolarChart, K0: float,
                            tolerance: float = 0.0) -> BoundReport:
    """Area against r^2 (pi + 1/2 integral of (K0 - K) over the geodesic disc)."""
    r = chart.radius
    excess = float(np.max(chart.K - K0))
    hyps = [
        Hypothesis("curvature_bounded", excess <= CURVATURE_TOL, excess),
        Hypothesis("K0_nonnegative", K0 >= 0.0, K0),
    ]
    deficit = chart.polar_integral(K0 - chart.K)
    rhs = r * r * (math.pi + 0.5 * deficit)
    return BoundReport("eq2.27", chart.area, rhs, hyps,
                       {"K0": K0, "radius": r, "curvature_deficit": deficit,
                        "max_curvature_excess": excess},
                       _chart_grid(chart), tolerance)


def bound_boundary_curvature(chart: GeodesicPolarChart, immersion: Immersion | None = None,
                             K0: float = 0.0, tolerance: float = 0.0) -> BoundReport:
    """(1 - K0 r^2/2) A against (r^2/2) times the boundary integral of kappa.

    ``immersion`` defaults to the chart's own; the boundary is the geodesic circle.
    """
    if immersion is not None and immersion is not chart.immersion:
        raise ValueError("chart was shot on a different immersion")
    r = chart.radius
    bc = chart_boundary_curvatures(chart)
    excess = float(np.max(chart.K - K0))
    hyps = [
        Hypothesis("curvature_bounded", excess <= CURVATURE_TOL, excess),
        Hypothesis("K0_nonnegative", K0 >= 0.0, K0),
        Hypothesis("rearrangement_admissible", K0 * r * r < 2.0, K0 * r * r),
    ]
    A = chart.area
    lhs = (1.0 - 0.5 * K0 * r * r) * A
    rhs = 0.5 * r * r * bc.total
    return BoundReport("eq2.31", lhs, rhs, hyps,
                       {"K0": K0, "radius": r, "area": A, "kappa_integral": bc.total,
                        "kappa_g_integral": bc.total_geodesic, "boundary_length": bc.length},
                       _chart_grid(chart), tolerance)


# --- outer balls ------------------------------------------------------------------


def _clip_fraction(f: np.ndarray) -> np.ndarray:
    """Area fraction of each triangle where the linear interpolant of f is <= 0."""
    neg = f <= 0.0
    count = neg.sum(axis=1)
    frac = np.where(count == 3, 1.0, 0.0)
    for target, flip in ((1, False), (2, True)):
        rows = np.flatnonzero(count == target)
        if rows.size == 0:
            continue
        fr = f[rows]
        lone = (~neg[rows]) if flip else neg[rows]
        k = np.argmax(lone, axis=1)
        a = fr[np.arange(len(rows)), k]
        b = fr[np.arange(len(rows)), (k + 1) % 3]
        c = fr[np.arange(len(rows)), (k + 2) % 3]
        corner = a * a / ((a - b) * (a - c))
        frac[rows] = 1.0 - corner if flip else corner
    return frac


def _triangle_areas(P: np.ndarray) -> np.ndarray:
    return 0.5 * np.linalg.norm(np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), axis=-1)


def _edges(tris: np.ndarray) -> np.ndarray:
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    return np.sort(e, axis=1)


def _topology(tris: np.ndarray) -> tuple[int, int]:
    """(connected components, Euler characteristic) of a triangle set."""
    if len(tris) == 0:
        return 0, 0
    verts = np.unique(tris)
    edges = np.unique(_edges(tris), axis=0)
    chi = len(verts) - len(edges) + len(tris)
    remap = {v: k for k, v in enumerate(verts)}
    a = np.array([remap[v] for v in edges[:, 0]])
    b = np.array([remap[v] for v in edges[:, 1]])
    g = coo_matrix((np.ones(len(a)), (a, b)), shape=(len(verts), len(verts)))
    ncomp, _ = connected_components(g, directed=False)
    return int(ncomp), int(chi)


def _rim_vertices(tris: np.ndarray) -> np.ndarray:
    """Vertices on edges that belong to exactly one triangle."""
    e, counts = np.unique(_edges(tris), axis=0, return_counts=True)
    return np.unique(e[counts == 1])


def graph_triangulation(s: GraphSurface) -> tuple[np.ndarray, np.ndarray]:
    """Vertices (x, y, zeta) and triangles of the cells whose corners lie in the closed domain.

    Only the first height component is used.
    """
    d = s.domain
    ny, nx = d.shape
    pts = np.stack([np.broadcast_to(d.X, d.shape), np.broadcast_to(d.Y, d.shape),
                    s.zeta[..., 0]], axis=-1).reshape(-1, 3)
    inside = d.closure_mask & np.isfinite(s.zeta[..., 0])
    idx = np.arange(ny * nx).reshape(ny, nx)
    a, b = idx[:-1, :-1], idx[:-1, 1:]
    c, e = idx[1:, :-1], idx[1:, 1:]
    ok = inside[:-1, :-1] & inside[:-1, 1:] & inside[1:, :-1] & inside[1:, 1:]
    t1 = np.stack([a[ok], b[ok], e[ok]], axis=1)
    t2 = np.stack([a[ok], e[ok], c[ok]], axis=1)
    return pts, np.vstack([t1, t2])


def immersion_triangulation(i: Immersion) -> tuple[np.ndarray, np.ndarray]:
    n = i.mesh.nodes
    return i(n[:, 0], n[:, 1]), i.mesh.triangles


def bound_outer_ball(piece, radius: float, m1: float = 1.0, m2: float = 1.0, center=None,
                     tolerance: float = 0.0) -> BoundReport:
    """Area of the surface inside a ball against 4 pi (m2/m1) radius^2 (strict).

    ``piece`` is a GraphSurface, an Immersion (its mesh is used) or a pair
    ``(vertices, triangles)``.  ``center`` defaults to the surface point over
    the domain centre (graphs) or X(0, 0) (immersions).
    """
    if isinstance(piece, GraphSurface):
        pts, tris = graph_triangulation(piece)
        if center is None:
            d = piece.domain
            cx, cy = d.region[0], d.region[1]
            if not d.is_disc:
                cx, cy = 0.5 * (d.region[0] + d.region[1]), 0.5 * (d.region[2] + d.region[3])
            z = d.interpolate(piece.zeta[..., 0], np.array([[cx, cy]]))[0]
            center = (cx, cy, z)
        grid = _graph_grid(piece.domain)
    elif isinstance(piece, Immersion):
        pts, tris = immersion_triangulation(piece)
        if center is None:
            center = piece(0.0, 0.0)
        grid = {"kind": "polar_mesh", "n_rho": piece.mesh.n_rho, "n_phi": piece.mesh.n_phi}
    else:
        pts, tris = (np.asarray(a) for a in piece)
        if center is None:
            raise ValueError("center is required for a raw triangulation")
        grid = {"kind": "triangles", "count": len(tris)}
    center = np.asarray(center, dtype=float)
    f = np.sum((pts - center) ** 2, axis=-1) - radius * radius
    ft = f[tris]
    frac = _clip_fraction(ft)
    lhs = float(np.sum(frac * _triangle_areas(pts[tris])))
    touched = tris[np.any(ft <= 0.0, axis=1)]
    ncomp, chi = _topology(touched)
    rim = _rim_vertices(tris)
    rim_clear = float(np.min(f[rim])) if rim.size else math.inf
    edge_len = float(np.max(np.linalg.norm(pts[tris[:, 1]] - pts[tris[:, 0]], axis=-1)))
    center_gap = float(np.min(np.linalg.norm(pts[np.unique(tris)] - center, axis=-1)))
    hyps = [
        Hypothesis("constants_ordered", 0.0 < m1 <= m2, m2 / m1 if m1 > 0 else math.inf),
        Hypothesis("simply_connected", ncomp == 1 and chi == 1, chi),
        Hypothesis("ball_inside_surface", rim_clear > 0.0, rim_clear),
        Hypothesis("center_on_surface", center_gap <= edge_len, center_gap),
    ]
    rhs = 4.0 * m2 * math.pi * radius * radius / m1 if m1 > 0 else math.inf
    return BoundReport("eq2.25", lhs, rhs, hyps,
                       {"m1": m1, "m2": m2, "radius": radius, "components": ncomp,
                        "euler_characteristic": chi},
                       grid, tolerance, strict=True)
