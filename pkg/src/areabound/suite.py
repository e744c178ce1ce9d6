"""Desk-scale acceptance suite: twelve numbered criteria, each a list of named checks.

Every check records the measured value, the target it is compared against
and whether it passed.  A criterion passes when all of its checks pass.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import (
    bound_boundary_curvature,
    bound_curvatura_integra,
    bound_divergence_graph,
    bound_fermat,
    bound_homogeneous,
    bound_interior,
    bound_minimal_graph,
    bound_minimal_system,
    bound_mu_stable_disc,
    bound_outer_ball,
    bound_prescribed_H,
)
from .domain import PlanarDomain
from .graph_surface import GraphSurface, area, cross_term_identity
from .integrands import (
    AreaIntegrand,
    DirichletIntegrand,
    check_A3,
    coercivity_check,
    estimate_k0,
    estimate_m1,
    get_integrand,
    gradcheck,
)
from .immersion import (
    NormIntegrand,
    anisotropic_weight,
    bonnet_gauss_defect,
    catenoid,
    dirichlet_energies,
    geodesic_polar,
    identity_weight,
    mu_stability_estimate,
    plane,
    scherk,
    sphere_cap,
    weight_from_integrand,
)
from .solver import residual_sup, solve_dirichlet, solve_minimal_system

SCHERK = "log(cos(x)/cos(y))"
Z2 = "x**2 - y**2, 2*x*y"
Z3 = "x**3 - 3*x*y**2, 3*x**2*y - y**3"


@dataclass
class Check:
    name: str
    value: float
    target: str
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "target": self.target,
                "passed": bool(self.passed)}


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name: str, value, target: str, passed: bool) -> None:
        self.checks.append(Check(name, float(value), target, bool(passed)))

    def line(self) -> str:
        failed = [c.name for c in self.checks if not c.passed]
        status = "PASS" if self.passed else "FAIL"
        tail = f" (failed: {', '.join(failed)})" if failed else ""
        return f"criterion {self.number:2d} {status}: {self.title}{tail}"

    def to_dict(self) -> dict:
        return {"criterion": self.number, "title": self.title, "passed": self.passed,
                "checks": [c.to_dict() for c in self.checks], "notes": self.notes}


def _exact(d: PlanarDomain, exprs: str) -> GraphSurface:
    from .expr import parse_list

    return GraphSurface.from_functions(d, parse_list(exprs))


def _max_node_error(s: GraphSurface, exact: GraphSurface) -> float:
    m = s.domain.valued_mask
    return float(np.max(np.abs(s.zeta[m] - exact.zeta[m])))


# --- shared solved instances --------------------------------------------------------


class Instances:
    """Lazily computed solves shared between criteria."""

    def __init__(self, n_graph: int = 129):
        self.n = n_graph
        self._cache: dict[str, object] = {}

    def _get(self, key: str, make: Callable):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    def scherk(self):
        d = PlanarDomain.rectangle(-1.0, 1.0, -1.0, 1.0, self.n)
        return self._get("scherk", lambda: solve_dirichlet(d, AreaIntegrand(1), None, SCHERK))

    def zero(self):
        d = PlanarDomain.unit_disc(self.n)
        return self._get("zero", lambda: solve_dirichlet(d, AreaIntegrand(1), None, "0"))

    def z2(self):
        d = PlanarDomain.unit_disc(self.n)
        return self._get("z2", lambda: solve_minimal_system(d, 2, Z2))

    def z3(self):
        d = PlanarDomain.unit_disc(self.n)
        return self._get("z3", lambda: solve_minimal_system(d, 2, Z3))

    def cap(self, h: float):
        d = PlanarDomain.unit_disc(65)
        return self._get(f"cap{h}", lambda: solve_dirichlet(d, AreaIntegrand(1), 2.0 * h, "0"))


# --- criteria ---------------------------------------------------------------------


GRADCHECK_CASES = (("area", 1), ("area_nd", 2), ("area_nd", 3),
                   ("fermat:gamma=1+x**2", 1), ("fermat:gamma=1+x**2", 2))


def criterion_1(inst: Instances) -> CriterionResult:
    c = CriterionResult(1, "analytic derivatives match finite differences (< 1e-6)")
    for spec, m in GRADCHECK_CASES:
        dev = gradcheck(get_integrand(spec, m), samples=100, seed=0)
        c.add(f"{spec} m={m}", dev, "< 1e-6", dev < 1e-6)
    return c


def criterion_2(inst: Instances) -> CriterionResult:
    c = CriterionResult(2, "cross-term identity to 1e-12 relative, m = 1..6")
    rng = np.random.default_rng(2)
    for m in range(1, 7):
        worst = 0.0
        for _ in range(1000):
            p, q = rng.normal(size=m), rng.normal(size=m)
            lhs, rhs = cross_term_identity(p, q)
            # both sides are differences of terms of size |p|^2 |q|^2 and vanish for m = 1
            worst = max(worst, abs(lhs - rhs) / float((p @ p) * (q @ q)))
        c.add(f"m={m}", worst, "<= 1e-12", worst <= 1e-12)
    return c


def criterion_3(inst: Instances) -> CriterionResult:
    c = CriterionResult(3, "area of (z, z^n) graphs equals pi (1 + n) at 257^2")
    d = PlanarDomain.unit_disc(257)
    for n, exprs in ((2, Z2), (3, Z3)):
        err = abs(area(_exact(d, exprs)) - math.pi * (1 + n))
        c.add(f"n={n}", err, "< 1e-3", err < 1e-3)
    return c


RESIDUAL_LEVELS = (65, 129, 257)


def residual_study(kind: str, levels=RESIDUAL_LEVELS) -> list[float]:
    """Strong-form residual sup of an exact minimal graph at successive resolutions."""
    out = []
    for n in levels:
        if kind == "scherk":
            d = PlanarDomain.rectangle(-1.0, 1.0, -1.0, 1.0, n)
            s, F = _exact(d, SCHERK), AreaIntegrand(1)
        else:
            d = PlanarDomain.unit_disc(n)
            s, F = _exact(d, {"z2": Z2, "z3": Z3}[kind]), AreaIntegrand(2)
        out.append(residual_sup(s, F))
    return out


def _ratios(vals):
    with np.errstate(divide="ignore", invalid="ignore"):
        return [float(np.float64(a) / np.float64(b)) for a, b in zip(vals, vals[1:])]


def criterion_4(inst: Instances) -> CriterionResult:
    c = CriterionResult(4, "strong residual ratio in [3.5, 4.5] per halving of h")
    for kind, label in (("scherk", "scherk"), ("z2", "(z,z^2)")):
        vals = residual_study(kind)
        c.notes[label] = vals
        for k, r in enumerate(_ratios(vals)):
            c.add(f"{label} ratio {RESIDUAL_LEVELS[k]}->{RESIDUAL_LEVELS[k + 1]}", r,
                  "in [3.5, 4.5]", 3.5 <= r <= 4.5)
    c.notes["(z,z^3) supplementary"] = residual_study("z3")
    return c


def criterion_5(inst: Instances) -> CriterionResult:
    c = CriterionResult(5, "recover (Re z^2, Im z^2) on the unit disc at 129^2")
    res = inst.z2()
    err = _max_node_error(res.surface, _exact(res.surface.domain, Z2))
    c.add("max node error", err, "< 1e-3", err < 1e-3)
    c.add("residual", res.residual, "< 1e-10", res.residual < 1e-10)
    c.add("converged", float(res.converged), "== 1", res.converged)
    return c


def criterion_6(inst: Instances) -> CriterionResult:
    c = CriterionResult(6, "certified constants of the area integrand")
    F = AreaIntegrand(1)
    m1 = estimate_m1(F)
    c.add("m1 - 1/sqrt(8)", abs(m1 - 1.0 / math.sqrt(8.0)), "< 1e-4",
          abs(m1 - 1.0 / math.sqrt(8.0)) < 1e-4)
    k0 = estimate_k0(F)
    c.add("k0 sampled sup", k0, "in [0.99, 1]", 0.99 <= k0 <= 1.0)
    c.add("zero-gradient normalization", float(check_A3(F)), "== 1", check_A3(F))
    slack = coercivity_check(F, 1.0 / math.sqrt(8.0))
    c.add("coercivity min slack", slack, ">= -1e-8", slack >= -1e-8)
    return c


def criterion_7(inst: Instances) -> CriterionResult:
    c = CriterionResult(7, "bound slacks non-negative on solved instances")
    F = AreaIntegrand(1)
    for label, res in (("scherk", inst.scherk()), ("zero", inst.zero())):
        reports = [
            bound_divergence_graph(res, F),
            bound_homogeneous(res, F),
            bound_minimal_graph(res),
            bound_prescribed_H(res, 0.0),
            bound_prescribed_H(res, 0.0, sharp=True),
            bound_interior(res, F, None, nu=0.25),
        ]
        for r in reports:
            c.add(f"{label} {r.bound_id}", r.slack, ">= 0 and holds",
                  r.slack >= 0.0 and r.verdict == "holds")
    cap = inst.cap(0.1)
    for r in (bound_divergence_graph(cap, F, 0.2), bound_prescribed_H(cap, 0.1),
              bound_prescribed_H(cap, 0.1, sharp=True)):
        c.add(f"cap H=0.1 {r.bound_id}", r.slack, ">= 0 and holds",
              r.slack >= 0.0 and r.verdict == "holds")
    for label, res, lhs0, rhs0 in (("(z,z^2)", inst.z2(), 3.0, 21.0),
                                   ("(z,z^3)", inst.z3(), 4.0, 29.0)):
        reports = [bound_minimal_system(res)]
        if label == "(z,z^2)":
            reports.insert(0, bound_fermat(res, "1"))
        for r in reports:
            c.add(f"{label} {r.bound_id} slack", r.slack, ">= 0 and holds",
                  r.slack >= 0.0 and r.verdict == "holds")
            c.add(f"{label} {r.bound_id} lhs - {lhs0:g}pi", r.lhs - lhs0 * math.pi,
                  "|.| <= 1e-2", abs(r.lhs - lhs0 * math.pi) <= 1e-2)
            c.add(f"{label} {r.bound_id} rhs - {rhs0:g}pi", r.rhs - rhs0 * math.pi,
                  "|.| <= 1e-2", abs(r.rhs - rhs0 * math.pi) <= 1e-2)
            if r.bound_id == "eq4.21":
                lam = r.inputs["Lambda"]
                c.add("(z,z^2) Lambda", lam, "== 1", lam == 1.0)
    return c


CHART_CASES = {
    "plane": (lambda: plane(), 0.5),
    "sphere cap": (lambda: sphere_cap(1.2), 1.0),
    "catenoid": (lambda: catenoid(1.0), 0.5),
}


def criterion_8(inst: Instances) -> CriterionResult:
    c = CriterionResult(8, "geodesic polar machinery")
    ch = geodesic_polar(plane(), r=0.5)
    err = float(np.max(np.abs(ch.P - ch.rho[:, None] ** 2)))
    c.add("plane P - rho^2", err, "<= 1e-6", err <= 1e-6)
    ch = geodesic_polar(sphere_cap(1.2), r=1.0)
    err = float(np.max(np.abs(ch.P - np.sin(ch.rho[:, None]) ** 2)))
    c.add("sphere P - sin^2 rho", err, "<= 1e-4", err <= 1e-4)
    for name, (make, r) in CHART_CASES.items():
        i = make()
        fine = geodesic_polar(i, r=r, n_rho=64, n_phi=128)
        coarse = geodesic_polar(i, r=r, n_rho=32, n_phi=64)
        p0 = float(np.max(fine.P[0]))
        c.add(f"{name} P at rho=0", p0, "<= 1e-3", p0 <= 1e-3)
        slope = float(np.max(np.abs(fine.d_sqrt_P[0] - 1.0)))
        c.add(f"{name} d sqrt(P)/d rho at 0 minus 1", slope, "<= 1e-3", slope <= 1e-3)
        df = abs(bonnet_gauss_defect(fine))
        dc = abs(bonnet_gauss_defect(coarse))
        c.add(f"{name} Bonnet-Gauss defect", df, "< 1e-3", df < 1e-3)
        halving = df <= 0.5 * dc or max(df, dc) <= 1e-10
        c.add(f"{name} defect ratio coarse/fine", dc / df if df > 0 else math.inf,
              ">= 2 (or both <= 1e-10)", halving)
    return c


def criterion_9(inst: Instances) -> CriterionResult:
    c = CriterionResult(9, "immersion bounds on closed-form instances")
    r = 0.5
    ch = geodesic_polar(plane(), r=r)
    rep = bound_mu_stable_disc(ch, 2.0)
    err = abs(rep.slack - math.pi * r * r / 3.0)
    c.add("mu-stable disc slack - pi r^2/3", err, "<= 1e-3", err <= 1e-3)
    rs = 1.0
    sph = geodesic_polar(sphere_cap(1.2), r=rs)
    rep = bound_curvatura_integra(sph, 1.0)
    err = abs(rep.slack - (math.pi * rs * rs - 2.0 * math.pi * (1.0 - math.cos(rs))))
    c.add("curvatura integra slack error", err, "<= 1e-3", err <= 1e-3)
    rep = bound_boundary_curvature(ch)
    c.add("boundary curvature |slack|", abs(rep.slack), "< 1e-6", abs(rep.slack) < 1e-6)
    rep = bound_outer_ball(plane().with_mesh(128, 256), r)
    err = abs(rep.slack - 3.0 * math.pi * r * r)
    c.add("outer ball slack - 3 pi rho^2", err, "<= 1e-3", err <= 1e-3)
    return c


def _test_fields(n: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        a = rng.normal(size=6)

        def phi(u, v, a=a):
            poly = a[0] + a[1] * u + a[2] * v + a[3] * u * u + a[4] * u * v + a[5] * v * v
            return (1.0 - u * u - v * v) * poly

        yield phi


def criterion_10(inst: Instances) -> CriterionResult:
    c = CriterionResult(10, "weight matrices")
    G = weight_from_integrand(NormIntegrand())
    rng = np.random.default_rng(10)
    X = rng.uniform(-1, 1, (100, 3))
    Z = rng.normal(size=(100, 3))
    dev = float(np.max(np.abs(G(X, Z) - np.eye(3))))
    c.add("|Z| weight minus identity", dev, "<= 1e-10", dev <= 1e-10)
    c.add("|Z| weight g0", G.g0, "<= 1e-10", abs(G.g0) <= 1e-10)
    A = anisotropic_weight(2.0)
    for k, v in A.check(n=100, seed=10).items():
        c.add(f"anisotropic {k}", v, "<= 1e-10", v <= 1e-10)
    worst = -math.inf
    for name, i in (("plane", plane()), ("catenoid", catenoid(0.5)), ("scherk", scherk(1.0))):
        for W in (A, anisotropic_weight(0.7)):
            lo, hi = 1.0 / (1.0 + W.g0), 1.0 + W.g0
            for phi in _test_fields(20, seed=len(name)):
                e0, eg = dirichlet_energies(i, W, phi)
                worst = max(worst, (lo * e0 - eg) / e0, (eg - hi * e0) / e0)
    c.add("sandwich worst relative excess", worst, "<= 1e-12", worst <= 1e-12)
    return c


def criterion_11(inst: Instances) -> CriterionResult:
    c = CriterionResult(11, "stability estimator")
    mu_plane = mu_stability_estimate(plane(), identity_weight(), 0.0)
    c.add("plane mu (inf = unbounded)", mu_plane, "== inf", math.isinf(mu_plane))
    patch = scherk(1.0)
    mu = mu_stability_estimate(patch, identity_weight(), 0.0)
    c.add("minimal patch mu", mu, ">= 1.95", mu >= 1.95)
    rep = bound_mu_stable_disc(geodesic_polar(patch, r=0.5), mu, 0.0, 0.0)
    c.add("mu-stable disc slack with estimated mu", rep.slack, ">= 0 and holds",
          rep.slack >= 0.0 and rep.verdict == "holds")
    return c


def criterion_12(inst: Instances) -> CriterionResult:
    c = CriterionResult(12, "hypothesis gating")
    rep = bound_mu_stable_disc(geodesic_polar(plane(), r=0.5), 0.5, 0.0)
    c.add("mu = 0.5 verdict is not_applicable", float(rep.verdict == "not_applicable"), "== 1",
          rep.verdict == "not_applicable")
    d = PlanarDomain.unit_disc(65)
    s = _exact(d, "x**2 - y**2, 2*x*y")
    rep = bound_fermat(s, "1 + 4*x")
    lam = rep.inputs["Lambda"]
    c.add("Lambda for steep weight", lam, "<= 0", lam <= 0.0)
    c.add("Lambda <= 0 verdict is not_applicable", float(rep.verdict == "not_applicable"), "== 1",
          rep.verdict == "not_applicable")
    F = DirichletIntegrand(1)
    k0 = estimate_k0(F)
    c.add("dirichlet k0", k0, "== inf", math.isinf(k0))
    rep = bound_homogeneous(GraphSurface.from_functions(d, [lambda x, y: x * y]), F)
    c.add("dirichlet verdict is not_applicable", float(rep.verdict == "not_applicable"), "== 1",
          rep.verdict == "not_applicable" and not rep.hypothesis("gradient_bounded").satisfied)
    return c


CRITERIA: dict[int, Callable[[Instances], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12,
}

PRESETS = {"paper-desk": {"n_graph": 129}}


def thread_cap() -> int:
    raw = os.environ.get("AREABOUND_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"AREABOUND_THREADS must be an integer, got {raw!r}") from None


def run_suite(preset: str = "paper-desk", only=None, threads: int | None = None) -> list[CriterionResult]:
    """Run the selected criteria; results come back in criterion order regardless of threads."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; known: {', '.join(PRESETS)}")
    inst = Instances(**PRESETS[preset])
    numbers = sorted(only) if only else sorted(CRITERIA)
    for n in numbers:
        if n not in CRITERIA:
            raise ValueError(f"unknown criterion {n}")
    threads = thread_cap() if threads is None else threads
    if threads <= 1:
        return [CRITERIA[n](inst) for n in numbers]
    # warm shared solves first so threads do not duplicate them
    for n in numbers:
        if n in (5, 7):
            inst.z2()
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda n: CRITERIA[n](inst), numbers))
