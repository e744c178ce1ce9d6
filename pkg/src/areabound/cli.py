"""Command-line entry point: ``areabound <command> ...``.

Exit status: 0 when every requested verdict holds (or the solve converged),
2 when some report is not applicable and none is violated, 1 on violations,
solver failures and malformed input.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, field

from . import __version__
from .bounds import (
    BOUND_IDS,
    BoundReport,
    bound_boundary_curvature,
    bound_cmc,
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
from .domain import DomainError, PlanarDomain
from .expr import ExpressionError
from .graph_surface import area, surface_from_json, surface_to_json
from .immersion import (
    ImmersionError,
    anisotropic_weight,
    bonnet_gauss_defect,
    geodesic_polar,
    identity_weight,
    immersion_from_json,
    mu_stability_estimate,
)
from .integrands import IntegrandError, RightSide, get_integrand, gradcheck
from .io import InputError, append_jsonl, envelope, load_json, write_csv, write_json
from .solver import SolveConfig, SolveResult, SolverError, minimize
from .suite import PRESETS, run_suite, thread_cap

EXIT_OK, EXIT_FAIL, EXIT_NA = 0, 1, 2
GRADCHECK_THRESHOLD = 1e-6

# accepted --params keys per bound
BOUND_PARAMS = {
    "eq3.8": {"integrand", "rhs", "k0", "m1", "tolerance"},
    "eq3.19": {"integrand", "k0", "m1", "tolerance"},
    "eq3.22": {"tolerance"},
    "eq3.24": {"h0", "tolerance"},
    "eq3.25": {"h0", "tolerance"},
    "eq3.28": {"integrand", "rhs", "k0", "m1", "nu", "tolerance"},
    "eq4.21": {"gamma", "h0", "tolerance"},
    "eq4.38": {"tolerance"},
    "thm2.13": {"radius", "center", "mu", "g0", "q", "n_rho", "n_phi", "tolerance"},
    "eq2.23": {"radius", "center", "mu", "h0", "n_rho", "n_phi", "tolerance"},
    "eq2.27": {"radius", "center", "K0", "n_rho", "n_phi", "tolerance"},
    "eq2.31": {"radius", "center", "K0", "n_rho", "n_phi", "tolerance"},
    "eq2.25": {"radius", "center", "m1", "m2", "tolerance"},
}
IMMERSION_BOUNDS = {"thm2.13", "eq2.23", "eq2.27", "eq2.31"}


@dataclass
class RunConfig:
    """Fully resolved run description; serialised into every output."""

    command: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


def _split_top_level(text: str) -> list[str]:
    """Split on commas outside parentheses and brackets."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p for p in (s.strip() for s in parts) if p]


def parse_params(items: list[str] | None, allowed: set[str]) -> dict:
    """``k=v`` pairs (repeatable, comma separated) into typed values; unknown keys rejected."""
    out: dict = {}
    for item in items or []:
        for pair in _split_top_level(item):
            key, eq, val = pair.partition("=")
            key = key.strip()
            if not eq:
                raise UsageError(f"parameter {pair!r} is not of the form key=value")
            if key not in allowed:
                raise UsageError(f"unknown parameter {key!r}; allowed: {', '.join(sorted(allowed))}")
            out[key] = _typed(val.strip())
    return out


def _typed(val: str):
    try:
        return int(val)
    except ValueError:
        pass
    try:
        return float(val)
    except ValueError:
        return val


def _exit_for(verdicts: list[str]) -> int:
    if any(v in ("violated", "failed") for v in verdicts):
        return EXIT_FAIL
    if any(v == "not_applicable" for v in verdicts):
        return EXIT_NA
    return EXIT_OK


def _emit(args, records: list[dict]) -> None:
    if getattr(args, "report", None):
        append_jsonl(args.report, records)
    if getattr(args, "csv", None):
        write_csv(args.csv, records)


def _print(obj) -> None:
    from .io import canonical_json

    print(canonical_json(obj))


# --- solve -----------------------------------------------------------------------


def cmd_solve(args) -> int:
    d = PlanarDomain.from_spec(args.domain)
    m = args.codim
    if args.system == "minimal":
        F = get_integrand("area_nd" if m > 1 else "area", m)
        R = None
    elif args.system == "fermat":
        if args.gamma is None:
            raise UsageError("--system fermat needs --gamma")
        F = get_integrand(f"fermat:gamma={args.gamma}", m)
        F.gamma = F.gamma.sampled_on(d)
        if F.gamma.gamma0 <= 0.0:
            raise UsageError("refraction weight must be positive on the domain")
        R = None
    else:
        F = get_integrand(args.integrand, m)
        R = args.rhs
        if R is None and hasattr(F, "rhs"):
            R = F.rhs
    cfg = SolveConfig(method=args.method, tol=args.tol, max_iter=args.max_iter)
    rc = RunConfig("solve", {"domain": d.to_spec(), "boundary": args.boundary},
                   {"out": args.out},
                   {"system": args.system, "codim": m, "gamma": args.gamma,
                    "integrand": F.name, "rhs": RightSide.parse(R).describe(),
                    "method": cfg.method, "tol": cfg.tol, "max_iter": cfg.max_iter})
    res = minimize(d, F, R, args.boundary, cfg)
    meta = {"solve": res.summary(), "system": args.system, "integrand": F.name,
            "rhs": RightSide.parse(R).describe(), "boundary": args.boundary}
    if args.gamma is not None:
        meta["gamma"] = args.gamma
    if args.out:
        obj = surface_to_json(res.surface, meta)
        write_json(args.out, envelope(obj, rc.to_dict()))
    record = envelope(res.summary(), rc.to_dict())
    _print(record)
    _emit(args, [record])
    return EXIT_OK if res.converged else EXIT_FAIL


# --- verify ------------------------------------------------------------------------


def _load_graph(path: str):
    obj = load_json(path, required=("domain", "codim", "values"))
    try:
        s = surface_from_json(obj)
    except (KeyError, ValueError, TypeError) as e:
        raise InputError(f"{path}: bad surface data ({e})") from e
    meta = obj.get("meta", {})
    solve = meta.get("solve")
    if solve is not None:
        for key in ("converged", "residual"):
            if key not in solve:
                raise InputError(f"{path}: missing field 'meta.solve.{key}'")
        res = SolveResult(s, float(solve["residual"]), int(solve.get("iterations", 0)),
                          bool(solve["converged"]), [], solve.get("method", "damped_newton"),
                          float(solve.get("tol", 1e-10)))
        return res, meta
    return s, meta


def _load_immersion(path: str):
    obj = load_json(path)
    try:
        return immersion_from_json(obj)
    except (ImmersionError, TypeError, KeyError) as e:
        raise InputError(f"{path}: {e}") from e


def _center(p) -> tuple[float, ...] | None:
    c = p.get("center")
    if c is None:
        return None
    if isinstance(c, (int, float)):
        raise UsageError("center must be a comma list in brackets, e.g. center=[0.1,0.2]")
    return tuple(float(v) for v in str(c).strip("[]()").split(","))


def _verify_graph_bound(bound: str, surf, meta: dict, p: dict) -> BoundReport:
    tol = float(p.get("tolerance", 0.0))
    if bound in ("eq3.8", "eq3.19", "eq3.28"):
        F = get_integrand(str(p.get("integrand", meta.get("integrand", "area"))), 1)
        R = p.get("rhs", meta.get("rhs"))
        k0, m1 = p.get("k0"), p.get("m1")
        if bound == "eq3.8":
            return bound_divergence_graph(surf, F, R, k0, m1, tol)
        if bound == "eq3.19":
            if not RightSide.parse(R).is_zero:
                raise UsageError("eq3.19 needs a surface solved with zero right side")
            return bound_homogeneous(surf, F, k0, m1, tol)
        return bound_interior(surf, F, R, k0, m1, float(p.get("nu", 0.25)), tol)
    if bound == "eq3.22":
        return bound_minimal_graph(surf, tol)
    if bound in ("eq3.24", "eq3.25"):
        h0 = p.get("h0")
        if h0 is None:
            R = RightSide.parse(meta.get("rhs"))
            if R.expression is not None:
                raise UsageError(f"{bound} needs h0=... for a non-constant right side")
            h0 = abs(R.constant) / 2.0
        return bound_prescribed_H(surf, float(h0), sharp=bound == "eq3.25", tolerance=tol)
    if bound == "eq4.21":
        gamma = str(p.get("gamma", meta.get("gamma", "1")))
        h0 = p.get("h0")
        return bound_fermat(surf, gamma, None if h0 is None else float(h0), tol)
    if bound == "eq4.38":
        return bound_minimal_system(surf, tol)
    raise UsageError(f"bound {bound} does not apply to graph surfaces")


def _verify_immersion_bound(bound: str, i, p: dict) -> BoundReport:
    tol = float(p.get("tolerance", 0.0))
    if bound == "eq2.25":
        return bound_outer_ball(i, float(p.get("radius", 0.5)), float(p.get("m1", 1.0)),
                                float(p.get("m2", 1.0)), _center(p), tol)
    c = _center(p) or (0.0, 0.0)
    chart = geodesic_polar(i, c, float(p.get("radius", 0.5)), int(p.get("n_rho", 64)),
                           int(p.get("n_phi", 128)))
    if bound == "thm2.13":
        if "mu" not in p:
            raise UsageError("thm2.13 needs mu=...")
        return bound_mu_stable_disc(chart, float(p["mu"]), float(p.get("g0", 0.0)),
                                    p.get("q"), tol)
    if bound == "eq2.23":
        if "mu" not in p:
            raise UsageError("eq2.23 needs mu=...")
        return bound_cmc(chart.radius, float(p["mu"]), float(p.get("h0", 0.0)), chart.area, tol)
    if bound == "eq2.27":
        return bound_curvatura_integra(chart, float(p.get("K0", 0.0)), tol)
    return bound_boundary_curvature(chart, None, float(p.get("K0", 0.0)), tol)


def cmd_verify(args) -> int:
    bound = args.bound
    p = parse_params(args.params, BOUND_PARAMS[bound])
    obj = load_json(args.surface)
    is_graph = "domain" in obj
    rc = RunConfig("verify", {"surface": str(args.surface)},
                   {"report": args.report, "csv": args.csv}, {"bound": bound, **p})
    if is_graph:
        if bound in IMMERSION_BOUNDS:
            raise UsageError(f"{bound} needs an immersion file, got a graph surface")
        surf, meta = _load_graph(args.surface)
        if bound == "eq2.25":
            s = surf.surface if isinstance(surf, SolveResult) else surf
            rep = bound_outer_ball(s, float(p.get("radius", 0.5)), float(p.get("m1", 1.0)),
                                   float(p.get("m2", 1.0)), _center(p),
                                   float(p.get("tolerance", 0.0)))
        else:
            rep = _verify_graph_bound(bound, surf, meta, p)
    else:
        if bound not in IMMERSION_BOUNDS | {"eq2.25"}:
            raise UsageError(f"{bound} needs a graph surface file, got an immersion")
        rep = _verify_immersion_bound(bound, _load_immersion(args.surface), p)
    record = envelope(rep.to_dict(), rc.to_dict(), rep.grid)
    _print(record)
    _emit(args, [record])
    return _exit_for([rep.verdict])


def cmd_area(args) -> int:
    surf, _ = _load_graph(args.surface)
    s = surf.surface if isinstance(surf, SolveResult) else surf
    d = s.domain
    rc = RunConfig("area", {"surface": str(args.surface)})
    _print(envelope({"area": area(s)}, rc.to_dict(),
                    {"kind": d.kind, "nx": d.nx, "ny": d.ny, "h": d.h}))
    return EXIT_OK


# --- immersion commands ------------------------------------------------------------


def _weight(spec: str):
    name, _, rest = spec.partition(":")
    if name == "identity":
        return identity_weight()
    if name == "anisotropic":
        p = parse_params([rest] if rest else [], {"a"})
        return anisotropic_weight(float(p.get("a", 2.0)))
    raise UsageError(f"unknown weight {spec!r}; known: identity, anisotropic[:a=...]")


def cmd_stability(args) -> int:
    i = _load_immersion(args.immersion)
    G = _weight(args.weight)
    q = _typed(args.q) if args.q is not None else None
    mu = mu_stability_estimate(i, G, q)
    rc = RunConfig("stability", {"immersion": str(args.immersion)}, {"report": args.report},
                   {"weight": args.weight, "q": args.q})
    record = envelope({"mu": mu, "status": "unbounded" if math.isinf(mu) else "bounded",
                       "g0": G.g0}, rc.to_dict(),
                      {"kind": "polar_mesh", "n_rho": i.mesh.n_rho, "n_phi": i.mesh.n_phi})
    _print(record)
    _emit(args, [record])
    return EXIT_OK


def cmd_geodesic(args) -> int:
    i = _load_immersion(args.immersion)
    center = tuple(float(v) for v in args.center.split(","))
    chart = geodesic_polar(i, center, args.radius, args.n_rho, args.n_phi)
    rc = RunConfig("geodesic", {"immersion": str(args.immersion)},
                   {"report": args.report, "table": args.table},
                   {"center": list(center), "radius": args.radius, "n_rho": args.n_rho,
                    "n_phi": args.n_phi})
    record = envelope({"area": chart.area, "boundary_length": float(chart.L[-1]),
                       "bonnet_gauss_defect": bonnet_gauss_defect(chart)},
                      rc.to_dict(), {"kind": "geodesic_polar", "n_rho": args.n_rho,
                                     "n_phi": args.n_phi, "radius": args.radius})
    _print(record)
    _emit(args, [record])
    if args.table:
        rows = [{"rho": float(r), "L": float(L), "L_prime": float(Lp), "curvature_mass": float(M)}
                for r, L, Lp, M in zip(chart.rho, chart.L, chart.L_prime, chart.curvature_mass)]
        write_csv(args.table, rows, ("rho", "L", "L_prime", "curvature_mass"))
    return EXIT_OK


# --- gradcheck and suite ----------------------------------------------------------------


def cmd_gradcheck(args) -> int:
    F = get_integrand(args.integrand, args.codim)
    dev = gradcheck(F, args.samples, args.seed)
    ok = dev < args.threshold
    rc = RunConfig("gradcheck", {}, {"report": args.report},
                   {"integrand": args.integrand, "codim": args.codim, "samples": args.samples,
                    "threshold": args.threshold}, args.seed)
    record = envelope({"integrand": args.integrand, "max_relative_deviation": dev,
                       "verdict": "holds" if ok else "failed"}, rc.to_dict())
    _print(record)
    _emit(args, [record])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_suite(args) -> int:
    only = [int(v) for v in args.only.split(",")] if args.only else None
    threads = args.threads if args.threads is not None else thread_cap()
    results = run_suite(args.preset, only, threads)
    rc = RunConfig("suite", {}, {"report": args.report},
                   {"preset": args.preset, "only": only})
    records = [envelope(r.to_dict(), rc.to_dict()) for r in results]
    for r in results:
        print(r.line())
    _emit(args, records)
    if args.csv:
        rows = [{"criterion": r.number, "title": r.title, "passed": r.passed} for r in results]
        write_csv(args.csv, rows, ("criterion", "title", "passed"))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


# --- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="areabound", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"areabound {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def outputs(p):
        p.add_argument("--report", help="append JSON-lines records here")
        p.add_argument("--csv", help="write a CSV projection here")

    s = sub.add_parser("solve", help="solve a Dirichlet problem on a grid domain")
    s.add_argument("--domain", required=True, help="kind:n (unit_square, unit_disc) or a JSON file")
    s.add_argument("--system", choices=("minimal", "fermat", "dirichlet"), default="minimal")
    s.add_argument("--codim", type=int, default=1)
    s.add_argument("--boundary", required=True, help="comma separated boundary expressions in x, y")
    s.add_argument("--gamma", help="refraction weight Gamma(x, y) for --system fermat")
    s.add_argument("--integrand", default="area", help="catalog integrand for --system dirichlet")
    s.add_argument("--rhs", help="right side R(x, y, z) for --system dirichlet")
    s.add_argument("--method", choices=("damped_newton", "gradient_flow"), default="damped_newton")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=100)
    s.add_argument("--out", help="surface JSON output")
    outputs(s)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="evaluate one area bound on a surface")
    v.add_argument("--surface", required=True, help="graph surface JSON or immersion JSON")
    v.add_argument("--bound", required=True, choices=BOUND_IDS)
    v.add_argument("--params", action="append", help="key=value[,key=value...]")
    outputs(v)
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("area", help="area of a graph surface")
    a.add_argument("--surface", required=True)
    a.set_defaults(func=cmd_area)

    st = sub.add_parser("stability", help="estimate the stability constant of an immersion")
    st.add_argument("--immersion", required=True)
    st.add_argument("--weight", default="identity")
    st.add_argument("--q", help="number or expression in u, v")
    outputs(st)
    st.set_defaults(func=cmd_stability)

    g = sub.add_parser("geodesic", help="shoot a geodesic polar chart")
    g.add_argument("--immersion", required=True)
    g.add_argument("--center", default="0,0")
    g.add_argument("--radius", type=float, default=0.5)
    g.add_argument("--n-rho", type=int, default=64)
    g.add_argument("--n-phi", type=int, default=128)
    g.add_argument("--table", help="CSV of L, L' and curvature mass per radius")
    outputs(g)
    g.set_defaults(func=cmd_geodesic)

    gc = sub.add_parser("gradcheck", help="compare analytic and finite-difference derivatives")
    gc.add_argument("--integrand", required=True)
    gc.add_argument("--codim", type=int, default=1)
    gc.add_argument("--samples", type=int, default=100)
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--threshold", type=float, default=GRADCHECK_THRESHOLD)
    outputs(gc)
    gc.set_defaults(func=cmd_gradcheck)

    su = sub.add_parser("suite", help="run the acceptance suite")
    su.add_argument("--preset", default="paper-desk", choices=sorted(PRESETS))
    su.add_argument("--only", help="comma separated criterion numbers")
    su.add_argument("--threads", type=int, help="overrides AREABOUND_THREADS")
    outputs(su)
    su.set_defaults(func=cmd_suite)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InputError, DomainError, ExpressionError, IntegrandError,
            ImmersionError, SolverError, ValueError) as e:
        print(f"areabound {args.command}: error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
