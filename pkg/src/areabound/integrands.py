"""Variational integrands F(x, y, z, p, q), Fermat weights and structural constants.

Arrays follow one convention throughout: ``x`` and ``y`` have a sample shape
``S``; ``z``, ``p`` and ``q`` have shape ``S + (m,)``.  Gradients come back as
the triple ``(F_p, F_q, F_z)`` of shape ``S + (m,)`` and Hessians as
``S + (3m, 3m)`` in the variable order ``[p, q, z]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import PlanarDomain
from .expr import Expression, parse
from .graph_surface import GraphSurface, area_element_from_slopes

FD_STEP = 1e-5
FD_STEP_SECOND = 1e-4


class IntegrandError(ValueError):
    pass


def _stack_args(z, p, q):
    return np.concatenate([p, q, z], axis=-1)


def _split_args(v, m):
    return v[..., 2 * m:], v[..., :m], v[..., m:2 * m]


class Integrand:
    """Base integrand; subclasses override ``value`` and optionally the derivatives.

    The default ``gradient`` and ``hessian`` are central finite differences
    with step ``1e-5 * (1 + |argument|)``.
    """

    name = "custom"
    analytic_gradient = False
    analytic_hessian = False
    #: certified constants of gradient boundedness and restricted ellipticity
    k0: float | None = None
    m1: float | None = None
    z_independent = False

    def __init__(self, m: int = 1):
        if m < 1:
            raise IntegrandError("codimension must be at least 1")
        self.m = m

    def value(self, x, y, z, p, q):
        raise NotImplementedError

    # --- finite-difference machinery --------------------------------------

    def fd_gradient(self, x, y, z, p, q):
        m = self.m
        v = _stack_args(z, p, q)
        out = np.empty_like(v)
        for k in range(3 * m):
            step = FD_STEP * (1.0 + np.abs(v[..., k]))
            vp = v.copy()
            vm = v.copy()
            vp[..., k] += step
            vm[..., k] -= step
            fp = self.value(x, y, *_split_args(vp, m))
            fm = self.value(x, y, *_split_args(vm, m))
            out[..., k] = (fp - fm) / ((v[..., k] + step) - (v[..., k] - step))
        return out[..., :m], out[..., m:2 * m], out[..., 2 * m:]

    def fd_hessian(self, x, y, z, p, q):
        """Central differences of the gradient (second differences of F without one)."""
        m = self.m
        v = _stack_args(z, p, q)
        n = 3 * m
        H = np.empty(v.shape[:-1] + (n, n))
        if self.analytic_gradient:
            for k in range(n):
                step = FD_STEP * (1.0 + np.abs(v[..., k]))
                vp = v.copy()
                vm = v.copy()
                vp[..., k] += step
                vm[..., k] -= step
                gp = np.concatenate(self.gradient(x, y, *_split_args(vp, m)), axis=-1)
                gm = np.concatenate(self.gradient(x, y, *_split_args(vm, m)), axis=-1)
                H[..., :, k] = (gp - gm) / (2 * step)[..., None]
            return H
        f0 = self.value(x, y, z, p, q)
        steps = FD_STEP_SECOND * (1.0 + np.abs(v))

        def f_at(shifts):
            w = v.copy()
            for k, s in shifts:
                w[..., k] += s * steps[..., k]
            return self.value(x, y, *_split_args(w, m))

        for k in range(n):
            H[..., k, k] = (f_at([(k, 1)]) - 2 * f0 + f_at([(k, -1)])) / steps[..., k] ** 2
            for l in range(k + 1, n):
                mixed = (f_at([(k, 1), (l, 1)]) - f_at([(k, 1), (l, -1)])
                         - f_at([(k, -1), (l, 1)]) + f_at([(k, -1), (l, -1)]))
                H[..., k, l] = H[..., l, k] = mixed / (4 * steps[..., k] * steps[..., l])
        return H

    def gradient(self, x, y, z, p, q):
        return self.fd_gradient(x, y, z, p, q)

    def hessian(self, x, y, z, p, q):
        return self.fd_hessian(x, y, z, p, q)

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, m={self.m})"


class CallableIntegrand(Integrand):
    """Integrand from a plain value callable; derivatives by finite differences."""

    def __init__(self, func: Callable, m: int = 1, name: str = "custom", z_independent=False):
        super().__init__(m)
        self._func = func
        self.name = name
        self.z_independent = z_independent

    def value(self, x, y, z, p, q):
        return np.asarray(self._func(x, y, z, p, q), dtype=float)


def _area_flux(p, q):
    """Return (a, b, W) with d(W^2)/dp = 2a and d(W^2)/dq = 2b."""
    pq = np.sum(p * q, axis=-1)[..., None]
    pp = np.sum(p * p, axis=-1)[..., None]
    qq = np.sum(q * q, axis=-1)[..., None]
    a = p * (1.0 + qq) - q * pq
    b = q * (1.0 + pp) - p * pq
    return a, b, area_element_from_slopes(p, q)


def area_hessian_pq(p, q):
    """Hessian of W(p, q) in the variables [p, q], shape (..., 2m, 2m)."""
    m = p.shape[-1]
    a, b, W = _area_flux(p, q)
    Wc = W[..., None, None]
    eye = np.eye(m)
    pp = np.sum(p * p, axis=-1)[..., None, None]
    qq = np.sum(q * q, axis=-1)[..., None, None]
    pq = np.sum(p * q, axis=-1)[..., None, None]
    outer = lambda u, v: u[..., :, None] * v[..., None, :]
    Hpp = (eye * (1.0 + qq) - outer(q, q)) / Wc - outer(a, a) / Wc**3
    Hqq = (eye * (1.0 + pp) - outer(p, p)) / Wc - outer(b, b) / Wc**3
    Hpq = (2.0 * outer(p, q) - eye * pq - outer(q, p)) / Wc - outer(a, b) / Wc**3
    top = np.concatenate([Hpp, Hpq], axis=-1)
    bottom = np.concatenate([np.swapaxes(Hpq, -1, -2), Hqq], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def _pad_z(Hpq, m):
    shape = Hpq.shape[:-2] + (3 * m, 3 * m)
    H = np.zeros(shape)
    H[..., : 2 * m, : 2 * m] = Hpq
    return H


class AreaIntegrand(Integrand):
    """Area element of a graph of codimension m."""

    analytic_gradient = True
    analytic_hessian = True
    k0 = 1.0
    m1 = 1.0 / math.sqrt(8.0)
    z_independent = True

    def __init__(self, m: int = 1):
        super().__init__(m)
        self.name = "area" if m == 1 else "area_nd"

    def value(self, x, y, z, p, q):
        return area_element_from_slopes(p, q)

    def gradient(self, x, y, z, p, q):
        a, b, W = _area_flux(p, q)
        return a / W[..., None], b / W[..., None], np.zeros_like(p)

    def hessian(self, x, y, z, p, q):
        return _pad_z(area_hessian_pq(p, q), self.m)


class DirichletIntegrand(Integrand):
    """Half the squared gradient norm."""

    name = "dirichlet"
    analytic_gradient = True
    analytic_hessian = True
    m1 = 1.0
    k0 = math.inf
    z_independent = True

    def value(self, x, y, z, p, q):
        return 0.5 * (np.sum(p * p, axis=-1) + np.sum(q * q, axis=-1))

    def gradient(self, x, y, z, p, q):
        return p.copy(), q.copy(), np.zeros_like(p)

    def hessian(self, x, y, z, p, q):
        m = self.m
        eye = np.eye(2 * m)
        return _pad_z(np.broadcast_to(eye, p.shape[:-1] + (2 * m, 2 * m)), m)


@dataclass(frozen=True)
class FermatWeight:
    """Positive refraction weight Gamma(x, y) with its bounds.

    ``gamma0``/``gamma1`` are the sampled minimum and maximum of Gamma and
    ``gamma2`` the sampled supremum of |grad Gamma|.
    """

    expression: Expression
    gamma0: float = float("nan")
    gamma1: float = float("nan")
    gamma2: float = float("nan")

    @classmethod
    def parse(cls, source: str, domain: PlanarDomain | None = None) -> "FermatWeight":
        w = cls(parse(source, ("x", "y")))
        return w.sampled_on(domain) if domain is not None else w

    @property
    def source(self) -> str:
        return self.expression.source

    def __call__(self, x, y):
        return np.asarray(self.expression(x, y), dtype=float)

    def gradient(self, x, y):
        _, (gx, gy) = self.expression.with_gradient(x, y)
        return gx, gy

    def sampled_on(self, d: PlanarDomain) -> "FermatWeight":
        pts = np.concatenate([
            np.stack([d.X[d.closure_mask], d.Y[d.closure_mask]], axis=1),
            d.boundary.points,
        ])
        g, (gx, gy) = self.expression.with_gradient(pts[:, 0], pts[:, 1])
        g = np.broadcast_to(g, pts[:, 0].shape)
        grad = np.hypot(np.broadcast_to(gx, g.shape), np.broadcast_to(gy, g.shape))
        return FermatWeight(self.expression, float(g.min()), float(g.max()), float(grad.max()))

    @property
    def is_constant(self) -> bool:
        return self.gamma2 == 0.0


class FermatIntegrand(Integrand):
    """Gamma(x, y) times the area element."""

    analytic_gradient = True
    analytic_hessian = True
    z_independent = True

    def __init__(self, gamma: FermatWeight, m: int = 1):
        super().__init__(m)
        self.gamma = gamma
        self.name = f"fermat:gamma={gamma.source}"

    def value(self, x, y, z, p, q):
        return self.gamma(x, y) * area_element_from_slopes(p, q)

    def gradient(self, x, y, z, p, q):
        return fermat_derivatives(self.gamma, x, y, z, p, q)

    def hessian(self, x, y, z, p, q):
        g = np.broadcast_to(self.gamma(x, y), p.shape[:-1])
        return _pad_z(area_hessian_pq(p, q) * g[..., None, None], self.m)


def fermat_derivatives(gamma: FermatWeight, x, y, z, p, q):
    """(F_p, F_q, F_z) of Gamma * W; F_z vanishes since Gamma depends on (x, y) only."""
    a, b, W = _area_flux(p, q)
    g = np.broadcast_to(gamma(x, y), W.shape)[..., None]
    return g * a / W[..., None], g * b / W[..., None], np.zeros_like(p)


@dataclass(frozen=True)
class RightSide:
    """Scalar right side R(x, y, z) of a divergence-form equation (m = 1)."""

    expression: Expression | None = None
    constant: float = 0.0

    @classmethod
    def parse(cls, spec) -> "RightSide":
        if spec is None:
            return cls()
        if isinstance(spec, RightSide):
            return spec
        if isinstance(spec, (int, float)):
            return cls(constant=float(spec))
        try:
            return cls(constant=float(spec))
        except ValueError:
            return cls(expression=parse(str(spec), ("x", "y", "z")))

    @property
    def is_zero(self) -> bool:
        return self.expression is None and self.constant == 0.0

    def describe(self) -> str:
        return self.expression.source if self.expression is not None else repr(self.constant)

    def value(self, x, y, z):
        if self.expression is None:
            return np.full(np.shape(z), self.constant)
        return np.broadcast_to(self.expression(x, y, z), np.shape(z)).astype(float)

    def dz(self, x, y, z):
        if self.expression is None:
            return np.zeros(np.shape(z))
        _, (_, _, rz) = self.expression.with_gradient(x, y, z)
        return np.broadcast_to(rz, np.shape(z)).astype(float)

    def potential(self, x, y, z):
        """Integral of R from 0 to z (8-point Gauss-Legendre when R depends on z)."""
        z = np.asarray(z, dtype=float)
        if self.expression is None:
            return self.constant * z
        nodes, weights = np.polynomial.legendre.leggauss(8)
        total = np.zeros(z.shape)
        for t, w in zip(nodes, weights):
            zt = 0.5 * (t + 1.0) * z
            total = total + 0.5 * w * self.value(x, y, zt)
        return total * z


class PrescribedMeanCurvature(AreaIntegrand):
    """Area integrand paired with the constant right side R = 2H."""

    def __init__(self, h: float, m: int = 1):
        super().__init__(m)
        self.h = float(h)
        self.name = f"prescribed_H:h={self.h:g}"

    @property
    def rhs(self) -> RightSide:
        return RightSide(constant=2.0 * self.h)


def _area_factory(m, params):
    return AreaIntegrand(m)


def _dirichlet_factory(m, params):
    return DirichletIntegrand(m)


def _fermat_factory(m, params):
    if "gamma" not in params:
        raise IntegrandError("fermat needs gamma=<expr>")
    return FermatIntegrand(FermatWeight.parse(params["gamma"]), m)


def _prescribed_factory(m, params):
    return PrescribedMeanCurvature(float(params.get("h", 0.0)), m)


CATALOG: dict[str, Callable[[int, dict], Integrand]] = {
    "area": _area_factory,
    "area_nd": _area_factory,
    "dirichlet": _dirichlet_factory,
    "fermat": _fermat_factory,
    "prescribed_H": _prescribed_factory,
}


def get_integrand(spec: str, m: int = 1) -> Integrand:
    """Look up ``name`` or ``name:key=value,...`` in the builtin catalog."""
    name, _, rest = spec.partition(":")
    params = {}
    if rest:
        key, eq, val = rest.partition("=")
        if not eq:
            raise IntegrandError(f"malformed integrand parameter {rest!r}")
        params[key.strip()] = val.strip()
    if name not in CATALOG:
        raise IntegrandError(f"unknown integrand {name!r}; known: {', '.join(sorted(CATALOG))}")
    return CATALOG[name](m, params)


# --- structural constants ----------------------------------------------------


def _require_scalar(F: Integrand):
    if F.m != 1:
        raise IntegrandError("structural constants are defined for codimension 1")


def _random_points(rng, n):
    x = rng.uniform(-1.0, 1.0, n)
    y = rng.uniform(-1.0, 1.0, n)
    z = rng.uniform(-1.0, 1.0, (n, 1))
    return x, y, z


def _gradient_ladder(radii, n_angles):
    t = 2.0 * np.pi * np.arange(n_angles) / n_angles
    r, th = np.meshgrid(radii, t, indexing="ij")
    return r.ravel(), (r * np.cos(th)).ravel(), (r * np.sin(th)).ravel()


def estimate_k0(F: Integrand, n_angles: int = 32, seed: int = 0) -> float:
    """Sampled sup of |(F_p, F_q)| over gradients up to 10^3; ``inf`` if still growing."""
    _require_scalar(F)
    radii = np.logspace(-3, 3, 61)
    r, p, q = _gradient_ladder(radii, n_angles)
    x, y, z = _random_points(np.random.default_rng(seed), r.size)
    Fp, Fq, _ = F.gradient(x, y, z, p[:, None], q[:, None])
    mag = np.hypot(Fp[:, 0], Fq[:, 0])
    sup_upto_100 = mag[r <= 100.0 * (1 + 1e-12)].max()
    sup_all = mag.max()
    if sup_all > sup_upto_100 * (1.0 + 1e-3) and sup_all > 0.0:
        return math.inf
    return float(sup_all)


def _closed_disc_samples(n_radii=41, n_angles=64):
    r, p, q = _gradient_ladder(np.linspace(0.0, 1.0, n_radii)[1:], n_angles)
    return np.concatenate([[0.0], p]), np.concatenate([[0.0], q])


def estimate_m1(F: Integrand, n_radii: int = 41, n_angles: int = 64, seed: int = 0) -> float:
    """Min over the closed unit gradient disc of the smallest (p, q)-Hessian eigenvalue."""
    _require_scalar(F)
    p, q = _closed_disc_samples(n_radii, n_angles)
    x, y, z = _random_points(np.random.default_rng(seed), p.size)
    H = F.hessian(x, y, z, p[:, None], q[:, None])
    a, c = H[:, 0, 0], H[:, 1, 1]
    b1, b2 = H[:, 0, 1], H[:, 1, 0]
    asym = np.abs(b1 - b2)
    if np.any(asym > 1e-8 * (1.0 + np.abs(b1))):
        raise IntegrandError(f"Hessian not symmetric (max asymmetry {asym.max():.3g})")
    b = 0.5 * (b1 + b2)
    lam = 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + b * b)
    return float(lam.min())


def check_A3(F: Integrand, n_samples: int = 200, seed: int = 0, tol: float = 1e-10) -> bool:
    """True when F_p and F_q vanish at zero gradient for sampled (x, y, z)."""
    _require_scalar(F)
    x, y, z = _random_points(np.random.default_rng(seed), n_samples)
    zero = np.zeros((n_samples, 1))
    Fp, Fq, _ = F.gradient(x, y, z, zero, zero)
    return bool(np.all(np.abs(Fp) <= tol) and np.all(np.abs(Fq) <= tol))


def _radial_samples(n_angles):
    radii = np.unique(np.concatenate([np.linspace(0.0, 1.0, 41)[1:], np.logspace(-3, 3, 61)]))
    return _gradient_ladder(radii, n_angles)


def coercivity_check(F: Integrand, m1: float, n_angles: int = 64, seed: int = 0) -> float:
    """Minimum over samples of p F_p + q F_q minus m1 r^2 (r <= 1) or m1 r (r > 1)."""
    _require_scalar(F)
    r, p, q = _radial_samples(n_angles)
    x, y, z = _random_points(np.random.default_rng(seed), r.size)
    Fp, Fq, _ = F.gradient(x, y, z, p[:, None], q[:, None])
    radial = p * Fp[:, 0] + q * Fq[:, 0]
    threshold = np.where(r <= 1.0, m1 * r * r, m1 * r)
    return float(np.min(radial - threshold))


def nonneg_radial_check(F: Integrand, n_angles: int = 64, seed: int = 0) -> bool:
    """True when p F_p + q F_q >= 0 on all samples."""
    _require_scalar(F)
    r, p, q = _radial_samples(n_angles)
    x, y, z = _random_points(np.random.default_rng(seed), r.size)
    Fp, Fq, _ = F.gradient(x, y, z, p[:, None], q[:, None])
    radial = p * Fp[:, 0] + q * Fq[:, 0]
    return bool(np.all(radial >= -1e-12 * (1.0 + r)))


# --- mean curvature field -----------------------------------------------------


def mean_curvature_field(gamma: FermatWeight, s: GraphSurface, sigma: int) -> np.ndarray:
    """H(X, N_sigma) = grad Gamma . N_sigma / (2 Gamma W) at every valued node."""
    if not 1 <= sigma <= s.codim:
        raise ValueError(f"component index must be in 1..{s.codim}")
    d = s.domain
    g = np.broadcast_to(gamma(d.X, d.Y), d.shape)
    valued = d.valued_mask
    if np.any(g[valued] <= 0.0):
        raise IntegrandError("refraction weight must be positive")
    gx, gy = gamma.gradient(d.X, d.Y)
    ps = s.p[..., sigma - 1]
    qs = s.q[..., sigma - 1]
    W = area_element_from_slopes(s.p, s.q)
    dot = -(gx * ps + gy * qs) / np.sqrt(1.0 + ps * ps + qs * qs)
    return dot / (2.0 * g * W)


@dataclass(frozen=True)
class H0Bound:
    sampled: float
    envelope: float
    override: float | None = None

    @property
    def value(self) -> float:
        return self.override if self.override is not None else self.sampled

    @property
    def source(self) -> str:
        return "override" if self.override is not None else "sampled"


def h0_bound(gamma: FermatWeight, surfaces, override: float | None = None) -> H0Bound:
    """Sampled sup of |H| over the given surfaces, plus the normal-free envelope |grad Gamma|/(2 Gamma)."""
    sampled = 0.0
    envelope = 0.0
    for s in surfaces:
        valued = s.domain.valued_mask
        for sigma in range(1, s.codim + 1):
            H = mean_curvature_field(gamma, s, sigma)
            sampled = max(sampled, float(np.max(np.abs(H[valued]))))
        d = s.domain
        g = np.broadcast_to(gamma(d.X, d.Y), d.shape)
        gx, gy = gamma.gradient(d.X, d.Y)
        env = np.hypot(np.broadcast_to(gx, d.shape), np.broadcast_to(gy, d.shape)) / (2.0 * g)
        envelope = max(envelope, float(np.max(env[d.closure_mask])))
    return H0Bound(sampled, envelope, override)


# --- gradient check -----------------------------------------------------------


def relative_deviation(a, f) -> np.ndarray:
    a = np.asarray(a)
    f = np.asarray(f)
    return np.abs(a - f) / np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-2)


def random_states(m: int, n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, n)
    y = rng.uniform(-1.0, 1.0, n)
    z = rng.uniform(-1.0, 1.0, (n, m))
    p = rng.uniform(-2.0, 2.0, (n, m))
    q = rng.uniform(-2.0, 2.0, (n, m))
    return x, y, z, p, q


def gradcheck(F: Integrand, samples: int = 100, seed: int = 0) -> float:
    """Max relative deviation of the integrand's derivatives from finite differences."""
    state = random_states(F.m, samples, seed)
    worst = 0.0
    analytic = np.concatenate(F.gradient(*state), axis=-1)
    fd = np.concatenate(F.fd_gradient(*state), axis=-1)
    worst = max(worst, float(relative_deviation(analytic, fd).max()))
    H = F.hessian(*state)
    Hfd = F.fd_hessian(*state)
    worst = max(worst, float(relative_deviation(H, Hfd).max()))
    return worst
