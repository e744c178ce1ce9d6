"""Geodesic polar coordinates, Bonnet-Gauss defect and boundary curvatures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .surface import Immersion, ImmersionError


def _periodic_derivative(a: np.ndarray, dphi: float, axis: int) -> np.ndarray:
    """Fourth-order central difference along a periodic axis."""
    r = lambda k: np.roll(a, -k, axis=axis)
    return (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / (12 * dphi)


def _christoffel_accel(i: Immersion, uv: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Parameter acceleration -Gamma^k_ij w^i w^j of the geodesic equation."""
    u, v = uv[..., 0], uv[..., 1]
    Xu, Xv = i.first(u, v)
    Xuu, Xuv, Xvv = i.second(u, v)
    a, b = w[..., 0:1], w[..., 1:2]
    second = a * a * Xuu + 2 * a * b * Xuv + b * b * Xvv  # X_ij w^i w^j
    rhs = np.stack([np.sum(second * Xu, -1), np.sum(second * Xv, -1)], -1)
    E = np.sum(Xu * Xu, -1)
    F = np.sum(Xu * Xv, -1)
    G = np.sum(Xv * Xv, -1)
    det = E * G - F * F
    acc_u = (G * rhs[..., 0] - F * rhs[..., 1]) / det
    acc_v = (-F * rhs[..., 0] + E * rhs[..., 1]) / det
    return -np.stack([acc_u, acc_v], -1)


def _tangent(i: Immersion, uv, w):
    Xu, Xv = i.first(uv[..., 0], uv[..., 1])
    return w[..., 0:1] * Xu + w[..., 1:2] * Xv


@dataclass
class GeodesicPolarChart:
    """Geodesic polar table: rays from ``center`` sampled at ``rho[k]``, angles ``phi[j]``."""

    immersion: Immersion
    center: np.ndarray
    radius: float
    rho: np.ndarray  # (n_rho + 1,)
    phi: np.ndarray  # (n_phi,)
    uv: np.ndarray  # (n_rho + 1, n_phi, 2)
    points: np.ndarray  # (n_rho + 1, n_phi, 3)
    velocity: np.ndarray  # unit tangents d/d rho, same shape

    @property
    def n_rho(self) -> int:
        return len(self.rho) - 1

    @property
    def n_phi(self) -> int:
        return len(self.phi)

    @property
    def dphi(self) -> float:
        return 2.0 * math.pi / self.n_phi

    @cached_property
    def sqrt_P(self) -> np.ndarray:
        """|d X / d phi|, the angular line element."""
        dX = _periodic_derivative(self.points, self.dphi, axis=1)
        return np.linalg.norm(dX, axis=-1)

    @property
    def P(self) -> np.ndarray:
        return self.sqrt_P**2

    @cached_property
    def d_sqrt_P(self) -> np.ndarray:
        """d sqrt(P) / d rho from the angular derivative of the ray tangents."""
        dX = _periodic_derivative(self.points, self.dphi, axis=1)
        dT = _periodic_derivative(self.velocity, self.dphi, axis=1)
        s = self.sqrt_P
        out = np.empty_like(s)
        pos = s > 0
        out[pos] = np.sum(dX * dT, -1)[pos] / s[pos]
        out[~pos] = np.linalg.norm(dT, axis=-1)[~pos]
        return out

    @cached_property
    def K(self) -> np.ndarray:
        return self.immersion.gauss_curvature_at(self.uv[..., 0], self.uv[..., 1])

    def ring_integral(self, f: np.ndarray) -> np.ndarray:
        """Periodic trapezoid rule in phi for each rho."""
        return np.sum(f, axis=1) * self.dphi

    @cached_property
    def L(self) -> np.ndarray:
        return self.ring_integral(self.sqrt_P)

    @cached_property
    def L_prime(self) -> np.ndarray:
        return self.ring_integral(self.d_sqrt_P)

    @cached_property
    def curvature_mass(self) -> np.ndarray:
        """M(rho) = integral over phi of K sqrt(P)."""
        return self.ring_integral(self.K * self.sqrt_P)

    def radial_integral(self, values: np.ndarray, upto: float | None = None) -> float:
        """Integral in rho of tabulated values via a cubic spline through the table."""
        upto = self.radius if upto is None else upto
        return float(CubicSpline(self.rho, values).integrate(0.0, upto))

    @cached_property
    def area(self) -> float:
        return self.radial_integral(self.L)

    def polar_integral(self, f: np.ndarray, upto: float | None = None) -> float:
        """Integral of f sqrt(P) d rho d phi over the geodesic disc."""
        return self.radial_integral(self.ring_integral(f * self.sqrt_P), upto)

    @cached_property
    def boundary_points(self) -> np.ndarray:
        return self.points[-1]


def geodesic_polar(i: Immersion, center=(0.0, 0.0), r: float = 0.5, n_rho: int = 64,
                   n_phi: int = 128) -> GeodesicPolarChart:
    """Shoot unit-speed geodesics from ``center`` with RK4 in the parameters."""
    if r <= 0:
        raise ImmersionError("radius must be positive")
    c = np.asarray(center, dtype=float)
    if np.hypot(*c) >= 1.0:
        raise ImmersionError("centre must lie inside the parameter disc")
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    Xu, Xv = i.first(c[0], c[1])
    e1 = Xu / np.linalg.norm(Xu)
    e2 = Xv - np.dot(Xv, e1) * e1
    e2 /= np.linalg.norm(e2)
    if np.dot(np.cross(e1, e2), np.cross(Xu, Xv)) < 0:
        e2 = -e2
    t3 = np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2
    J = np.stack([Xu, Xv], axis=1)  # (3, 2)
    g = J.T @ J
    w = np.linalg.solve(g, J.T @ t3.T).T  # (n_phi, 2)
    uv = np.broadcast_to(c, (n_phi, 2)).copy()

    def f(state):
        x, vel = state[:, :2], state[:, 2:]
        return np.hstack([vel, _christoffel_accel(i, x, vel)])

    h = r / n_rho
    state = np.hstack([uv, w])
    uvs = [uv.copy()]
    vels = [w.copy()]
    for k in range(n_rho):
        k1 = f(state)
        k2 = f(state + 0.5 * h * k1)
        k3 = f(state + 0.5 * h * k2)
        k4 = f(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out = np.hypot(state[:, 0], state[:, 1]) > 1.0
        if np.any(out):
            j = int(np.flatnonzero(out)[0])
            raise ImmersionError(
                f"geodesic at angle phi={phi[j]:.6g} leaves the parameter disc before rho={r:g}"
            )
        uvs.append(state[:, :2].copy())
        vels.append(state[:, 2:].copy())
    uvs = np.stack(uvs)
    vels = np.stack(vels)
    points = i(uvs[..., 0], uvs[..., 1])
    velocity = _tangent(i, uvs, vels)
    rho = np.linspace(0.0, r, n_rho + 1)
    return GeodesicPolarChart(i, c, r, rho, phi, uvs, points, velocity)


def bonnet_gauss_defect(chart: GeodesicPolarChart, rho: float | None = None) -> float:
    """L'(rho) + integral_0^rho M - 2 pi, with L' the integral of d sqrt(P)/d rho."""
    rho = chart.radius if rho is None else rho
    if not 0.0 < rho <= chart.radius * (1 + 1e-12):
        raise ImmersionError("rho must lie in (0, r]")
    Lp = float(CubicSpline(chart.rho, chart.L_prime)(rho))
    curv = chart.radial_integral(chart.curvature_mass, rho)
    return Lp + curv - 2.0 * math.pi


def _darboux(T_raw, dT_raw, N):
    """Curvature components from curve derivatives c', c'' and the surface normal."""
    speed = np.linalg.norm(T_raw, axis=-1)
    T = T_raw / speed[:, None]
    acc = dT_raw - np.sum(dT_raw * T, -1)[:, None] * T
    kvec = acc / speed[:, None] ** 2
    kg = np.sum(kvec * np.cross(N, T), -1)
    kn = -np.sum(kvec * N, -1)
    return kg, kn, np.hypot(kg, kn), speed


@dataclass
class BoundaryCurvatures:
    kappa_g: np.ndarray
    kappa_n: np.ndarray
    kappa: np.ndarray
    ds: np.ndarray

    @property
    def total(self) -> float:
        """Integral of kappa ds."""
        return float(np.sum(self.kappa * self.ds))

    @property
    def total_geodesic(self) -> float:
        return float(np.sum(self.kappa_g * self.ds))

    @property
    def length(self) -> float:
        return float(np.sum(self.ds))


def boundary_curvatures(i: Immersion, n: int | None = None) -> BoundaryCurvatures:
    """Darboux-frame curvatures of the image of the unit circle, oriented counterclockwise."""
    n = n or i.mesh.n_phi * 4
    t = 2.0 * math.pi * np.arange(n) / n
    c, s = np.cos(t), np.sin(t)
    Xu, Xv = i.first(c, s)
    Xuu, Xuv, Xvv = i.second(c, s)
    d1 = -s[:, None] * Xu + c[:, None] * Xv
    d2 = (s * s)[:, None] * Xuu - (2 * s * c)[:, None] * Xuv + (c * c)[:, None] * Xvv \
        - c[:, None] * Xu - s[:, None] * Xv
    if np.any(np.linalg.norm(d1, axis=-1) < 1e-14):
        raise ImmersionError("degenerate boundary tangent")
    kg, kn, k, speed = _darboux(d1, d2, i.normal(c, s))
    assert np.all(k >= np.abs(kg))
    return BoundaryCurvatures(kg, kn, k, speed * (2.0 * math.pi / n))


def chart_boundary_curvatures(chart: GeodesicPolarChart) -> BoundaryCurvatures:
    """Curvatures of the geodesic circle rho = r by spectral differentiation in phi."""
    pts = chart.boundary_points
    n = len(pts)
    k = np.fft.fftfreq(n, d=1.0 / n)
    F = np.fft.fft(pts, axis=0)
    if n % 2 == 0:
        k1 = k.copy()
        k1[n // 2] = 0.0
    else:
        k1 = k
    d1 = np.real(np.fft.ifft(1j * k1[:, None] * F, axis=0))
    d2 = np.real(np.fft.ifft(-(k**2)[:, None] * F, axis=0))
    uv = chart.uv[-1]
    N = chart.immersion.normal(uv[:, 0], uv[:, 1])
    kg, kn, kappa, speed = _darboux(d1, d2, N)
    return BoundaryCurvatures(kg, kn, kappa, speed * chart.dphi)
