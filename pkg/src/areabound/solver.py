"""Discrete-variational solvers for divergence-form graph equations.

The energy of a grid surface is a cell sum: every grid cell whose four
corners carry values contributes, at each corner, a quarter of the cell area
times F evaluated at that corner with the slopes of the two cell edges
meeting there.  A right side R adds the potential ``integral_0^zeta R``
at unknown nodes.  Residuals are the negative energy gradient divided by the
cell area, which is a centred, second-order discretisation of

    d/dx F_p + d/dy F_q - F_z - R.

Boundary and ring nodes hold Dirichlet data; interior nodes are unknown.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .domain import PlanarDomain
from .expr import Expression, parse
from .graph_surface import GraphSurface, grid_gradient
from .integrands import AreaIntegrand, FermatIntegrand, FermatWeight, Integrand, RightSide

# node offsets (dy, dx) of the four corners of a cell
_CORNERS = ((0, 0), (0, 1), (1, 0), (1, 1))


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    method: str = "damped_newton"
    tol: float = 1e-10
    max_iter: int = 100
    armijo: float = 1e-4
    max_backtracks: int = 40
    initial_guess: str = "harmonic"

    def __post_init__(self):
        if self.method not in ("damped_newton", "gradient_flow"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.initial_guess not in ("harmonic", "zero"):
            raise ValueError(f"unknown initial guess policy {self.initial_guess!r}")


@dataclass
class SolveResult:
    surface: GraphSurface
    residual: float
    iterations: int
    converged: bool
    energy_history: list[float] = field(default_factory=list)
    method: str = "damped_newton"
    tol: float = 1e-10

    def summary(self) -> dict:
        d = self.surface.domain
        return {
            "converged": self.converged,
            "residual": self.residual,
            "iterations": self.iterations,
            "method": self.method,
            "tol": self.tol,
            "energy": self.energy_history[-1] if self.energy_history else None,
            "grid": {"kind": d.kind, "nx": d.nx, "ny": d.ny, "h": d.h},
        }


class DiscreteEnergy:
    """Cell-quadrant energy of an integrand on a domain, with derivatives."""

    def __init__(self, d: PlanarDomain, F: Integrand, R: RightSide | None = None):
        self.d = d
        self.F = F
        self.m = F.m
        self.R = RightSide() if R is None else R
        if not self.R.is_zero and self.m != 1:
            raise SolverError("a right side is only supported for codimension 1")
        ny, nx = d.shape
        valued = d.valued_mask
        cells = valued[:-1, :-1] & valued[:-1, 1:] & valued[1:, :-1] & valued[1:, 1:]
        self.cj, self.ci = np.nonzero(cells)
        self.nnode = ny * nx
        self.w = 0.25 * d.hx * d.hy
        self.unknown = d.interior_mask.ravel()
        self.unknown_nodes = np.flatnonzero(self.unknown)
        self.node_to_unknown = np.full(self.nnode, -1)
        self.node_to_unknown[self.unknown_nodes] = np.arange(self.unknown_nodes.size)
        self.nu = self.unknown_nodes.size * self.m
        # per corner: (node, left, right, bottom, top) flat indices
        self.slots = []
        self.xy = []
        for oy, ox in _CORNERS:
            n = (self.cj + oy) * nx + (self.ci + ox)
            L = (self.cj + oy) * nx + self.ci
            Rr = L + 1
            B = self.cj * nx + (self.ci + ox)
            T = B + nx
            self.slots.append(np.stack([n, L, Rr, B, T]))
            self.xy.append((d.X.ravel()[n], d.Y.ravel()[n]))
        self.ux = d.X.ravel()[self.unknown_nodes]
        self.uy = d.Y.ravel()[self.unknown_nodes]
        self._slope_map = np.array([
            [0.0, -1.0 / d.hx, 1.0 / d.hx, 0.0, 0.0],
            [0.0, 0.0, 0.0, -1.0 / d.hy, 1.0 / d.hy],
            [1.0, 0.0, 0.0, 0.0, 0.0],
        ])

    # --- state conversion ---------------------------------------------------

    def full(self, zeta_fixed: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Flat (nnode, m) node values with unknowns replaced by ``u``."""
        z = zeta_fixed.reshape(self.nnode, self.m).copy()
        z[self.unknown_nodes] = u.reshape(-1, self.m)
        return z

    def _corner_states(self, z):
        out = []
        for k, slots in enumerate(self.slots):
            n, L, Rr, B, T = slots
            p = (z[Rr] - z[L]) / self.d.hx
            q = (z[T] - z[B]) / self.d.hy
            x, y = self.xy[k]
            out.append((x, y, z[n], p, q))
        return out

    # --- energy and derivatives ---------------------------------------------

    def energy(self, z: np.ndarray) -> float:
        total = 0.0
        for x, y, zn, p, q in self._corner_states(z):
            total += self.w * float(np.sum(self.F.value(x, y, zn, p, q)))
        if not self.R.is_zero:
            zu = z[self.unknown_nodes, 0]
            total += self.d.hx * self.d.hy * float(np.sum(self.R.potential(self.ux, self.uy, zu)))
        return total

    def gradient_full(self, z: np.ndarray) -> np.ndarray:
        """dE/dzeta at every node, shape (nnode, m)."""
        g = np.zeros((self.nnode, self.m))
        for slots, (x, y, zn, p, q) in zip(self.slots, self._corner_states(z)):
            n, L, Rr, B, T = slots
            Fp, Fq, Fz = self.F.gradient(x, y, zn, p, q)
            fp = self.w * Fp / self.d.hx
            fq = self.w * Fq / self.d.hy
            for s in range(self.m):
                g[:, s] += np.bincount(n, self.w * Fz[:, s], self.nnode)
                g[:, s] += np.bincount(Rr, fp[:, s], self.nnode) - np.bincount(L, fp[:, s], self.nnode)
                g[:, s] += np.bincount(T, fq[:, s], self.nnode) - np.bincount(B, fq[:, s], self.nnode)
        if not self.R.is_zero:
            zu = z[self.unknown_nodes, 0]
            g[self.unknown_nodes, 0] += self.d.hx * self.d.hy * self.R.value(self.ux, self.uy, zu)
        return g

    def gradient(self, z: np.ndarray) -> np.ndarray:
        return self.gradient_full(z)[self.unknown_nodes].ravel()

    def hessian(self, z: np.ndarray) -> sp.csr_matrix:
        """Sparse Hessian of the energy in the unknowns."""
        m = self.m
        rows, cols, vals = [], [], []
        D = self._slope_map
        for slots, state in zip(self.slots, self._corner_states(z)):
            HF = self.F.hessian(*state).reshape(-1, 3, m, 3, m)
            local = self.w * np.einsum("ak,bl,casbt->ckslt", D, D, HF, optimize=True)
            uk = self.node_to_unknown[slots]  # (5, ncell)
            for k in range(5):
                for l in range(5):
                    keep = (uk[k] >= 0) & (uk[l] >= 0)
                    if not np.any(keep):
                        continue
                    blk = local[keep][:, k, :, l, :]  # (nkeep, m, m)
                    r = (uk[k][keep][:, None] * m + np.arange(m))[:, :, None]
                    c = (uk[l][keep][:, None] * m + np.arange(m))[:, None, :]
                    rows.append(np.broadcast_to(r, blk.shape).ravel())
                    cols.append(np.broadcast_to(c, blk.shape).ravel())
                    vals.append(blk.ravel())
        if not self.R.is_zero:
            zu = z[self.unknown_nodes, 0]
            idx = np.arange(self.unknown_nodes.size)
            rows.append(idx)
            cols.append(idx)
            vals.append(self.d.hx * self.d.hy * self.R.dz(self.ux, self.uy, zu))
        H = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.nu, self.nu),
        ).tocsr()
        return H

    def residual_field(self, z: np.ndarray) -> np.ndarray:
        """Negative gradient over cell area at unknowns; NaN elsewhere. Shape (ny, nx, m)."""
        g = self.gradient_full(z)
        r = np.full((self.nnode, self.m), np.nan)
        r[self.unknown_nodes] = -g[self.unknown_nodes] / (self.d.hx * self.d.hy)
        if isinstance(self.F, FermatIntegrand):
            gam = self.F.gamma(self.ux, self.uy)
            r[self.unknown_nodes] /= np.broadcast_to(gam, self.ux.shape)[:, None]
        return r.reshape(self.d.ny, self.d.nx, self.m)

    def residual_norm(self, z: np.ndarray) -> float:
        r = self.residual_field(z)
        vals = r[self.d.interior_mask]
        return float(np.max(np.abs(vals))) if vals.size else 0.0


def variational_residual(s: GraphSurface, F: Integrand, R=None) -> np.ndarray:
    """Negative discrete energy gradient over cell area at interior nodes (NaN elsewhere).

    This is the quantity driven to zero by the solvers.
    """
    if F.m != s.codim:
        raise SolverError(f"integrand codimension {F.m} does not match surface codimension {s.codim}")
    E = DiscreteEnergy(s.domain, F, RightSide.parse(R))
    return E.residual_field(np.nan_to_num(s.zeta).reshape(-1, s.codim))


def _central_slopes(d: PlanarDomain, z: np.ndarray):
    """Central-difference slopes where both neighbours are valued, NaN elsewhere."""
    p = np.full(z.shape, np.nan)
    q = np.full(z.shape, np.nan)
    p[:, 1:-1] = (z[:, 2:] - z[:, :-2]) / (2 * d.hx)
    q[1:-1, :] = (z[2:, :] - z[:-2, :]) / (2 * d.hy)
    return p, q


def el_residual(s: GraphSurface, F: Integrand, R: RightSide | float | str | None = None) -> np.ndarray:
    """Strong-form Euler-Lagrange residual d/dx F_p + d/dy F_q - F_z - R.

    Fluxes are evaluated at nodes from central slopes and differenced
    centrally, or one-sided to second order next to nodes where no central
    slope exists; values live on interior nodes, NaN elsewhere.  For Fermat
    integrands the equation is divided by Gamma and the product rule applied,
    giving div((p, q)-flux / W) + (flux . grad Gamma) / (Gamma W).
    Shape (ny, nx, m).
    """
    if F.m != s.codim:
        raise SolverError(f"integrand codimension {F.m} does not match surface codimension {s.codim}")
    d = s.domain
    R = RightSide.parse(R)
    X = np.broadcast_to(d.X, d.shape)
    Y = np.broadcast_to(d.Y, d.shape)
    z = s.zeta
    p, q = _central_slopes(d, z)
    if isinstance(F, FermatIntegrand):
        area = AreaIntegrand(F.m)
        Fp, Fq, _ = area.gradient(X, Y, z, p, q)
        gam = np.broadcast_to(F.gamma(X, Y), d.shape)[..., None]
        gx, gy = F.gamma.gradient(X, Y)
        gx = np.broadcast_to(gx, d.shape)[..., None]
        gy = np.broadcast_to(gy, d.shape)[..., None]
        extra = (Fp * gx + Fq * gy) / gam
    else:
        Fp, Fq, Fz = F.gradient(X, Y, z, p, q)
        extra = -Fz
    res = np.empty(z.shape)
    for k in range(F.m):
        fx = np.where(np.isfinite(Fp[..., k]), Fp[..., k], np.nan)
        fy = np.where(np.isfinite(Fq[..., k]), Fq[..., k], np.nan)
        dfx, _ = grid_gradient(d, fx, strict=False)
        _, dfy = grid_gradient(d, fy, strict=False)
        res[..., k] = dfx + dfy + extra[..., k]
    if not R.is_zero:
        res[..., 0] -= R.value(X, Y, z[..., 0])
    res[~d.interior_mask] = np.nan
    return res


def residual_sup(s: GraphSurface, F: Integrand, R=None, kind: str = "strong") -> float:
    """Sup norm over interior nodes of the strong-form or variational residual."""
    if kind not in ("strong", "variational"):
        raise ValueError(f"unknown residual kind {kind!r}")
    r = el_residual(s, F, R) if kind == "strong" else variational_residual(s, F, R)
    vals = r[s.domain.interior_mask]
    return float(np.max(np.abs(vals))) if vals.size else 0.0


# --- boundary data and initial guesses ------------------------------------------


BoundaryData = Sequence[Expression | Callable | float | str] | str


def _boundary_callables(phi, m: int) -> list[Callable]:
    if isinstance(phi, str):
        from .expr import parse_list

        phi = parse_list(phi)
    if callable(phi) or isinstance(phi, (int, float)):
        phi = [phi]
    out = []
    for f in phi:
        if isinstance(f, str):
            f = parse(f)
        if isinstance(f, (int, float)):
            c = float(f)
            f = lambda x, y, c=c: np.full(np.shape(x), c)
        out.append(f)
    if len(out) != m:
        raise SolverError(f"expected {m} boundary components, got {len(out)}")
    return out


def dirichlet_values(d: PlanarDomain, phi, m: int) -> np.ndarray:
    """Node array with boundary data at valued non-interior nodes, zero inside, NaN outside."""
    funcs = _boundary_callables(phi, m)
    z = np.zeros(d.shape + (m,))
    ring = d.boundary_mask
    for k, f in enumerate(funcs):
        vals = np.broadcast_to(np.asarray(f(d.X, d.Y), dtype=float), d.shape)
        z[ring, k] = vals[ring]
    if not np.all(np.isfinite(z[ring])):
        raise SolverError("boundary data not finite")
    z[~d.valued_mask] = np.nan
    return z


def _laplacian(E: DiscreteEnergy) -> sp.csr_matrix:
    """Five-point negative Laplacian (times cell area) on the unknowns, per component."""
    d = E.d
    nx = d.nx
    idx = E.unknown_nodes
    n = idx.size
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    for off, h in ((1, d.hx), (-1, d.hx), (nx, d.hy), (-nx, d.hy)):
        nb = idx + off
        c = d.hx * d.hy / h**2
        diag += c
        k = E.node_to_unknown[nb]
        keep = k >= 0
        rows.append(np.arange(n)[keep])
        cols.append(k[keep])
        vals.append(np.full(keep.sum(), -c))
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    return sp.kron(A, sp.identity(E.m), format="csc")


def harmonic_extension(E: DiscreteEnergy, zeta_fixed: np.ndarray) -> np.ndarray:
    """Unknown values solving the five-point Laplace equation with the fixed data."""
    d = E.d
    z = np.nan_to_num(zeta_fixed.reshape(E.nnode, E.m))
    z[E.unknown_nodes] = 0.0
    A = _laplacian(E)
    # right side from fixed neighbours
    b = np.zeros((E.unknown_nodes.size, E.m))
    for off, h in ((1, d.hx), (-1, d.hx), (d.nx, d.hy), (-d.nx, d.hy)):
        nb = E.unknown_nodes + off
        fixed = E.node_to_unknown[nb] < 0
        b[fixed] += (d.hx * d.hy / h**2) * z[nb[fixed]]
    return spla.spsolve(A, b.ravel())


# --- iterations -------------------------------------------------------------------


def _rounding_level(E0: float, E1: float) -> bool:
    return abs(E1 - E0) <= 1e-13 * max(1.0, abs(E0))


def _line_search(E: DiscreteEnergy, zf, u, e0, g, direction, cfg, res0, t0=1.0):
    """Armijo backtracking; near convergence accept residual decrease at rounding-level energy change."""
    slope = float(g @ direction)
    t = t0
    for _ in range(cfg.max_backtracks):
        u1 = u + t * direction
        z1 = E.full(zf, u1)
        e1 = E.energy(z1)
        if np.isfinite(e1):
            if e1 <= e0 + cfg.armijo * t * slope:
                return t, u1, z1, e1
            if _rounding_level(e0, e1) and E.residual_norm(z1) < res0:
                return t, u1, z1, min(e0, e1)
        t *= 0.5
    return None


def _gradient_flow(E, zf, u, cfg, history, precond):
    z = E.full(zf, u)
    e = E.energy(z)
    history.append(e)
    t = 1.0
    for it in range(1, cfg.max_iter + 1):
        res = E.residual_norm(z)
        if res <= cfg.tol:
            return u, z, it - 1, True
        g = E.gradient(z)
        direction = -precond(g)
        step = _line_search(E, zf, u, e, g, direction, cfg, res, t0=min(1.0, 2.0 * t))
        if step is None:
            return u, z, it, False
        t, u, z, e_new = step
        e = min(e, e_new)
        history.append(e)
    return u, z, cfg.max_iter, E.residual_norm(z) <= cfg.tol


def _damped_newton(E, zf, u, cfg, history, precond):
    z = E.full(zf, u)
    e = E.energy(z)
    history.append(e)
    lam = 0.0
    for it in range(1, cfg.max_iter + 1):
        res = E.residual_norm(z)
        if res <= cfg.tol:
            return u, z, it - 1, True
        g = E.gradient(z)
        H = E.hessian(z)
        scale = float(np.mean(np.abs(H.diagonal()))) or 1.0
        step = None
        for _ in range(8):
            try:
                M = H if lam == 0.0 else H + lam * scale * sp.identity(E.nu, format="csr")
                with np.errstate(all="ignore"):
                    direction = spla.spsolve(M.tocsc(), -g)
                ok = np.all(np.isfinite(direction)) and float(g @ direction) < 0.0
            except (RuntimeError, ValueError):
                ok = False
            if ok:
                step = _line_search(E, zf, u, e, g, direction, cfg, res)
                if step is not None:
                    break
            lam = max(10.0 * lam, 1e-8)
        if step is None:
            # Newton failed at every damping level: take a preconditioned gradient step
            step = _line_search(E, zf, u, e, g, -precond(g), cfg, res)
            if step is None:
                return u, z, it, False
        t, u, z, e_new = step
        lam = lam / 10.0 if lam > 1e-12 else 0.0
        e = min(e, e_new)
        history.append(e)
    return u, z, cfg.max_iter, E.residual_norm(z) <= cfg.tol


def minimize(d: PlanarDomain, F: Integrand, R, phi, cfg: SolveConfig | None = None,
             initial: np.ndarray | None = None) -> SolveResult:
    """Minimise the discrete energy with Dirichlet data ``phi`` at boundary nodes."""
    cfg = cfg or SolveConfig()
    R = RightSide.parse(R)
    E = DiscreteEnergy(d, F, R)
    zf = dirichlet_values(d, phi, F.m)
    if initial is not None:
        u = np.asarray(initial, dtype=float)[d.interior_mask].ravel()
    elif cfg.initial_guess == "harmonic" and E.nu:
        u = harmonic_extension(E, zf)
    else:
        u = np.zeros(E.nu)
    zf_flat = np.nan_to_num(zf).reshape(E.nnode, F.m)
    history: list[float] = []
    if E.nu == 0:
        z = zf_flat
        it, conv = 0, True
        history.append(E.energy(z))
    else:
        lu = spla.splu(_laplacian(E))
        precond = lu.solve
        run = _damped_newton if cfg.method == "damped_newton" else _gradient_flow
        u, z, it, conv = run(E, zf_flat, u, cfg, history, precond)
    zeta = z.reshape(d.shape + (F.m,)).copy()
    zeta[~d.valued_mask] = np.nan
    res = E.residual_norm(z)
    surface = GraphSurface(d, zeta)
    return SolveResult(surface, res, it, bool(conv and res <= cfg.tol), history, cfg.method, cfg.tol)


def solve_dirichlet(d: PlanarDomain, F: Integrand, R=None, phi="0", cfg: SolveConfig | None = None) -> SolveResult:
    if F.m != 1 and isinstance(phi, str) and "," not in phi:
        phi = ",".join([phi] * F.m)
    return minimize(d, F, R, phi, cfg)


def solve_minimal_system(d: PlanarDomain, m: int, phi, cfg: SolveConfig | None = None) -> SolveResult:
    return minimize(d, AreaIntegrand(m), None, phi, cfg)


def solve_fermat(d: PlanarDomain, m: int, gamma: FermatWeight | str, phi,
                 cfg: SolveConfig | None = None) -> SolveResult:
    if isinstance(gamma, str):
        gamma = FermatWeight.parse(gamma)
    gamma = gamma.sampled_on(d)
    vals = np.broadcast_to(gamma(d.X, d.Y), d.shape)[d.valued_mask]
    if gamma.gamma0 <= 0.0 or np.any(vals <= 0.0):
        raise SolverError("refraction weight must be positive on the domain")
    return minimize(d, FermatIntegrand(gamma, m), None, phi, cfg)
