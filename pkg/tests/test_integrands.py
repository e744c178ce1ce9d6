import math

import numpy as np
import pytest

from areabound.domain import PlanarDomain
from areabound.graph_surface import GraphSurface
from areabound.integrands import (
    CATALOG,
    AreaIntegrand,
    CallableIntegrand,
    DirichletIntegrand,
    FermatWeight,
    IntegrandError,
    RightSide,
    check_A3,
    coercivity_check,
    estimate_k0,
    estimate_m1,
    get_integrand,
    gradcheck,
    h0_bound,
    mean_curvature_field,
    nonneg_radial_check,
    random_states,
)

BUILTIN_SPECS = [("area", 1), ("area_nd", 2), ("area_nd", 4), ("dirichlet", 1), ("dirichlet", 3),
                 ("fermat:gamma=1+x^2", 1), ("fermat:gamma=1+x^2", 2),
                 ("fermat:gamma=exp(x*y)", 3), ("prescribed_H:h=0.3", 1)]


@pytest.mark.parametrize("spec,m", BUILTIN_SPECS)
def test_gradcheck_builtins(spec, m):
    assert gradcheck(get_integrand(spec, m), samples=100, seed=1) < 1e-6


def test_area_flux_closed_form():
    x, y, z, p, q = random_states(1, 50, seed=3)
    Fp, Fq, Fz = AreaIntegrand(1).gradient(x, y, z, p, q)
    W = np.sqrt(1 + p**2 + q**2)
    np.testing.assert_allclose(Fp, p / W, rtol=1e-14)
    np.testing.assert_allclose(Fq, q / W, rtol=1e-14)
    assert not np.any(Fz)


def test_fermat_scales_area():
    x, y, z, p, q = random_states(2, 20, seed=4)
    g = 1 + x**2
    F = get_integrand("fermat:gamma=1+x^2", 2)
    A = AreaIntegrand(2)
    np.testing.assert_allclose(F.value(x, y, z, p, q), g * A.value(x, y, z, p, q), rtol=1e-14)
    np.testing.assert_allclose(F.hessian(x, y, z, p, q), g[:, None, None] * A.hessian(x, y, z, p, q),
                               rtol=1e-13)


def test_broken_derivative_detected():
    class Broken(AreaIntegrand):
        def gradient(self, x, y, z, p, q):
            a, b, c = super().gradient(x, y, z, p, q)
            return 1.1 * a, b, c

    assert gradcheck(Broken(1)) > 1e-2


def test_callable_integrand_uses_finite_differences():
    F = CallableIntegrand(lambda x, y, z, p, q: (p**2 + z * q)[..., 0], 1)
    x, y, z, p, q = random_states(1, 10, seed=5)
    Fp, Fq, Fz = F.gradient(x, y, z, p, q)
    np.testing.assert_allclose(Fp, 2 * p, rtol=1e-8)
    np.testing.assert_allclose(Fq, z, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(Fz, q, rtol=1e-8, atol=1e-10)


class TestConstants:
    def test_area(self):
        F = AreaIntegrand(1)
        assert estimate_m1(F) == pytest.approx(1 / math.sqrt(8), abs=1e-4)
        assert 0.99 <= estimate_k0(F) <= 1.0
        assert check_A3(F)
        assert coercivity_check(F, 1 / math.sqrt(8)) >= -1e-8
        assert nonneg_radial_check(F)

    def test_area_coercivity_threshold(self):
        # r^2 / sqrt(1 + r^2) >= m1 min(r, r^2) exactly when m1 <= 1/sqrt2
        F = AreaIntegrand(1)
        assert coercivity_check(F, 0.7) >= 0
        assert coercivity_check(F, 0.72) < 0

    def test_dirichlet(self):
        F = DirichletIntegrand(1)
        assert math.isinf(estimate_k0(F))
        assert estimate_m1(F) == pytest.approx(1.0)

    def test_shifted_integrand_fails_normalisation(self):
        F = CallableIntegrand(lambda x, y, z, p, q: np.sqrt(1 + (p[..., 0] - 1) ** 2 + q[..., 0] ** 2), 1)
        assert not check_A3(F)

    def test_constants_need_codimension_one(self):
        with pytest.raises(IntegrandError):
            estimate_m1(AreaIntegrand(2))


class TestCatalog:
    def test_unknown(self):
        with pytest.raises(IntegrandError, match="unknown integrand"):
            get_integrand("nope")

    def test_fermat_needs_gamma(self):
        with pytest.raises(IntegrandError):
            get_integrand("fermat")

    def test_monkeypatched_entry(self, monkeypatch):
        monkeypatch.setitem(CATALOG, "double_area", lambda m, p: CallableIntegrand(
            lambda x, y, z, p_, q: 2 * np.sqrt(1 + p_[..., 0] ** 2 + q[..., 0] ** 2), m))
        assert get_integrand("double_area").value(0.0, 0.0, np.zeros(1), np.zeros(1), np.zeros(1)) == 2.0


class TestFermatWeight:
    def test_sampled_bounds(self):
        g = FermatWeight.parse("1 + x^2/4", PlanarDomain.unit_disc(129))
        assert g.gamma0 == pytest.approx(1.0)
        assert g.gamma1 == pytest.approx(1.25)
        assert g.gamma2 == pytest.approx(0.5)
        assert not g.is_constant

    def test_constant(self, disc65):
        assert FermatWeight.parse("2", disc65).is_constant

    def test_mean_curvature_vanishes_on_flat_graph(self, disc65):
        g = FermatWeight.parse("2 + x", disc65)
        s = GraphSurface.from_functions(disc65, [lambda x, y: 0 * x])
        m = disc65.valued_mask
        assert np.max(np.abs(mean_curvature_field(g, s, 1)[m])) == 0.0

    def test_mean_curvature_on_tilted_plane(self, disc65):
        # zeta = x: unit normal (-1, 0, 1)/sqrt2, Gamma = 1 + y/2 has grad (0, 1/2)
        g = FermatWeight.parse("2 + x", disc65)
        s = GraphSurface.from_functions(disc65, [lambda x, y: x])
        m = disc65.valued_mask
        H = mean_curvature_field(g, s, 1)[m]
        expected = (-1 / math.sqrt(2)) / (2 * (2 + disc65.X[m]) * math.sqrt(2))
        np.testing.assert_allclose(H, expected, rtol=1e-12)

    def test_h0_bound_constant_weight(self, disc65):
        s = GraphSurface.from_functions(disc65, [lambda x, y: x * y])
        b = h0_bound(FermatWeight.parse("1"), [s])
        assert b.value == 0.0 and b.source == "sampled"
        assert h0_bound(FermatWeight.parse("1"), [s], override=0.3).value == 0.3


class TestRightSide:
    def test_parse_forms(self):
        assert RightSide.parse(None).is_zero
        assert RightSide.parse("0.2").constant == 0.2
        assert RightSide.parse("x*z").expression is not None

    def test_potential_is_antiderivative(self):
        R = RightSide.parse("1 + z^2")
        z = np.linspace(-1, 1, 7)
        np.testing.assert_allclose(R.potential(0 * z, 0 * z, z), z + z**3 / 3, rtol=1e-13, atol=1e-15)
        np.testing.assert_allclose(R.dz(0 * z, 0 * z, z), 2 * z, rtol=1e-14)
