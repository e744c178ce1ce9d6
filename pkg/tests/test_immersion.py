import math

import numpy as np
import pytest
from scipy.special import jn_zeros

from areabound.immersion import (
    ImmersionError,
    NormIntegrand,
    PolarMesh,
    WeightMatrix,
    anisotropic_weight,
    bonnet_gauss_defect,
    boundary_curvatures,
    catenoid,
    chart_boundary_curvatures,
    det_prime,
    dirichlet_energies,
    from_values,
    gauss_curvature,
    geodesic_polar,
    identity_weight,
    immersion_from_json,
    mu_stability_estimate,
    plane,
    rayleigh_quotient,
    scherk,
    sphere_cap,
    weight_from_integrand,
)


class TestSurfaces:
    def test_sphere_curvature(self):
        assert np.max(np.abs(gauss_curvature(sphere_cap(1.2)) - 1.0)) < 1e-8

    def test_catenoid_curvature(self):
        c = catenoid(1.0)
        v = c.mesh.nodes[:, 1]
        np.testing.assert_allclose(gauss_curvature(c), -1.0 / np.cosh(v) ** 4, atol=1e-8)

    def test_plane_boundary_circle(self):
        b = boundary_curvatures(plane())
        assert b.length == pytest.approx(2 * math.pi, rel=1e-12)
        assert b.total == pytest.approx(2 * math.pi, rel=1e-12)
        assert np.all(np.abs(b.kappa_n) < 1e-12)

    @pytest.mark.parametrize("bad", [0.0, math.pi])
    def test_sphere_cap_range(self, bad):
        with pytest.raises(ImmersionError):
            sphere_cap(bad)

    def test_scherk_range(self):
        with pytest.raises(ImmersionError):
            scherk(2.0)

    def test_json_forms(self):
        a = immersion_from_json({"builtin": "catenoid", "params": {"scale": 0.5}, "mesh": {"n_rho": 8, "n_phi": 16}})
        assert a.mesh.n_rho == 8
        b = immersion_from_json({"expr": ["u", "v", "u*v"]})
        np.testing.assert_allclose(b(0.3, 0.5), [0.3, 0.5, 0.15])
        with pytest.raises(ImmersionError, match="unknown builtin"):
            immersion_from_json({"builtin": "torus"})
        with pytest.raises(ImmersionError):
            immersion_from_json({"values": [[0, 0, 0]]})
        with pytest.raises(ImmersionError):
            immersion_from_json({})

    def test_values_fit_reproduces_polynomial_surface(self):
        m = PolarMesh(8, 16)
        n = m.nodes
        f = lambda u, v: np.stack([u, v, u * u - 0.5 * u * v**2], axis=-1)
        i = from_values(n, f(n[:, 0], n[:, 1]), degree=4)
        u = np.array([0.1, -0.4, 0.7])
        v = np.array([0.2, 0.5, -0.3])
        np.testing.assert_allclose(i(u, v), f(u, v), atol=1e-10)
        np.testing.assert_allclose(gauss_curvature(i.with_mesh(4, 8)),
                                   gauss_curvature(immersion_from_json({"expr": ["u", "v", "u^2 - 0.5*u*v^2"]})
                                                   .with_mesh(4, 8)), atol=1e-6)


@pytest.fixture(scope="module")
def sphere_chart():
    return geodesic_polar(sphere_cap(1.2), (0.0, 0.0), 1.0)


class TestGeodesicPolar:
    def test_sphere_metric(self, sphere_chart):
        c = sphere_chart
        np.testing.assert_allclose(c.P, np.sin(c.rho)[:, None] ** 2 * np.ones(c.n_phi), atol=1e-6)
        assert c.area == pytest.approx(2 * math.pi * (1 - math.cos(1.0)), rel=1e-6)
        assert np.max(np.abs(c.K - 1.0)) < 1e-8

    def test_sphere_geodesic_circle(self, sphere_chart):
        b = chart_boundary_curvatures(sphere_chart)
        assert b.length == pytest.approx(2 * math.pi * math.sin(1.0), rel=1e-8)
        assert b.total_geodesic == pytest.approx(2 * math.pi * math.cos(1.0), rel=1e-8)

    def test_plane(self):
        c = geodesic_polar(plane(), (0.1, -0.2), 0.5)
        assert c.area == pytest.approx(math.pi * 0.25, rel=1e-6)
        np.testing.assert_allclose(c.P, c.rho[:, None] ** 2 * np.ones(c.n_phi), rtol=1e-6, atol=1e-12)

    @pytest.mark.parametrize("surface,r", [(sphere_cap(1.2), 1.0), (catenoid(1.0), 0.5)])
    def test_bonnet_gauss(self, surface, r):
        c = geodesic_polar(surface, (0.0, 0.0), r)
        assert abs(bonnet_gauss_defect(c)) < 1e-4
        assert abs(bonnet_gauss_defect(c, 0.5 * r)) < 1e-4

    def test_leaving_parameter_disc(self):
        with pytest.raises(ImmersionError):
            geodesic_polar(catenoid(0.5), (0.0, 0.0), 0.5)


class TestWeights:
    @pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
    def test_anisotropic_axioms(self, a):
        G = anisotropic_weight(a)
        assert G.satisfies_axioms()
        assert G.g0 == pytest.approx(max(a, 1 / a) - 1)

    def test_violations_reported(self):
        bad = WeightMatrix(lambda X, Z: 2.0 * np.broadcast_to(np.eye(3), np.shape(Z)[:-1] + (3, 3)), 0.0)
        c = bad.check()
        assert c["fixes_direction"] > 0.5 and c["determinant"] > 1
        assert not bad.satisfies_axioms()

    def test_norm_integrand_gives_identity(self):
        G = weight_from_integrand(NormIntegrand())
        Z = np.random.default_rng(0).normal(size=(20, 3))
        np.testing.assert_allclose(G(np.zeros((20, 3)), Z), np.broadcast_to(np.eye(3), (20, 3, 3)), atol=1e-6)
        assert G.g0 < 1e-6
        np.testing.assert_allclose(det_prime(NormIntegrand(), np.zeros((20, 3)), Z / np.linalg.norm(Z, axis=1)[:, None]),
                                   1.0, rtol=1e-10)

    @pytest.mark.parametrize("a", [0.7, 2.0])
    def test_energy_sandwich(self, a):
        G = anisotropic_weight(a)
        E0, EG = dirichlet_energies(catenoid(1.0), G, lambda u, v: (1 - u * u - v * v) * (1 + u + v * v))
        assert E0 / (1 + G.g0) <= EG <= (1 + G.g0) * E0

    def test_test_field_must_vanish(self):
        with pytest.raises(ImmersionError):
            dirichlet_energies(plane(), identity_weight(), lambda u, v: 1 + 0 * u)


class TestStability:
    def test_plane_unbounded_without_potential(self):
        assert math.isinf(mu_stability_estimate(plane(), identity_weight()))

    def test_plane_first_dirichlet_eigenvalue(self):
        # q = 1 on the flat unit disc: mu is the first Dirichlet eigenvalue j_{0,1}^2
        exact = jn_zeros(0, 1)[0] ** 2
        errs = [abs(mu_stability_estimate(plane().with_mesh(*m), identity_weight(), 1.0) - exact)
                for m in ((16, 32), (32, 64))]
        assert errs[1] < 0.02
        assert errs[0] / errs[1] > 3.0

    def test_rayleigh_quotient_bounds_mu(self):
        c = catenoid(1.0)
        mu = mu_stability_estimate(c, identity_weight())
        for phi in (lambda u, v: 1 - u * u - v * v, lambda u, v: (1 - u * u - v * v) * (2 + u)):
            assert rayleigh_quotient(c, identity_weight(), phi) >= mu * (1 - 1e-10)

    def test_negative_excess_rejected(self):
        with pytest.raises(ImmersionError):
            mu_stability_estimate(sphere_cap(1.0), identity_weight())
