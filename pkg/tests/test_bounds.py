import json
import math

import numpy as np
import pytest

from areabound.bounds import (
    BoundReport,
    Hypothesis,
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
    smallness_factor,
)
from areabound.domain import PlanarDomain
from areabound.graph_surface import GraphSurface
from areabound.immersion import catenoid, geodesic_polar, plane, sphere_cap
from areabound.integrands import AreaIntegrand, DirichletIntegrand, FermatWeight
from areabound.solver import SolveConfig, solve_dirichlet

SQRT8 = math.sqrt(8.0)


@pytest.fixture(scope="module")
def disc129():
    return PlanarDomain.unit_disc(129)


@pytest.fixture(scope="module")
def exact_z2(disc129):
    return GraphSurface.from_functions(disc129, [lambda x, y: x * x - y * y, lambda x, y: 2 * x * y])


@pytest.fixture(scope="module")
def plane_chart():
    return geodesic_polar(plane(), (0.0, 0.0), 0.5)


class TestReport:
    def test_verdicts(self):
        assert BoundReport("x", 1.0, 2.0).verdict == "holds"
        assert BoundReport("x", 2.0, 1.0).verdict == "violated"
        assert BoundReport("x", 2.0, 1.0, tolerance=1.5).verdict == "holds"
        assert BoundReport("x", 1.0, 2.0, [Hypothesis("h", False, 0.0)]).verdict == "not_applicable"

    def test_strict_equality(self):
        assert BoundReport("x", 1.0, 1.0).verdict == "holds"
        assert BoundReport("x", 1.0, 1.0, strict=True).verdict == "violated"

    def test_serialisation(self):
        r = BoundReport("x", 1.0, math.inf, [Hypothesis("h", True, math.nan)], {"k0": math.inf})
        d = r.to_dict()
        assert d["rhs"] == "inf" and d["slack"] == "inf" and d["inputs"]["k0"] == "inf"
        assert d["hypotheses"][0]["value"] == "nan"
        json.dumps(d, allow_nan=False)


class TestGraphBounds:
    def test_flat_disc_is_equality_case(self, disc129):
        s = GraphSurface.from_functions(disc129, [lambda x, y: 0 * x])
        r = bound_minimal_graph(s)
        assert r.lhs == pytest.approx(math.pi, rel=1e-12)
        assert r.rhs == pytest.approx(math.pi, rel=1e-12)
        assert r.verdict == "holds"

    def test_tilted_plane_closed_form(self, disc129):
        s = GraphSurface.from_functions(disc129, [lambda x, y: 0.3 * x + 0.4 * y])
        r = bound_minimal_graph(s)
        assert r.lhs == pytest.approx(math.pi * math.sqrt(1.25), rel=1e-12)
        assert r.rhs == pytest.approx(math.pi + SQRT8 * 0.5 * 2 * math.pi, rel=1e-4)

    def test_divergence_form_matches_minimal_specialisation(self, scherk_solution):
        a = bound_homogeneous(scherk_solution, AreaIntegrand(1))
        b = bound_minimal_graph(scherk_solution)
        assert a.lhs == b.lhs
        assert a.rhs == pytest.approx(b.rhs, rel=1e-12)
        assert a.verdict == b.verdict == "holds"
        assert a.bound_id == "eq3.19" and b.bound_id == "eq3.22"

    def test_prescribed_H_formula(self, cap_solutions):
        res = cap_solutions[0.2]
        r = bound_prescribed_H(res, 0.2)
        i = r.inputs
        expected = (1 + 2 * SQRT8 * 0.2 * i["zeta_sup"]) * i["domain_area"] \
            + SQRT8 * i["zeta_boundary_sup"] * i["boundary_length"]
        assert r.rhs == pytest.approx(expected, rel=1e-12)
        sharp = bound_prescribed_H(res, 0.2, sharp=True)
        assert sharp.rhs < r.rhs and sharp.verdict == "holds"

    def test_divergence_form_with_right_side(self, cap_solutions):
        r = bound_divergence_graph(cap_solutions[0.2], AreaIntegrand(1), 0.4)
        assert r.verdict == "holds"
        assert r.inputs["R_sup"] == 0.4
        # integral of |zeta R| never exceeds |zeta|_0 |R|_0 |Omega|
        assert r.rhs_alternate <= r.rhs + 1e-12

    def test_interior_part(self, scherk_solution):
        r = bound_interior(scherk_solution, AreaIntegrand(1), nu=0.2)
        assert r.verdict == "holds"
        assert r.lhs < bound_minimal_graph(scherk_solution).lhs
        assert r.inputs["interior_area"] == pytest.approx(1.2**2, rel=1e-12)

    def test_unbounded_gradient_not_applicable(self, xy_solution):
        r = bound_homogeneous(xy_solution.surface, DirichletIntegrand(1))
        assert not r.hypothesis("gradient_bounded").satisfied
        assert r.verdict == "not_applicable"

    def test_unconverged_solve_not_applicable(self):
        res = solve_dirichlet(PlanarDomain.unit_square(33), AreaIntegrand(1), None, "x*y", SolveConfig(max_iter=1))
        assert bound_minimal_graph(res).verdict == "not_applicable"

    def test_codimension_guard(self, exact_z2):
        with pytest.raises(ValueError):
            bound_minimal_graph(exact_z2)


class TestSystems:
    def test_holomorphic_closed_form(self, exact_z2):
        # area 3 pi; boundary sups 1, 1; tangential sups 1, 2; rhs = pi + 2*2pi + 4*2pi*2
        r = bound_minimal_system(exact_z2)
        assert r.lhs == pytest.approx(3 * math.pi, abs=1e-3)
        assert r.rhs == pytest.approx(21 * math.pi, abs=5e-3)
        assert r.inputs["tangential_sup"] == pytest.approx(2.0, abs=1e-3)

    def test_constant_weight_matches_minimal_system(self, exact_z2):
        a = bound_fermat(exact_z2, "1")
        b = bound_minimal_system(exact_z2)
        assert a.inputs["Lambda"] == 1.0 and a.inputs["h0"] == 0.0
        assert a.lhs == b.lhs and a.rhs == pytest.approx(b.rhs, rel=1e-12)

    def test_codimension_one_drops_tangential_term(self, cap_solutions):
        r = bound_fermat(cap_solutions[0.1].surface, "1", h0=0.1)
        i = r.inputs
        expected = i["domain_area"] + i["boundary_length"] * i["zeta_boundary_sup"] \
            + 2 * 0.1 * i["domain_area"] * i["zeta_sup"]
        assert r.rhs == pytest.approx(expected, rel=1e-12)

    def test_smallness(self):
        g = FermatWeight.parse("1 + x/4", PlanarDomain.unit_disc(65))
        assert smallness_factor(1, g, 10.0) == 1.0
        assert smallness_factor(2, g, 0.5) == pytest.approx(1 - math.sqrt(2) * 4 * 0.25 * 0.5 / 0.75)
        assert smallness_factor(2, FermatWeight.parse("3").sampled_on(PlanarDomain.unit_disc(17)), 100.0) == 1.0

    def test_large_weight_gradient_not_applicable(self, exact_z2):
        r = bound_fermat(exact_z2, "1 + 4*x")
        assert not r.hypothesis("smallness").satisfied
        assert r.verdict == "not_applicable"


class TestChartBounds:
    def test_stable_disc_plane(self, plane_chart):
        r = bound_mu_stable_disc(plane_chart, 2.0)
        assert r.lhs == pytest.approx(math.pi * 0.25, rel=1e-6)
        assert r.rhs == pytest.approx(2 * math.pi * 2 * 0.25 / 3, rel=1e-14)
        assert r.slack == pytest.approx(math.pi * 0.25 / 3, abs=1e-6)

    def test_stable_disc_negative_q(self, plane_chart):
        r = bound_mu_stable_disc(plane_chart, 2.0, q=-1.0)
        assert r.inputs["q_negative_integral"] == pytest.approx(-math.pi * 0.25, rel=1e-6)
        assert r.rhs == pytest.approx(4 * math.pi * 0.25 / 3 + 2 * 0.25 / 3 * math.pi * 0.25, rel=1e-6)

    @pytest.mark.parametrize("mu,g0", [(0.5, 0.0), (1.0, 1.5), (2.0, -0.1)])
    def test_stable_disc_gating(self, plane_chart, mu, g0):
        assert bound_mu_stable_disc(plane_chart, mu, g0).verdict == "not_applicable"

    def test_cmc(self):
        r = bound_cmc(1.0, 1.0, 0.5, 3.0)
        assert r.rhs == pytest.approx(2 * math.pi)
        assert r.verdict == "holds"
        assert bound_cmc(1.0, 0.4, 0.5, 3.0).verdict == "not_applicable"

    def test_curvatura_integra_sphere(self):
        c = geodesic_polar(sphere_cap(1.2), (0.0, 0.0), 1.0)
        r = bound_curvatura_integra(c, 1.0)
        assert r.lhs == pytest.approx(2 * math.pi * (1 - math.cos(1.0)), rel=1e-6)
        assert r.rhs == pytest.approx(math.pi, abs=1e-8)
        assert r.verdict == "holds"
        assert bound_curvatura_integra(c, 0.5).verdict == "not_applicable"

    def test_boundary_curvature_plane_equality(self, plane_chart):
        r = bound_boundary_curvature(plane_chart)
        assert r.lhs == pytest.approx(math.pi * 0.25, rel=1e-6)
        assert r.rhs == pytest.approx(math.pi * 0.25, rel=1e-6)

    def test_boundary_curvature_sphere(self):
        c = geodesic_polar(sphere_cap(1.2), (0.0, 0.0), 1.0)
        r = bound_boundary_curvature(c, K0=1.0)
        A = 2 * math.pi * (1 - math.cos(1.0))
        assert r.lhs == pytest.approx(0.5 * A, rel=1e-6)
        assert r.verdict == "holds"
        assert bound_boundary_curvature(c, K0=2.5).verdict == "not_applicable"

    def test_chart_mismatch(self, plane_chart):
        with pytest.raises(ValueError):
            bound_boundary_curvature(plane_chart, catenoid(1.0))


class TestOuterBall:
    def test_flat_disc(self):
        s = GraphSurface.from_functions(PlanarDomain.unit_disc(129), [lambda x, y: 0 * x])
        r = bound_outer_ball(s, 0.5)
        assert r.lhs == pytest.approx(math.pi * 0.25, rel=2e-3)
        assert r.rhs == pytest.approx(math.pi)
        assert r.applicable and r.verdict == "holds" and r.strict

    def test_ball_exceeding_surface(self):
        s = GraphSurface.from_functions(PlanarDomain.unit_disc(65), [lambda x, y: 0 * x])
        r = bound_outer_ball(s, 1.5)
        assert not r.hypothesis("ball_inside_surface").satisfied
        assert r.verdict == "not_applicable"

    def test_annulus_is_not_simply_connected(self):
        m = plane().with_mesh(16, 32)
        n = m.mesh.nodes
        pts = np.column_stack([n, np.zeros(len(n))])
        keep = m.mesh.triangles[np.all(np.hypot(*n[m.mesh.triangles].transpose(2, 0, 1)) > 0.3, axis=1)]
        r = bound_outer_ball((pts, keep), 0.5, center=(0.65, 0.0, 0.0))
        assert r.hypothesis("simply_connected").satisfied
        r = bound_outer_ball((pts, keep), 0.9, center=(0.0, 0.0, 0.0))
        assert not r.hypothesis("simply_connected").satisfied

    def test_catenoid_patch(self):
        r = bound_outer_ball(catenoid(0.5).with_mesh(32, 64), 0.3)
        assert r.verdict == "holds"
        assert r.lhs < r.rhs / 4 * 1.01

    def test_constants(self, plane_chart):
        s = GraphSurface.from_functions(PlanarDomain.unit_disc(65), [lambda x, y: 0 * x])
        r = bound_outer_ball(s, 0.5, m1=2.0, m2=1.0)
        assert r.verdict == "not_applicable"
        assert bound_outer_ball(s, 0.5, m1=1.0, m2=2.0).rhs == pytest.approx(2 * math.pi)
