import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate as spi

from areabound.domain import DomainError, PlanarDomain
from areabound.graph_surface import (
    GraphSurface,
    area,
    area_element,
    area_element_from_slopes,
    cross_term_identity,
    grid_gradient,
    induced_metric,
    surface_from_json,
    surface_to_json,
    tangential_derivative,
)

finite = st.floats(-5, 5, allow_nan=False)


def gram_area_element(p, q):
    """sqrt(det(J^T J)) for the parametrisation (x, y, zeta(x, y))."""
    J = np.vstack([np.eye(2), np.stack([p, q], axis=1)])
    return math.sqrt(np.linalg.det(J.T @ J))


def holomorphic_area(n):
    """Area of (Re z^n, Im z^n) over the unit disc by adaptive polar quadrature of the Gram determinant."""
    def integrand(r, t):
        x, y = r * math.cos(t), r * math.sin(t)
        dz = n * complex(x, y) ** (n - 1)
        # d Re/dx = Re f', d Re/dy = -Im f', d Im/dx = Im f', d Im/dy = Re f'
        p = np.array([dz.real, dz.imag])
        q = np.array([-dz.imag, dz.real])
        return gram_area_element(p, q) * r
    val, _ = spi.dblquad(integrand, 0, 2 * math.pi, 0, 1, epsabs=1e-11, epsrel=1e-11)
    return val


@pytest.fixture(scope="module")
def oracle_areas():
    # computed by quadrature, compared with the closed form pi (1 + n) once, then frozen
    return {2: holomorphic_area(2), 3: holomorphic_area(3)}


def test_quadrature_oracle_matches_closed_form(oracle_areas):
    for n, val in oracle_areas.items():
        assert val == pytest.approx(math.pi * (1 + n), rel=1e-9)


@pytest.mark.parametrize("n,exprs", [(2, [lambda x, y: x * x - y * y, lambda x, y: 2 * x * y]),
                                     (3, [lambda x, y: x**3 - 3 * x * y * y,
                                          lambda x, y: 3 * x * x * y - y**3])])
def test_holomorphic_graph_area(n, exprs, oracle_areas):
    s = GraphSurface.from_functions(PlanarDomain.unit_disc(257), exprs)
    assert area(s) == pytest.approx(oracle_areas[n], abs=1e-3)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda m: st.tuples(arrays(float, m, elements=finite),
                                                      arrays(float, m, elements=finite))))
def test_area_element_is_gram_determinant(pq):
    p, q = pq
    W = float(area_element_from_slopes(p[None], q[None])[0])
    assert W == pytest.approx(gram_area_element(p, q), rel=1e-10)
    assert W >= 1.0


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda m: st.tuples(arrays(float, m, elements=finite),
                                                      arrays(float, m, elements=finite))))
def test_cross_term_identity(pq):
    lhs, rhs = cross_term_identity(*pq)
    scale = max(1.0, float(pq[0] @ pq[0]) * float(pq[1] @ pq[1]))
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_cross_term_identity_shape_mismatch():
    with pytest.raises(ValueError):
        cross_term_identity([1.0, 2.0], [1.0])


def test_quadratic_gradient_exact_up_to_boundary(square65):
    d = square65
    f = d.X**2 + 3 * d.X * d.Y
    fx, fy = grid_gradient(d, f)
    np.testing.assert_allclose(fx, 2 * d.X + 3 * d.Y, atol=1e-12)
    np.testing.assert_allclose(fy, 3 * d.X, atol=1e-12)


def test_plane_metric_and_area(disc65):
    s = GraphSurface.from_functions(disc65, [lambda x, y: 2 * x + y])
    h11, h12, h22 = induced_metric(s)
    m = disc65.valued_mask
    np.testing.assert_allclose(h11.values[m], 5.0)
    np.testing.assert_allclose(h12.values[m], 2.0)
    np.testing.assert_allclose(h22.values[m], 2.0)
    assert area(s) == pytest.approx(math.pi * math.sqrt(6.0), rel=1e-12)
    assert np.all(area_element(s).values[m] >= 1.0)


def test_tangential_derivative_is_arclength_derivative():
    d = PlanarDomain.unit_disc(129)
    s = GraphSurface.from_functions(d, [lambda x, y: x, lambda x, y: x * x - y * y])
    theta = d.boundary.angles
    np.testing.assert_allclose(tangential_derivative(s, 1), -np.sin(theta), atol=1e-12)
    # Re z^2 = cos 2 theta on the circle, derivative -2 sin 2 theta
    np.testing.assert_allclose(tangential_derivative(s, 2), -2 * np.sin(2 * theta), atol=2e-3)


@pytest.mark.parametrize("sigma", [0, 3, 1.0])
def test_tangential_derivative_index(disc65, sigma):
    s = GraphSurface.from_functions(disc65, [lambda x, y: x, lambda x, y: y])
    with pytest.raises(ValueError):
        tangential_derivative(s, sigma)


def test_json_round_trip(disc65):
    s = GraphSurface.from_functions(disc65, [lambda x, y: x * y, lambda x, y: x - y])
    back = surface_from_json(surface_to_json(s, {"note": "t"}))
    np.testing.assert_array_equal(np.isnan(back.zeta), np.isnan(s.zeta))
    np.testing.assert_array_equal(np.nan_to_num(back.zeta), np.nan_to_num(s.zeta))


def test_shape_and_finiteness_checked(disc65):
    with pytest.raises(DomainError):
        GraphSurface(disc65, np.zeros((3, 3)))
    z = np.zeros(disc65.shape)
    z[disc65.interior_mask.nonzero()[0][0], disc65.interior_mask.nonzero()[1][0]] = np.inf
    with pytest.raises(DomainError):
        GraphSurface(disc65, z)


def test_surface_is_immutable(disc65):
    s = GraphSurface.from_functions(disc65, [lambda x, y: x])
    with pytest.raises(ValueError):
        s.zeta[0, 0, 0] = 1.0
