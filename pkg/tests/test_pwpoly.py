import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import linear_pwpoly
from stream_verify.errors import DegreeOverflowError
from stream_verify.mesh import build_initial
from stream_verify.pwpoly import PwPoly, exponents, n_coef

coefficient = st.floats(min_value=-10, max_value=10, allow_nan=False)


def coordinates(mesh):
    return linear_pwpoly(mesh, 0.0, 1.0, 0.0), linear_pwpoly(mesh, 0.0, 0.0, 1.0)


def test_exponents_are_nested():
    assert n_coef(3) == 10
    np.testing.assert_array_equal(exponents(3)[:n_coef(2)], exponents(2))
    assert exponents(2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]


class TestIntegrals:
    def test_monomials_on_unit_square(self, square1):
        x, y = coordinates(square1)
        assert x.multiply(x).integrate() == pytest.approx(1 / 3)
        assert x.multiply(y).integrate() == pytest.approx(1 / 4)
        assert x.multiply(x).multiply(y).integrate() == pytest.approx(1 / 6)

    @given(coefficient, coefficient, coefficient)
    def test_linear(self, a, b, c):
        p = linear_pwpoly(build_initial('unit_square'), a, b, c)
        assert p.integrate() == pytest.approx(a + b / 2 + c / 2, abs=1e-12)

    def test_split_pieces_integrate_the_same(self, lshape1):
        x, y = coordinates(lshape1)
        p = x.multiply(y)
        split = PwPoly(lshape1, p.raised(2, split=True), 2)
        assert split.split
        assert split.integrate() == pytest.approx(p.integrate(), abs=1e-14)

    def test_area_of_l_shape(self, lshape1):
        assert PwPoly.constant(lshape1, 1.0).integrate() == pytest.approx(3.0)

    def test_vector_valued(self, square1):
        x, _ = coordinates(square1)
        np.testing.assert_allclose(x.grad().integrate(), [1.0, 0.0], atol=1e-14)


class TestDerivatives:
    def test_gradient_of_coordinate(self, square1):
        x, y = coordinates(square1)
        np.testing.assert_allclose(x.grad().coef[:, 0, 0], np.tile([1.0, 0.0], (square1.n_triangles, 1)), atol=1e-14)
        np.testing.assert_allclose(y.grad().coef[:, 0, 0], np.tile([0.0, 1.0], (square1.n_triangles, 1)), atol=1e-14)

    def test_hessian_and_laplacian(self, lshape1):
        x, y = coordinates(lshape1)
        H = x.multiply(y).hess()
        assert H.degree == 0
        np.testing.assert_allclose(H.coef[:, 0, 0], np.tile([[0.0, 1.0], [1.0, 0.0]], (lshape1.n_triangles, 1, 1)),
                                   atol=1e-13)
        lap = (x.multiply(x) + y.multiply(y)).laplace()
        np.testing.assert_allclose(lap.coef[:, 0, 0], 4.0, atol=1e-13)

    def test_curl(self, square1):
        x, y = coordinates(square1)
        curl = x.multiply(y).curl().vertex_values()
        vx, vy = square1.vertices.T
        np.testing.assert_allclose(curl, np.stack([vx, -vy], axis=1), atol=1e-14)

    def test_unknown_operator(self, square0):
        with pytest.raises(ValueError):
            PwPoly.constant(square0, 1.0).diffop('div')


class TestEvaluation:
    def test_vertex_values(self, lshape1):
        x, _ = coordinates(lshape1)
        np.testing.assert_allclose(x.vertex_values(), lshape1.vertices[:, 0], atol=1e-15)

    def test_piece_evaluates_physical_points(self, square1):
        x, y = coordinates(square1)
        p = x.multiply(y)
        c = square1.centroids[2]
        assert p.piece(2).evaluate_physical(c[None])[0] == pytest.approx(c[0] * c[1])

    def test_edge_traces_agree_across_interior_edges(self, square2):
        x, y = coordinates(square2)
        p = x.multiply(x) - 3.0 * y
        inner = np.flatnonzero(~square2.boundary_edges)
        t = np.array([0.0, 0.3, 1.0])
        plus, minus = p.edge_traces(inner, t, 0), p.edge_traces(inner, t, 1)
        np.testing.assert_allclose(plus, minus, atol=1e-14)
        lo = square2.vertices[square2.edges[inner, 0]]
        np.testing.assert_allclose(plus[:, 0], lo[:, 0] ** 2 - 3.0 * lo[:, 1], atol=1e-14)

    def test_edge_traces_vanish_outside(self, square1):
        boundary = np.flatnonzero(square1.boundary_edges)
        p = PwPoly.constant(square1, 2.0)
        np.testing.assert_array_equal(p.edge_traces(boundary, np.array([0.5]), 1), 0.0)

    def test_edge_normal_means(self, square1):
        x, y = coordinates(square1)
        means = (2.0 * x - y).edge_normal_means()
        expected = square1.normals @ np.array([2.0, -1.0])
        np.testing.assert_allclose(means, expected, atol=1e-14)


class TestNorms:
    def test_l2_l4_linf(self, square1):
        x, _ = coordinates(square1)
        one = PwPoly.constant(square1, 1.0)
        assert x.norm('L2') == pytest.approx(np.sqrt(1 / 3))
        assert x.norm('L4') == pytest.approx((1 / 5) ** 0.25)
        assert x.norm('Linf') == pytest.approx(1.0)
        assert one.norm('L4') == pytest.approx(1.0)

    def test_mesh_size_weight(self, square1):
        one = PwPoly.constant(square1, 1.0)
        assert one.norm('L2', h_power=1.0) == pytest.approx(np.sqrt(2.0) / 2)
        assert one.norm('Linf', h_power=2.0) == pytest.approx(0.5)

    def test_vector_norm_is_euclidean(self, square1):
        v = PwPoly.constant(square1, [3.0, 4.0])
        assert v.norm('L2') == pytest.approx(5.0)
        assert v.norm('Linf') == pytest.approx(5.0)

    def test_unknown_norm(self, square0):
        with pytest.raises(ValueError):
            PwPoly.constant(square0, 1.0).norm('H1')

    def test_pi0(self, lshape1):
        x, _ = coordinates(lshape1)
        np.testing.assert_allclose(x.pi0().coef[:, 0, 0], lshape1.centroids[:, 0], atol=1e-14)


def test_degree_overflow(square0):
    p = PwPoly.from_pieces(square0, np.zeros((square0.n_triangles, n_coef(7))), 7)
    with pytest.raises(DegreeOverflowError):
        p.multiply(p)


def test_coefficient_count_is_checked(square0):
    with pytest.raises(ValueError):
        PwPoly.from_pieces(square0, np.zeros((square0.n_triangles, 4)), 2)
