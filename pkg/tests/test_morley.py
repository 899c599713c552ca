import numpy as np
import pytest

from conftest import linear_pwpoly, random_morley
from stream_verify.assembly import morley_stiffness
from stream_verify.morley import MorleySpace, SmoothFunction, a_pw, energy_norm_pw, interpolate


@pytest.mark.parametrize('fixture, dim', [('square0', 1), ('square1', 9), ('lshape0', 5)])
def test_dimension(request, fixture, dim):
    mesh = request.getfixturevalue(fixture)
    space = MorleySpace(mesh)
    assert space.dim == dim
    assert space.l2g.shape == (mesh.n_triangles, 6)
    assert space.l2g.max() == dim - 1


def test_stiffness_on_initial_square(square0):
    # the single edge bubble has |D^2 psi|^2 = 8 on each half of area 1/2
    A = morley_stiffness(MorleySpace(square0)).toarray()
    np.testing.assert_allclose(A, [[8.0]], rtol=1e-13)


def test_local_basis_is_dual_to_the_dofs(lshape1):
    space = MorleySpace(lshape1)
    t = 5
    polys, l2g, signs = space.basis_on(t)
    values = np.array([p.at_vertices() for p in polys])
    np.testing.assert_allclose(values[:3], np.eye(3), atol=1e-13)
    np.testing.assert_allclose(values[3:], 0.0, atol=1e-13)
    assert set(np.abs(signs)) == {1.0}


class TestInterpolation:
    def test_reproduces_morley_functions(self, lshape1, rng):
        v = random_morley(lshape1, rng)
        np.testing.assert_allclose(interpolate(v.space, v).coef, v.coef, atol=1e-12)

    def test_closed_form_matches_piecewise_path(self, square2):
        x, y = linear_pwpoly(square2, 0, 1, 0), linear_pwpoly(square2, 0, 0, 1)
        q = x.multiply(x) - 2.0 * x.multiply(y) + y
        smooth = SmoothFunction(lambda x, y: x ** 2 - 2 * x * y + y, lambda x, y: (2 * x - 2 * y, 1 - 2 * x))
        space = MorleySpace(square2)
        np.testing.assert_allclose(interpolate(space, smooth).coef, interpolate(space, q).coef, atol=1e-13)


class TestEnergy:
    def test_three_ways(self, square2, rng):
        space = MorleySpace(square2)
        v = random_morley(space, rng)
        A = morley_stiffness(space)
        expected = np.sqrt(v.coef @ (A @ v.coef))
        assert v.energy_norm() == pytest.approx(expected, rel=1e-12)
        assert energy_norm_pw(v) == pytest.approx(expected, rel=1e-12)
        assert a_pw(v, v) == pytest.approx(expected ** 2, rel=1e-12)

    def test_product_is_bilinear(self, lshape1, rng):
        space = MorleySpace(lshape1)
        u, v, w = (random_morley(space, rng) for _ in range(3))
        assert a_pw(u, v) == pytest.approx(a_pw(v, u), rel=1e-12)
        assert a_pw(2.0 * u + w, v) == pytest.approx(2.0 * a_pw(u, v) + a_pw(w, v), rel=1e-10, abs=1e-12)

    def test_laplacian_is_hessian_trace(self, square1, rng):
        v = random_morley(square1, rng)
        H = v.hessians()
        np.testing.assert_allclose(v.laplacians(), H[:, 0, 0] + H[:, 1, 1])
        np.testing.assert_allclose(v.to_pwpoly().laplace().coef[:, 0, 0], v.laplacians(), atol=1e-12)


def test_coefficient_length_is_checked(square1):
    with pytest.raises(ValueError):
        MorleySpace(square1).function(np.zeros(3))
