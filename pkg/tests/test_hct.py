import numpy as np
import pytest

from conftest import random_morley
from stream_verify.assembly import gram_matrices
from stream_verify.hct import (HctSpace, Smoother, hct_matrices, interpolation_matrix, operator_norm_J,
                               reference_basis, smooth)
from stream_verify.morley import MorleySpace, a_pw, energy_norm_pw, interpolate
from stream_verify.quadrature import REF_CENTROID, REF_VERTICES


@pytest.fixture
def hct_function(lshape1, rng):
    space = HctSpace(lshape1)
    return space.function(rng.standard_normal(space.dim))


def test_reference_basis_shape():
    ref = reference_basis()
    assert ref.shape == (3, 10, 12)
    assert not ref.flags.writeable


def test_dimension(square1, lshape0):
    assert HctSpace(square1).dim == 3 * 1 + 8
    assert HctSpace(lshape0).dim == 5


class TestConformity:
    def test_c1_across_macro_edges(self, hct_function):
        mesh = hct_function.mesh
        p = hct_function.to_pwpoly()
        g = p.grad()
        inner = np.flatnonzero(~mesh.boundary_edges)
        t = np.linspace(0.0, 1.0, 7)
        np.testing.assert_allclose(p.edge_traces(inner, t, 0), p.edge_traces(inner, t, 1), atol=1e-10)
        np.testing.assert_allclose(g.edge_traces(inner, t, 0), g.edge_traces(inner, t, 1), atol=1e-9)

    def test_c1_inside_the_split(self, hct_function):
        mesh = hct_function.mesh
        p = hct_function.to_pwpoly()
        g = p.grad()
        s = np.linspace(0.0, 1.0, 5)
        triangles = np.arange(mesh.n_triangles)
        for k in range(3):
            seg = REF_CENTROID + s[:, None] * (REF_VERTICES[(k + 2) % 3] - REF_CENTROID)
            ref = np.broadcast_to(seg, (mesh.n_triangles,) + seg.shape)
            left = np.full(ref.shape[:2], k)
            right = np.full(ref.shape[:2], (k + 1) % 3)
            np.testing.assert_allclose(p.evaluate(triangles, ref, left), p.evaluate(triangles, ref, right),
                                       atol=1e-10)
            np.testing.assert_allclose(g.evaluate(triangles, ref, left), g.evaluate(triangles, ref, right),
                                       atol=1e-9)

    def test_zero_trace(self, hct_function):
        mesh = hct_function.mesh
        p = hct_function.to_pwpoly()
        boundary = np.flatnonzero(mesh.boundary_edges)
        t = np.linspace(0.0, 1.0, 5)
        np.testing.assert_allclose(p.edge_traces(boundary, t, 0), 0.0, atol=1e-11)
        np.testing.assert_allclose(p.grad().edge_traces(boundary, t, 0), 0.0, atol=1e-10)


class TestDofs:
    def test_vertex_data(self, hct_function):
        p = hct_function.to_pwpoly()
        np.testing.assert_allclose(p.vertex_values(), hct_function.vertex_values(), atol=1e-11)
        np.testing.assert_allclose(p.grad().vertex_values(), hct_function.vertex_gradients(), atol=1e-10)

    def test_midpoint_normal_derivative(self, hct_function):
        space = hct_function.space
        mesh = hct_function.mesh
        ie = space.inner_edges
        g = hct_function.to_pwpoly().grad().edge_traces(ie, np.array([0.5]), 0)[:, 0]
        np.testing.assert_allclose(np.einsum('ek,ek->e', g, mesh.normals[ie]), hct_function.coef[space.edge_dof[ie]],
                                   atol=1e-10)

    def test_coefficient_length_is_checked(self, square1):
        with pytest.raises(ValueError):
            HctSpace(square1).function(np.zeros(2))


class TestSmoother:
    @pytest.mark.parametrize('fixture', ['square2', 'lshape1'])
    def test_right_inverse_of_interpolation(self, request, fixture):
        mspace = MorleySpace(request.getfixturevalue(fixture))
        smoother = Smoother(mspace)
        IJ = (interpolation_matrix(smoother.hspace, mspace) @ smoother.matrix).toarray()
        np.testing.assert_allclose(IJ, np.eye(mspace.dim), atol=1e-12)

    def test_interpolating_the_smoothed_function(self, lshape1, rng):
        v = random_morley(lshape1, rng)
        np.testing.assert_allclose(interpolate(v.space, smooth(v)).coef, v.coef, atol=1e-11)

    def test_keeps_vertex_values(self, square2, rng):
        v = random_morley(square2, rng)
        Jv = smooth(v)
        iv = v.space.inner_vertices
        np.testing.assert_allclose(Jv.vertex_values()[iv], v.coef[v.space.vertex_dof[iv]])
        assert not np.any(Jv.vertex_gradients()[square2.boundary_vertices])

    def test_galerkin_orthogonality(self, lshape1, rng):
        w, psi = random_morley(lshape1, rng), random_morley(lshape1, rng)
        difference = smooth(w).to_pwpoly() - w.to_pwpoly()
        assert a_pw(difference, psi) == pytest.approx(0.0, abs=1e-10 * w.energy_norm() * psi.energy_norm())

    def test_pythagoras(self, grams2, rng):
        v = random_morley(grams2.mspace, rng)
        x = v.coef
        gap = energy_norm_pw(grams2.smooth(v).to_pwpoly() - v.to_pwpoly())
        assert x @ (grams2.A_J @ x) == pytest.approx(x @ (grams2.A_nc @ x) + gap ** 2, rel=1e-10)

    @pytest.mark.parametrize('fixture', ['square0', 'square1', 'lshape0'])
    def test_operator_norm_at_least_one(self, request, fixture):
        grams = gram_matrices(request.getfixturevalue(fixture))
        bound, result = operator_norm_J(grams.A_J, grams.A_nc)
        assert result.raw >= 1.0 - 1e-10
        assert bound >= 1.0


def test_hessian_gram_matches_piecewise_energy(hct_function):
    K, L = hct_matrices(hct_function.space)
    c = hct_function.coef
    p = hct_function.to_pwpoly()
    assert c @ (K @ c) == pytest.approx(a_pw(p, p), rel=1e-11)
    assert c @ (L @ c) == pytest.approx(p.grad().norm('L2') ** 2, rel=1e-11)
