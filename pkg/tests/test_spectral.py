import numpy as np
import pytest
from scipy import sparse

from conftest import random_morley
from stream_verify.assembly import linearised_matrix
from stream_verify.errors import EigenSolverError, FactorizationError, SingularMatrixError
from stream_verify.spectral import (GeneralFactor, Pencil, SpdFactor, deflate, dense_oracle, extreme_eig, inflate,
                                    solve_general, solve_spd)


class TestSolves:
    def test_spd(self, grams2, rng):
        x = rng.standard_normal(grams2.ndof)
        np.testing.assert_allclose(solve_spd(grams2.A_nc, grams2.A_nc @ x), x, rtol=1e-9, atol=1e-10)

    def test_zero_right_hand_side(self, grams1):
        assert not np.any(SpdFactor(grams1.A_J).solve(np.zeros(grams1.ndof)))

    def test_general_and_transposed(self, lgrams1, rng):
        D = linearised_matrix(lgrams1.smooth(random_morley(lgrams1.mspace, rng)), lgrams1)
        x = rng.standard_normal(lgrams1.ndof)
        np.testing.assert_allclose(solve_general(D, D @ x), x, rtol=1e-9, atol=1e-10)
        np.testing.assert_allclose(GeneralFactor(D).solve(D.T @ x, transpose=True), x, rtol=1e-9, atol=1e-10)

    def test_indefinite(self):
        with pytest.raises(FactorizationError):
            SpdFactor(sparse.diags([1.0, -1.0]))

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            GeneralFactor(sparse.csr_matrix(np.ones((2, 2))))


class TestDenseOracle:
    def test_closed_form(self):
        values, _ = dense_oracle(np.array([[2.0, 1.0], [1.0, 2.0]]), np.eye(2))
        np.testing.assert_allclose(values, [1.0, 3.0])

    def test_generalized(self):
        values, _ = dense_oracle(np.diag([2.0, 6.0]), np.diag([1.0, 2.0]))
        np.testing.assert_allclose(values, [2.0, 3.0])

    def test_rhs_not_spd(self):
        with pytest.raises(FactorizationError):
            dense_oracle(np.eye(2), np.diag([1.0, -1.0]))


class TestExtremeEig:
    def oracle(self, grams):
        return dense_oracle(grams.A_J.toarray(), grams.A_nc.toarray())[0]

    def test_dense_path(self, grams1):
        result = extreme_eig(Pencil(lambda x: grams1.A_J @ x, grams1.A_nc, 'largest'))
        assert result.method == 'dense'
        assert result.value == pytest.approx(self.oracle(grams1)[-1], rel=1e-12)

    def test_lanczos_largest(self, grams2):
        assert grams2.ndof > 40
        result = extreme_eig(Pencil(lambda x: grams2.A_J @ x, grams2.A_nc, 'largest', 1e-12), dense_limit=0)
        assert result.method == 'arpack'
        assert result.value == pytest.approx(self.oracle(grams2)[-1], rel=1e-8)
        assert result.iterations > 0

    def test_lanczos_smallest(self, grams2):
        F = SpdFactor(grams2.A_J)
        pencil = Pencil(lambda x: grams2.A_J @ x, grams2.A_nc, 'smallest', 1e-12, apply_inverse=F.solve)
        result = extreme_eig(pencil, dense_limit=0)
        assert result.value == pytest.approx(self.oracle(grams2)[0], rel=1e-8)

    def test_smallest_needs_inverse(self, grams2):
        with pytest.raises(ValueError):
            extreme_eig(Pencil(lambda x: grams2.A_J @ x, grams2.A_nc, 'smallest'), dense_limit=0)

    def test_unknown_end(self, grams1):
        with pytest.raises(ValueError):
            Pencil(lambda x: x, grams1.A_nc, 'middle')

    def test_negative_eigenvalue(self):
        with pytest.raises(EigenSolverError):
            extreme_eig(Pencil(lambda x: -x, sparse.identity(3, format='csr'), 'largest'))

    def test_round_off_is_clamped(self):
        result = extreme_eig(Pencil(lambda x: -1e-15 * x, sparse.identity(3, format='csr'), 'largest'))
        assert result.value == 0.0
        assert result.raw < 0.0


def test_inflate_and_deflate():
    assert inflate(2.0, 0.01) == pytest.approx(2.02)
    assert deflate(2.0, 0.01) == pytest.approx(1.98)
