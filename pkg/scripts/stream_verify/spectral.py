"""
Sparse direct solves and extreme eigenvalues of symmetric pencils.

Pencils A x = lambda B x are given in operator-apply form for A (A is never
formed when it involves inverses) and as a sparse SPD matrix B with its
factorisation. Iterative eigenvalues use ARPACK's implicitly restarted
Lanczos (scipy.sparse.linalg.eigsh) in the B-inner product; small pencils
go through the dense generalized symmetric solver instead.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

from .config import DENSE_LIMIT, EIG_MAXITER, NEGATIVE_RITZ_CLAMP, TOL_EIG
from .errors import EigenSolverError, FactorizationError, SingularMatrixError

SINGULAR_PIVOT_TOL = 1e-14


class SpdFactor:
    """Symmetric-mode sparse LU of an SPD matrix.

    With diagonal pivoting the factor is an L D L^T in disguise, so every
    pivot U_ii must be positive; a non-positive pivot means A is not SPD.
    """

    def __init__(self, A):
        self.A = sparse.csc_matrix(A)
        try:
            self.lu = splu(self.A, permc_spec='MMD_AT_PLUS_A', diag_pivot_thresh=0.0,
                           options={'SymmetricMode': True})
        except RuntimeError as e:
            raise FactorizationError(f"sparse factorisation broke down: {e}", pivot=-1) from e
        pivots = self.lu.U.diagonal()
        bad = np.flatnonzero(pivots <= 0.0)
        if bad.size:
            raise FactorizationError(
                f"matrix is not positive definite (pivot {int(bad[0])} = {pivots[bad[0]]:.3e})",
                pivot=int(bad[0]))

    @property
    def shape(self):
        return self.A.shape

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        x = self.lu.solve(b)
        # one step of iterative refinement
        return x + self.lu.solve(b - self.A @ x)


class GeneralFactor:
    """Sparse LU of a general (nonsymmetric) matrix with a singular-pivot check."""

    def __init__(self, D):
        self.D = sparse.csc_matrix(D)
        try:
            self.lu = splu(self.D)
        except RuntimeError as e:
            raise SingularMatrixError(f"matrix is exactly singular: {e}", pivot=-1) from e
        pivots = np.abs(self.lu.U.diagonal())
        small = np.flatnonzero(pivots <= SINGULAR_PIVOT_TOL * pivots.max())
        if small.size:
            raise SingularMatrixError(
                f"matrix is singular to working tolerance at pivot {int(small[0])}", pivot=int(small[0]))

    def solve(self, b: np.ndarray, transpose: bool = False) -> np.ndarray:
        trans = 'T' if transpose else 'N'
        b = np.asarray(b, dtype=float)
        x = self.lu.solve(b, trans=trans)
        M = self.D.T if transpose else self.D
        return x + self.lu.solve(b - M @ x, trans=trans)


def solve_spd(A, b: np.ndarray) -> np.ndarray:
    return SpdFactor(A).solve(b)


def solve_general(D, b: np.ndarray, transpose: bool = False) -> np.ndarray:
    return GeneralFactor(D).solve(b, transpose=transpose)


@dataclass
class Pencil:
    """Symmetric pencil apply(x) = lambda * rhs @ x.

    `apply_inverse` (x -> A^-1 x) is only needed for the smallest end of
    pencils too large for the dense path.
    """

    apply: Callable[[np.ndarray], np.ndarray]
    rhs: sparse.spmatrix
    which: str = 'largest'
    tol: float = TOL_EIG
    factor: Optional[SpdFactor] = None
    apply_inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ''

    def __post_init__(self):
        if self.which not in ('largest', 'smallest'):
            raise ValueError(f"which must be 'largest' or 'smallest', got {self.which!r}")
        if self.factor is None:
            self.factor = SpdFactor(self.rhs)

    @property
    def size(self) -> int:
        return self.rhs.shape[0]

    def dense(self) -> np.ndarray:
        n = self.size
        A = np.column_stack([self.apply(e) for e in np.eye(n)]) if n else np.zeros((0, 0))
        return 0.5 * (A + A.T)


@dataclass
class EigResult:
    value: float
    vector: np.ndarray
    iterations: int
    method: str
    raw: float = field(default=np.nan)


def dense_oracle(A: np.ndarray, B: np.ndarray):
    """Full spectrum of A x = lambda B x (ascending) through the Cholesky factor of B."""
    try:
        return scipy.linalg.eigh(np.asarray(A, dtype=float), np.asarray(B, dtype=float))
    except np.linalg.LinAlgError as e:
        raise FactorizationError(f"right-hand matrix of the pencil is not SPD: {e}", pivot=-1) from e


def _clamp(value: float, scale: float, name: str) -> float:
    if value >= 0.0:
        return value
    if value >= -NEGATIVE_RITZ_CLAMP * scale:
        return 0.0
    raise EigenSolverError(f"{name or 'pencil'}: negative eigenvalue {value:.3e} beyond round-off",
                           ritz_history=[value], iterations=0)


def extreme_eig(p: Pencil, maxiter: int = EIG_MAXITER, dense_limit: int = DENSE_LIMIT) -> EigResult:
    """Largest or smallest eigenpair of the pencil."""
    n = p.size
    if n <= dense_limit:
        values, vectors = dense_oracle(p.dense(), p.rhs.toarray())
        idx = -1 if p.which == 'largest' else 0
        raw = float(values[idx])
        scale = max(1.0, float(np.max(np.abs(values))))
        return EigResult(_clamp(raw, scale, p.name), vectors[:, idx], n, 'dense', raw)

    count = {'apply': 0}

    def matvec(x):
        count['apply'] += 1
        return p.apply(np.ravel(x))

    A = LinearOperator((n, n), matvec=matvec, dtype=float)
    try:
        if p.which == 'largest':
            Minv = LinearOperator((n, n), matvec=p.factor.solve, dtype=float)
            values, vectors = eigsh(A, k=1, M=p.rhs, Minv=Minv, which='LA', tol=p.tol, maxiter=maxiter)
        else:
            if p.apply_inverse is None:
                raise ValueError("smallest-end pencils above the dense limit need apply_inverse")
            OPinv = LinearOperator((n, n), matvec=lambda x: p.apply_inverse(np.ravel(x)), dtype=float)
            values, vectors = eigsh(A, k=1, M=p.rhs, sigma=0.0, OPinv=OPinv, which='LM',
                                    tol=p.tol, maxiter=maxiter)
    except ArpackNoConvergence as e:
        raise EigenSolverError(f"{p.name or 'pencil'}: Lanczos did not converge in {maxiter} restarts",
                               ritz_history=list(np.atleast_1d(e.eigenvalues)),
                               iterations=count['apply']) from e
    raw = float(values[0])
    return EigResult(_clamp(raw, max(1.0, abs(raw)), p.name), vectors[:, 0], count['apply'], 'arpack', raw)


def inflate(value: float, tol: float) -> float:
    return value * (1.0 + tol)


def deflate(value: float, tol: float) -> float:
    return value * (1.0 - tol)
