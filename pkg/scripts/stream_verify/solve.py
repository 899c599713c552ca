"""
Newton's method for the discrete stream function and the adaptive loop.

newton_solve() finds a root of N_h(v; psi_k) = 0 with a damped Newton
iteration in the dual energy norm Res_h. drive() runs
solve -> estimate -> certify -> mark -> refine until the next mesh would
exceed max_ndof.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .assembly import Grams, SourceTerm, estimator_eta, gram_matrices, linearised_matrix, load_vector, \
    nonlinear_residual, values_on_rule
from .certify import Certificate, certify, res_h
from .config import CHUNK, DAMPING_FLOOR, GEOMETRY_TOL, MAX_NDOF, NEWTON_MAXITER, NEWTON_TOL, THETA, TOL_EIG, \
    TOL_EIG_J
from .errors import NewtonError, SingularMatrixError
from .hct import HctFunction
from .mesh import Mesh, build_initial, refine_nvb, refine_red
from .morley import MorleyFunction, MorleySpace
from .quadrature import gauss_legendre_01
from .scatter import chunks
from .spectral import SpdFactor, solve_general

TRANSFER_EDGE_POINTS = 4


class RefinementStrategy(str, Enum):
    UNIFORM_RED = 'uniform'
    ADAPTIVE = 'adaptive'
    ADAPTIVE_HMAX = 'adaptive-hmax'

    @classmethod
    def parse(cls, name) -> 'RefinementStrategy':
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace('_', '-')
        aliases = {'uniform-red': 'uniform', 'red': 'uniform'}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown refinement strategy {name!r}; expected one of "
                             f"{[s.value for s in cls]}") from None


# ----------------------------------------------------------------------
# Newton
# ----------------------------------------------------------------------

@dataclass
class NewtonState:
    v: MorleyFunction
    residual: np.ndarray
    res_norm: float
    iteration: int = 0
    damping: float = 1.0
    history: list = field(default_factory=list)
    increments: list = field(default_factory=list)
    converged: bool = False


def _energy(A, x: np.ndarray) -> float:
    return math.sqrt(max(float(x @ (A @ x)), 0.0))


def newton_solve(initial: MorleyFunction, source: SourceTerm, grams: Grams = None, load: np.ndarray = None,
                 convection: float = 1.0, tol: float = NEWTON_TOL, maxiter: int = NEWTON_MAXITER,
                 verbose: bool = False):
    """Damped Newton iteration from `initial`; returns (root, NewtonState).

    Stops when Res_h and the energy norm of the next increment are both below
    tol * (1 + |||x|||_pw). A step is halved until Res_h decreases, down to
    DAMPING_FLOOR.
    """
    grams = grams if grams is not None else gram_matrices(initial.space)
    A = grams.A_nc
    factor = SpdFactor(A)
    if load is None:
        load = load_vector(grams.hspace, source)

    def evaluate(x):
        v = grams.mspace.function(x)
        b = nonlinear_residual(v, source, grams, convection=convection, load=load)
        return v, b, res_h(b, factor=factor)

    x = initial.coef.copy()
    v, b, r = evaluate(x)
    state = NewtonState(v, b, r, history=[r])

    while True:
        threshold = tol * (1.0 + _energy(A, x))
        if not np.any(b):
            delta = np.zeros_like(x)
        else:
            D = linearised_matrix(v, grams, convection)
            try:
                delta = solve_general(D, b, transpose=True)
            except SingularMatrixError as e:
                raise NewtonError(f"Newton matrix singular at iteration {state.iteration}: {e}",
                                  state.history) from e
        step = _energy(A, delta)
        state.increments.append(step)
        if r <= threshold and step <= threshold:
            state.converged = True
            break
        if state.iteration >= maxiter:
            raise NewtonError(f"Newton did not converge in {maxiter} iterations (Res_h = {r:.3e})", state.history)

        alpha = 1.0
        while True:
            x_new = x - alpha * delta
            v_new, b_new, r_new = evaluate(x_new)
            if r_new < r or r_new <= threshold:
                break
            alpha *= 0.5
            if alpha < DAMPING_FLOOR:
                raise NewtonError(f"damping fell below {DAMPING_FLOOR:g} at iteration {state.iteration} "
                                  f"(Res_h = {r:.3e})", state.history)
        x, v, b, r = x_new, v_new, b_new, r_new
        state.iteration += 1
        state.damping = alpha
        state.history.append(r)
        if verbose:
            print(f"      newton {state.iteration:2d}: Res_h = {r:.3e}  damping = {alpha:g}")

    state.v, state.residual, state.res_norm = v, b, r
    return v, state


# ----------------------------------------------------------------------
# Marking and refinement
# ----------------------------------------------------------------------

def dorfler_select(eta2: np.ndarray, theta: float = THETA) -> np.ndarray:
    """Minimal set of triangles (largest first) carrying theta of the total estimator."""
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    eta2 = np.asarray(eta2, dtype=float)
    order = np.argsort(-eta2, kind='stable')
    cumulative = np.cumsum(eta2[order])
    total = cumulative[-1]
    if total <= 0.0:
        return order[:1]
    count = int(np.searchsorted(cumulative, theta * total, side='left')) + 1
    return order[:min(count, len(order))]


def mark(mesh: Mesh, eta2: np.ndarray, strategy, theta: float = THETA) -> np.ndarray:
    """Edges to bisect: all edges of the Doerfler set, plus h_max refinement edges for adaptive-hmax."""
    strategy = RefinementStrategy.parse(strategy)
    if strategy is RefinementStrategy.UNIFORM_RED:
        raise ValueError("uniform refinement does not mark edges")
    selected = dorfler_select(eta2, theta)
    edges = [mesh.tri_edges[selected].reshape(-1)]
    if strategy is RefinementStrategy.ADAPTIVE_HMAX:
        big = np.flatnonzero(mesh.diameters >= mesh.h_max * (1.0 - GEOMETRY_TOL))
        edges.append(mesh.tri_edges[big, mesh.refine_edge[big]])
    return np.unique(np.concatenate(edges))


def refine(mesh: Mesh, strategy, eta2: np.ndarray = None, theta: float = THETA) -> Mesh:
    strategy = RefinementStrategy.parse(strategy)
    if strategy is RefinementStrategy.UNIFORM_RED:
        return refine_red(mesh)
    return refine_nvb(mesh, mark(mesh, eta2, strategy, theta))


def transfer(Jv: HctFunction, mesh: Mesh, mspace: MorleySpace = None) -> MorleyFunction:
    """Morley interpolant on a refinement `mesh` of the smoothed function Jv on its parent mesh."""
    if mesh.parent is None:
        raise ValueError("transfer needs a mesh produced by refinement (parent map missing)")
    mspace = mspace if mspace is not None else MorleySpace(mesh)
    old = Jv.mesh
    p = Jv.to_pwpoly()
    grad = p.grad()

    def to_old_reference(points: np.ndarray, old_tri: np.ndarray) -> np.ndarray:
        origin = old.vertices[old.triangles[old_tri, 0]]
        return np.einsum('kij,knj->kni', old.inv_jacobians[old_tri], points - origin[:, None, :])

    iv = mspace.inner_vertices
    tri = mesh.parent[mesh.vertex_triangle[iv, 0]]
    ref = to_old_reference(mesh.vertices[iv][:, None, :], tri)
    values = p.evaluate(tri, ref)[:, 0]

    ie = mspace.inner_edges
    t, w = gauss_legendre_01(TRANSFER_EDGE_POINTS)
    lo, hi = mesh.vertices[mesh.edges[ie, 0]], mesh.vertices[mesh.edges[ie, 1]]
    pts = lo[:, None, :] + t[None, :, None] * (hi - lo)[:, None, :]
    tri = mesh.parent[mesh.edge_triangles[ie, 0]]
    g = grad.evaluate(tri, to_old_reference(pts, tri))
    means = np.einsum('eqk,ek,q->e', g, mesh.normals[ie], w)
    return mspace.function(np.concatenate([values, means]))


# ----------------------------------------------------------------------
# Exact errors
# ----------------------------------------------------------------------

def energy_errors(v: MorleyFunction, Jv: HctFunction, solution) -> tuple:
    """(|||u - v|||_pw, |||u - Jv|||) against a closed-form solution."""
    mesh = v.mesh
    rule = solution.rule(mesh)
    hv, hj = v.to_pwpoly().hess(), Jv.to_pwpoly().hess()
    err_nc = err_j = 0.0
    for sl in chunks(mesh.n_triangles, CHUNK):
        ref, wts = rule.points(sl)
        x = rule.physical(ref, sl)
        uxx, uxy, uyy = solution.hessian(x[..., 0], x[..., 1])
        Hu = np.stack([np.stack([uxx, uxy], axis=-1), np.stack([uxy, uyy], axis=-1)], axis=-2)
        w = mesh.dets[sl, None, None] * wts
        err_nc += float(np.einsum('msq,msqij->', w, (Hu - values_on_rule(hv, ref, sl)) ** 2))
        err_j += float(np.einsum('msq,msqij->', w, (Hu - values_on_rule(hj, ref, sl)) ** 2))
    return math.sqrt(err_nc), math.sqrt(err_j)


# ----------------------------------------------------------------------
# Adaptive loop
# ----------------------------------------------------------------------

@dataclass
class LevelRecord:
    level: int
    mesh: Mesh
    v: MorleyFunction
    certificate: Certificate
    eta2: np.ndarray
    error: float
    error_J: float
    newton: NewtonState

    @property
    def ndof(self) -> int:
        return self.certificate.ndof

    @property
    def eta(self) -> float:
        return math.sqrt(float(np.sum(self.eta2)))

    def row(self) -> dict:
        c = self.certificate
        return {
            'level': self.level,
            'ndof': c.ndof,
            'h_max': c.h_max,
            'error': self.error,
            'eta': self.eta,
            'Res_h': c.Res_h,
            'beta_h': c.beta_h,
            'kappa_nc': c.kappa_nc,
            'kappa': c.kappa,
            'normJ': c.norm_J,
            'Cb1': c.C_b1,
            'Cb2': c.C_b2,
            'Cb3': c.C_b3,
            'L_G': c.L_G,
            'mu_res': c.mu_res,
            'mu_hat': c.mu_hat,
            'one_minus_J': c.one_minus_J,
            'beta0_hat': c.beta0_hat,
            'beta0': c.beta0,
            'rho_ex': c.rho_ex,
            'rho_uq': c.rho_uq,
            'verified': int(c.verified),
            'EF': c.rho_ex / self.error if self.error > 0 else math.nan,
            'error_J': self.error_J,
            'EF_eta': self.eta / self.error if self.error > 0 else math.nan,
            'newton_iterations': self.newton.iteration,
        }


def drive(benchmark, strategy, max_ndof: int = MAX_NDOF, theta: float = THETA, tol_eig: float = TOL_EIG,
          tol_eig_J: float = TOL_EIG_J, verbose: bool = False,
          on_level: Optional[Callable[[LevelRecord, Grams], None]] = None) -> list:
    """Refinement history of a benchmark; stops before the first mesh with more than max_ndof dofs."""
    strategy = RefinementStrategy.parse(strategy)
    source, solution = benchmark.source, benchmark.solution
    mesh = build_initial(benchmark.domain)
    history = []
    Jv_prev = None
    while True:
        mspace = MorleySpace(mesh)
        if mspace.dim > max_ndof:
            break
        grams = gram_matrices(mspace)
        initial = transfer(Jv_prev, mesh, grams.mspace) if Jv_prev is not None else grams.mspace.zero()
        load = load_vector(grams.hspace, source)
        v, state = newton_solve(initial, source, grams, load=load, verbose=verbose)
        eta2 = estimator_eta(v, source)
        metadata = {
            'benchmark': benchmark.name,
            'strategy': strategy.value,
            'level': len(history),
            'newton_tol': NEWTON_TOL,
            'newton_iterations': state.iteration,
            'newton_res_h': state.res_norm,
        }
        cert = certify(v, source, grams, tol_eig, tol_eig_J, load=load, metadata=metadata)
        Jv = grams.smooth(v)
        error, error_J = energy_errors(v, Jv, solution)
        record = LevelRecord(len(history), mesh, v, cert, eta2, error, error_J, state)
        history.append(record)
        if on_level is not None:
            on_level(record, grams)
        mesh = refine(mesh, strategy, eta2, theta)
        Jv_prev = Jv
    return history
