"""
Discrete operators and functionals.

Every integral is taken on the centroid split of each triangle with an exact
conical rule, so Morley quadratics, HCT cubics and their products integrate
without quadrature error. The load functional of a non-polynomial source
uses a fixed-order rule that collapses onto the singular corner when one is
given.

Row/column conventions:
  A_nc[j, k] = a_pw(psi_j, psi_k)
  A_J[j, k]  = a(J psi_j, J psi_k)
  B_J[j, k]  = (grad J psi_j, grad J psi_k)_L2
  D[j, k]    = a_pw(psi_j, psi_k) + G(u, psi_j, J psi_k) + G(psi_j, u, J psi_k)
with G(v, w, phi) = int lap_pw v curl_pw w . grad phi.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy import sparse

from .config import CHUNK, SINGULAR_RADIUS
from .hct import HctFunction, HctSpace, Smoother, hct_matrices
from .mesh import Mesh, MeshConstants, mesh_constants
from .morley import MorleyFunction, MorleySpace
from .pwpoly import PwPoly
from .quadrature import gauss_legendre_01, singular_split_rule, split_rule
from .scatter import assemble_matrix, assemble_vector, chunks

# exact for every product below (degree <= 4 per piece)
OPERATOR_RULE_DEGREE = 4
# fixed order for sources without a polynomial degree
DEFAULT_SOURCE_ORDER = 20


# ----------------------------------------------------------------------
# Sources and per-triangle quadrature
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class SourceTerm:
    """Right-hand side f(x, y) of the stream-function equation.

    `degree` is the polynomial degree when f is a polynomial (its integrals
    are then exact); otherwise `order` fixes the rule. `singular_point` is a
    corner near which f is unbounded.
    """

    f: Callable
    degree: Optional[int] = None
    order: int = DEFAULT_SOURCE_ORDER
    singular_point: Optional[tuple] = None
    description: str = ''

    def rule_degree(self, times: int = 3) -> int:
        """Rule degree for integrating f against a polynomial of degree `times` (or f^2 if times < 0)."""
        if self.degree is None:
            return self.order
        return 2 * self.degree if times < 0 else self.degree + times

    def rule(self, mesh: Mesh, times: int = 3) -> 'MeshRule':
        return MeshRule(mesh, self.rule_degree(times), self.singular_point)


ZERO_SOURCE = SourceTerm(lambda x, y: np.zeros(np.broadcast(x, y).shape), degree=0, description='f = 0')


def constant_source(value: float) -> SourceTerm:
    return SourceTerm(lambda x, y: np.full(np.broadcast(x, y).shape, float(value)), degree=0,
                      description=f'f = {value!r}')


class MeshRule:
    """Split rule of a given degree on every triangle, collapsed onto `singular_point` where it is a vertex."""

    def __init__(self, mesh: Mesh, degree: int, singular_point=None):
        self.mesh = mesh
        self.degree = degree
        self.singular_point = singular_point
        self.singular_vertex = -np.ones(mesh.n_triangles, dtype=np.int64)
        if singular_point is not None:
            d = np.linalg.norm(mesh.vertices[mesh.triangles] - np.asarray(singular_point, dtype=float), axis=2)
            t, k = np.nonzero(d <= SINGULAR_RADIUS)
            self.singular_vertex[t] = k

    @cached_property
    def _variants(self):
        regular = split_rule(self.degree)
        return [singular_split_rule(self.degree, k) for k in range(3)] + [regular]

    def points(self, sl: slice = slice(None)):
        """Reference points (c, 3, nq, 2) and weights (c, 3, nq) without the determinant."""
        which = self.singular_vertex[sl]
        pts = np.stack([v[0] for v in self._variants])      # (4, 3, nq, 2); index -1 is the regular rule
        wts = np.stack([v[1] for v in self._variants])
        return pts[which], wts[which]

    def physical(self, ref: np.ndarray, sl: slice = slice(None)) -> np.ndarray:
        mesh = self.mesh
        origin = mesh.vertices[mesh.triangles[sl, 0]]
        return np.einsum('mij,msqj->msqi', mesh.jacobians[sl], ref) + origin[:, None, None, :]

    def describe(self) -> str:
        if self.singular_point is None:
            return f"split conical rule, degree {self.degree}"
        return f"split conical rule, degree {self.degree}, collapsed at {tuple(self.singular_point)}"


def values_on_rule(p: PwPoly, ref: np.ndarray, sl: slice) -> np.ndarray:
    """Values of a PwPoly at per-triangle rule points (c, 3, nq, 2) -> (c, 3, nq, *shape)."""
    c, S, nq, _ = ref.shape
    triangles = np.arange(p.mesh.n_triangles)[sl]
    piece = np.broadcast_to(np.arange(S)[None, :, None], (c, S, nq)).reshape(c, -1)
    vals = p.evaluate(triangles, ref.reshape(c, -1, 2), piece=piece)
    return vals.reshape((c, S, nq) + vals.shape[2:])


def source_norms(mesh: Mesh, source: SourceTerm) -> np.ndarray:
    """||f||^2_{L2(T)} per triangle."""
    rule = source.rule(mesh, times=-1)
    out = np.empty(mesh.n_triangles)
    for sl in chunks(mesh.n_triangles, CHUNK):
        ref, wts = rule.points(sl)
        x = rule.physical(ref, sl)
        f = np.asarray(source.f(x[..., 0], x[..., 1]), dtype=float)
        out[sl] = mesh.dets[sl] * np.einsum('msq,msq->m', wts, f ** 2)
    return out


# ----------------------------------------------------------------------
# Gram matrices
# ----------------------------------------------------------------------

def morley_stiffness(mspace: MorleySpace) -> sparse.csr_matrix:
    H = mspace.hessians
    local = mspace.mesh.areas[:, None, None] * np.einsum('mkij,mlij->mkl', H, H)
    return assemble_matrix(local, mspace.l2g, mspace.l2g, (mspace.dim, mspace.dim))


@dataclass
class Grams:
    """Everything assembled once per mesh: spaces, J and the three Gram matrices."""

    mspace: MorleySpace
    hspace: HctSpace
    J: sparse.csr_matrix
    A_nc: sparse.csr_matrix
    A_J: sparse.csr_matrix
    B_J: sparse.csr_matrix
    K_hct: sparse.csr_matrix = field(repr=False)
    L_hct: sparse.csr_matrix = field(repr=False)

    @property
    def mesh(self) -> Mesh:
        return self.mspace.mesh

    @property
    def ndof(self) -> int:
        return self.mspace.dim

    def smooth(self, v: MorleyFunction) -> HctFunction:
        return HctFunction(self.hspace, self.J @ v.coef)


def gram_matrices(mesh_or_space) -> Grams:
    """A_nc, A_J = J^T K J and B_J = J^T L J (H^1 seminorm product)."""
    mspace = mesh_or_space if isinstance(mesh_or_space, MorleySpace) else MorleySpace(mesh_or_space)
    smoother = Smoother(mspace)
    J = smoother.matrix
    K, L = hct_matrices(smoother.hspace)
    A_J = (J.T @ K @ J).tocsr()
    B_J = (J.T @ L @ J).tocsr()
    # exact symmetry
    A_J = (0.5 * (A_J + A_J.T)).tocsr()
    B_J = (0.5 * (B_J + B_J.T)).tocsr()
    return Grams(mspace, smoother.hspace, J, morley_stiffness(mspace), A_J, B_J, K, L)


# ----------------------------------------------------------------------
# Trilinear form and residual
# ----------------------------------------------------------------------

def _as_pwpoly(v) -> PwPoly:
    return v.to_pwpoly() if hasattr(v, 'to_pwpoly') else v


def trilinear(v, w, phi) -> float:
    """G_pw(v, w, phi) = int lap_pw v curl_pw w . grad phi, exact."""
    pv, pw, pphi = _as_pwpoly(v), _as_pwpoly(w), _as_pwpoly(phi)
    integrand = pv.laplace().multiply(pw.curl().dot(pphi.grad()), ',->')
    return float(integrand.integrate())


def _rule(sl: slice, mesh: Mesh):
    pts, wts = split_rule(OPERATOR_RULE_DEGREE)
    return pts, mesh.dets[sl, None, None] * wts


def convection_vector(v, hspace: HctSpace) -> np.ndarray:
    """(G_pw(v, v, phi_l))_l over the HCT basis."""
    mesh = hspace.mesh
    p = _as_pwpoly(v)
    lap, curl = p.laplace(), p.curl()
    parts = []
    for sl in chunks(mesh.n_triangles, CHUNK):
        pts, w = _rule(sl, mesh)
        _, gphi = hspace.basis_at(pts, sl)
        L = lap.at_rule(pts, triangles=sl)
        C = curl.at_rule(pts, triangles=sl)
        parts.append(np.einsum('msq,msq,msqi,msqil->ml', w, L, C, gphi))
    return assemble_vector(np.concatenate(parts), hspace.l2g, hspace.dim)


def load_vector(hspace: HctSpace, source: SourceTerm) -> np.ndarray:
    """(int f phi_l)_l over the HCT basis."""
    mesh = hspace.mesh
    rule = source.rule(mesh, times=3)
    parts = []
    for sl in chunks(mesh.n_triangles, CHUNK):
        ref, wts = rule.points(sl)
        x = rule.physical(ref, sl)
        f = np.asarray(source.f(x[..., 0], x[..., 1]), dtype=float)
        values, _ = hspace.basis_at(ref, sl)
        parts.append(np.einsum('msq,msq,msql->ml', mesh.dets[sl, None, None] * wts, f, values))
    return assemble_vector(np.concatenate(parts), hspace.l2g, hspace.dim)


def nonlinear_residual(v: MorleyFunction, source: SourceTerm, grams: Grams = None,
                       convection: float = 1.0, load: np.ndarray = None) -> np.ndarray:
    """b_j = a_pw(v, psi_j) + G_pw(v, v, J psi_j) - F(J psi_j).

    `load` may pass a precomputed HCT load vector; `convection` = 0 switches the
    semilinear term off.
    """
    grams = grams if grams is not None else gram_matrices(v.space)
    if load is None:
        load = load_vector(grams.hspace, source)
    hct_part = -load
    if convection:
        hct_part = hct_part + convection * convection_vector(v, grams.hspace)
    return grams.A_nc @ v.coef + grams.J.T @ hct_part


def convection_matrix(u_hat, mspace: MorleySpace, hspace: HctSpace) -> sparse.csr_matrix:
    """C[l, j] = G(u, psi_j, phi_l) + G(psi_j, u, phi_l), shape (N_hct, N_nc)."""
    mesh = mspace.mesh
    p = _as_pwpoly(u_hat)
    lap, curl = p.laplace(), p.curl()
    lap_psi = mspace.hessians[:, :, 0, 0] + mspace.hessians[:, :, 1, 1]      # (m, 6)
    parts = []
    for sl in chunks(mesh.n_triangles, CHUNK):
        pts, w = _rule(sl, mesh)
        _, gphi = hspace.basis_at(pts, sl)
        _, gpsi = mspace.basis_at(pts, sl)
        curl_psi = np.stack([gpsi[..., 1, :], -gpsi[..., 0, :]], axis=-2)
        L = lap.at_rule(pts, triangles=sl)
        C = curl.at_rule(pts, triangles=sl)
        local = np.einsum('msq,msq,msqil,msqij->mlj', w, L, gphi, curl_psi)
        local += np.einsum('msq,mj,msqi,msqil->mlj', w, lap_psi[sl], C, gphi)
        parts.append(local)
    return assemble_matrix(np.concatenate(parts), hspace.l2g, mspace.l2g, (hspace.dim, mspace.dim))


def linearised_matrix(u_hat, grams: Grams, convection: float = 1.0) -> sparse.csr_matrix:
    """D = A_nc + C^T J for the linearisation point u_hat (Morley or HCT)."""
    if not convection:
        return grams.A_nc.copy()
    C = convection_matrix(u_hat, grams.mspace, grams.hspace)
    return (grams.A_nc + convection * (C.T @ grams.J)).tocsr()


def gamma_gram(v: MorleyFunction, grams: Grams, Jv: HctFunction = None) -> sparse.csr_matrix:
    """Gram matrix of gamma(v, psi) = lap J v grad_pw psi + lap_pw psi grad J v."""
    mspace = grams.mspace
    mesh = mspace.mesh
    Jv = Jv if Jv is not None else grams.smooth(v)
    p = Jv.to_pwpoly()
    lap, grad = p.laplace(), p.grad()
    lap_psi = mspace.hessians[:, :, 0, 0] + mspace.hessians[:, :, 1, 1]
    parts = []
    for sl in chunks(mesh.n_triangles, CHUNK):
        pts, w = _rule(sl, mesh)
        _, gpsi = mspace.basis_at(pts, sl)
        L = lap.at_rule(pts, triangles=sl)
        G = grad.at_rule(pts, triangles=sl)
        gamma = L[..., None, None] * gpsi + lap_psi[sl][:, None, None, None, :] * G[..., None]
        parts.append(np.einsum('msq,msqij,msqik->mjk', w, gamma, gamma))
    B = assemble_matrix(np.concatenate(parts), mspace.l2g, mspace.l2g, (mspace.dim, mspace.dim))
    return (0.5 * (B + B.T)).tocsr()


# ----------------------------------------------------------------------
# Edge jumps, estimator and residual constant
# ----------------------------------------------------------------------

def flux_jumps(v: MorleyFunction) -> np.ndarray:
    """||[lap v grad v] . tau_E||^2_{L2(E)} per edge; zero on boundary edges."""
    mesh = v.mesh
    p = v.to_pwpoly()
    flux = p.laplace().multiply(p.grad(), ',k->k')
    t, w = gauss_legendre_01(2)
    edges = np.arange(mesh.n_edges)
    plus = np.einsum('eqk,ek->eq', flux.edge_traces(edges, t, side=0), mesh.tangents)
    minus = np.einsum('eqk,ek->eq', flux.edge_traces(edges, t, side=1), mesh.tangents)
    out = mesh.edge_lengths * ((plus - minus) ** 2 @ w)
    out[mesh.boundary_edges] = 0.0
    return out


def hessian_jumps(v: MorleyFunction) -> np.ndarray:
    """||[D^2 v] tau_E||^2_{L2(E)} per edge; boundary edges take the one-sided value."""
    mesh = v.mesh
    H = v.hessians()
    tp, tm = mesh.edge_triangles.T
    tau = mesh.tangents
    plus = np.einsum('eij,ej->ei', H[tp], tau)
    minus = np.where((tm >= 0)[:, None], np.einsum('eij,ej->ei', H[np.maximum(tm, 0)], tau), 0.0)
    return mesh.edge_lengths * np.sum((plus - minus) ** 2, axis=1)


def estimator_eta(v: MorleyFunction, source: SourceTerm) -> np.ndarray:
    """eta^2(T) per triangle."""
    mesh = v.mesh
    area = mesh.areas
    edge_terms = area[:, None] * flux_jumps(v)[mesh.tri_edges] + hessian_jumps(v)[mesh.tri_edges]
    return area ** 2 * source_norms(mesh, source) + np.sqrt(area) * edge_terms.sum(axis=1)


def mu_res(v: MorleyFunction, source: SourceTerm, constants: MeshConstants = None) -> float:
    """kappa2 ||h^2 f|| + sqrt(kappa2^2 + C_tr1 kappa1 kappa2) sqrt(sum_E frak_h(E) ||[lap v grad v] . tau||^2)."""
    mesh = v.mesh
    c = constants if constants is not None else mesh_constants(mesh)
    h2f = math.sqrt(float(np.sum(mesh.diameters ** 4 * source_norms(mesh, source))))
    inner = ~mesh.boundary_edges
    jumps = float(np.sum(mesh.frak_h_interior() * flux_jumps(v)[inner]))
    return c.kappa2 * h2f + math.sqrt(c.kappa2 ** 2 + c.C_tr1 * c.kappa1 * c.kappa2) * math.sqrt(jumps)


# ----------------------------------------------------------------------
# Explicit constants
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ExplicitConstants:
    g_inf: float
    C_G: float
    L_G: float
    C_b2: float
    C_b3: float
    L: float


def lipschitz_constant(area: float) -> float:
    return 2.0 * math.sqrt(area) / math.pi ** 2


def c_g(grad_w: PwPoly, constants: MeshConstants) -> float:
    """C_G(w) from the piecewise gradient of w."""
    mean = grad_w.pi0()
    oscillation = (grad_w - mean).norm('L4')
    return math.sqrt(2.0) * (constants.area ** 0.25 / math.pi * oscillation
                             + constants.C_P * mean.norm('Linf', h_power=1.0))


def explicit_constants(v: MorleyFunction, Jv: HctFunction, constants: MeshConstants = None) -> ExplicitConstants:
    mesh = v.mesh
    c = constants if constants is not None else mesh_constants(mesh)
    p = Jv.to_pwpoly()
    grad, lap = p.grad(), p.laplace()
    g_inf = math.sqrt(2.0) * grad.norm('Linf') + c.kappa1 * lap.norm('Linf', h_power=1.0)
    C_G = c_g(grad, c)
    scale = c.kappa1 * c.area ** 0.25 / math.pi
    L_G = C_G + scale * v.to_pwpoly().laplace().norm('L4', h_power=1.0)
    C_b3 = C_G + scale * lap.norm('L4', h_power=1.0)
    return ExplicitConstants(g_inf, C_G, L_G, g_inf, C_b3, lipschitz_constant(c.area))


def one_minus_J_norm(v: MorleyFunction, Jv: HctFunction) -> float:
    """|||(1 - J) v|||_pw."""
    return (v.to_pwpoly() - Jv.to_pwpoly()).hess().norm('L2')


# ----------------------------------------------------------------------
# Plain-text coordinate export
# ----------------------------------------------------------------------

def export_coo(A, path) -> Path:
    """Write `n_rows n_cols` then one `i j value` line per stored entry."""
    path = Path(path)
    A = sparse.coo_matrix(A)
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    lines += [f"{i} {j} {x!r}" for i, j, x in zip(A.row.tolist(), A.col.tolist(), A.data.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_coo(path) -> sparse.csr_matrix:
    lines = Path(path).read_text().split("\n")
    n, m = (int(s) for s in lines[0].split())
    entries = [line.split() for line in lines[1:] if line.strip()]
    if not entries:
        return sparse.csr_matrix((n, m))
    rows = np.array([int(e[0]) for e in entries])
    cols = np.array([int(e[1]) for e in entries])
    vals = np.array([float(e[2]) for e in entries])
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, m)).tocsr()
