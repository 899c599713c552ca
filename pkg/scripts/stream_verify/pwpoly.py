"""
Piecewise polynomials on a triangulation.

Every piece is a polynomial in the macro reference coordinates (xi, eta) of
its triangle, stored as monomial coefficients xi^a eta^b ordered by total
degree. Pieces either cover the whole triangle (S = 1) or the three centroid
sub-triangles of the HCT split (S = 3); both kinds combine freely because they
share the same coordinates. Values may be scalar, vector or matrix valued.

Integrals, L2 and L4 norms are exact (conical rules on the sub-triangles);
the L-infinity norm is sampled on a barycentric lattice of order 12 per piece.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .config import MAX_DEGREE
from .errors import DegreeOverflowError
from .mesh import Mesh
from .quadrature import REF_VERTICES, gauss_legendre_01, lattice, piece_of, split_rule

LINF_LATTICE_ORDER = 12
MAX_RULE_DEGREE = 4 * MAX_DEGREE


def n_coef(degree: int) -> int:
    return (degree + 1) * (degree + 2) // 2


@lru_cache(maxsize=None)
def exponents(degree: int) -> np.ndarray:
    """Monomial exponents (a, b), ordered so degree d is a prefix of degree d + 1."""
    exps = [(a, t - a) for t in range(degree + 1) for a in range(t, -1, -1)]
    return np.array(exps, dtype=np.int64)


def vandermonde(points: np.ndarray, degree: int) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    e = exponents(degree)
    return points[..., 0, None] ** e[:, 0] * points[..., 1, None] ** e[:, 1]


@lru_cache(maxsize=None)
def _derivative_matrix(degree: int, axis: int) -> np.ndarray:
    """Coefficient map of d/dxi (axis 0) or d/deta (axis 1): degree -> degree - 1."""
    target = max(degree - 1, 0)
    e_in, e_out = exponents(degree), exponents(target)
    lookup = {tuple(e): i for i, e in enumerate(e_out.tolist())}
    D = np.zeros((len(e_in), len(e_out)))
    for i, (a, b) in enumerate(e_in.tolist()):
        power = (a, b)[axis]
        if power == 0:
            continue
        lowered = (a - 1, b) if axis == 0 else (a, b - 1)
        D[i, lookup[lowered]] = power
    D.setflags(write=False)
    return D


@lru_cache(maxsize=None)
def _product_matrix(d1: int, d2: int) -> np.ndarray:
    """Scatter map (n1 * n2, n3) sending coefficient pairs to the product coefficient."""
    e1, e2, e3 = exponents(d1), exponents(d2), exponents(d1 + d2)
    lookup = {tuple(e): i for i, e in enumerate(e3.tolist())}
    P = np.zeros((len(e1) * len(e2), len(e3)))
    for i, a in enumerate(e1.tolist()):
        for j, b in enumerate(e2.tolist()):
            P[i * len(e2) + j, lookup[(a[0] + b[0], a[1] + b[1])]] = 1.0
    P.setflags(write=False)
    return P


def _check_degree(degree: int, limit: int = MAX_DEGREE):
    if degree > limit:
        raise DegreeOverflowError(degree, limit)


@dataclass(frozen=True)
class TriPoly:
    """A single macro-triangle piece of a PwPoly."""

    triangle: int
    coef: np.ndarray        # (S, ncoef, *shape)
    degree: int
    B: np.ndarray
    origin: np.ndarray

    def evaluate(self, ref_points: np.ndarray) -> np.ndarray:
        ref_points = np.asarray(ref_points, dtype=float)
        V = vandermonde(ref_points, self.degree)
        if self.coef.shape[0] == 1:
            piece = np.zeros(ref_points.shape[:-1], dtype=np.int64)
        else:
            piece = piece_of(ref_points)
        coef = self.coef[piece]
        extra = coef.ndim - V.ndim
        return np.sum(V.reshape(V.shape + (1,) * extra) * coef, axis=V.ndim - 1)

    def evaluate_physical(self, points: np.ndarray) -> np.ndarray:
        ref = np.linalg.solve(self.B, (np.asarray(points, dtype=float) - self.origin).T).T
        return self.evaluate(ref)

    def at_vertices(self) -> np.ndarray:
        return self.evaluate(REF_VERTICES)


@dataclass(frozen=True, eq=False)
class PwPoly:
    mesh: Mesh
    coef: np.ndarray        # (m, S, ncoef, *shape)
    degree: int

    def __post_init__(self):
        _check_degree(self.degree)
        if self.coef.shape[2] != n_coef(self.degree):
            raise ValueError(f"expected {n_coef(self.degree)} coefficients for degree {self.degree}, "
                             f"got {self.coef.shape[2]}")
        if self.coef.shape[1] not in (1, 3):
            raise ValueError("pieces must cover the triangle (S=1) or its centroid split (S=3)")

    # -- construction ---------------------------------------------------

    @classmethod
    def constant(cls, mesh: Mesh, value) -> 'PwPoly':
        value = np.asarray(value, dtype=float)
        coef = np.broadcast_to(value, (mesh.n_triangles, 1, 1) + value.shape).copy()
        return cls(mesh, coef, 0)

    @classmethod
    def from_pieces(cls, mesh: Mesh, coef: np.ndarray, degree: int) -> 'PwPoly':
        coef = np.asarray(coef, dtype=float)
        if coef.ndim == 2:
            coef = coef[:, None, :]
        return cls(mesh, coef, degree)

    @property
    def split(self) -> bool:
        return self.coef.shape[1] == 3

    @property
    def shape(self) -> tuple:
        return self.coef.shape[3:]

    def piece(self, t: int) -> TriPoly:
        return TriPoly(t, self.coef[t], self.degree, self.mesh.jacobians[t],
                       self.mesh.vertices[self.mesh.triangles[t, 0]])

    # -- algebra --------------------------------------------------------

    def raised(self, degree: int, split: bool = False) -> np.ndarray:
        coef = self.coef
        if degree > self.degree:
            pad = [(0, 0)] * coef.ndim
            pad[2] = (0, n_coef(degree) - n_coef(self.degree))
            coef = np.pad(coef, pad)
        if split and coef.shape[1] == 1:
            coef = np.repeat(coef, 3, axis=1)
        return coef

    def _align(self, other: 'PwPoly'):
        degree = max(self.degree, other.degree)
        split = self.split or other.split
        return self.raised(degree, split), other.raised(degree, split), degree

    def __add__(self, other):
        if isinstance(other, PwPoly):
            a, b, d = self._align(other)
            return PwPoly(self.mesh, a + b, d)
        return self + PwPoly.constant(self.mesh, other)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        return self.scale(scalar)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, factor) -> 'PwPoly':
        """Multiply by a scalar or by one scalar per triangle."""
        factor = np.asarray(factor, dtype=float)
        if factor.ndim == 1:
            factor = factor.reshape((-1,) + (1,) * (self.coef.ndim - 1))
        return PwPoly(self.mesh, factor * self.coef, self.degree)

    def multiply(self, other: 'PwPoly', subscripts: str = '...,...->...') -> 'PwPoly':
        """Exact pointwise product with an einsum contraction of the value axes."""
        degree = self.degree + other.degree
        _check_degree(degree)
        split = self.split or other.split
        a = self.raised(self.degree, split)
        b = other.raised(other.degree, split)
        lhs, rest = subscripts.split('->')
        sa, sb = lhs.split(',')
        pair = np.einsum(f'mxi{sa},mxj{sb}->mxij{rest}', a, b)
        m, S, n1, n2 = pair.shape[:4]
        pair = pair.reshape((m, S, n1 * n2) + pair.shape[4:])
        coef = np.einsum('mxp...,pc->mxc...', pair, _product_matrix(self.degree, other.degree))
        return PwPoly(self.mesh, coef, degree)

    def dot(self, other: 'PwPoly') -> 'PwPoly':
        return self.multiply(other, 'k,k->')

    def component(self, index) -> 'PwPoly':
        return PwPoly(self.mesh, self.coef[(slice(None),) * 3 + np.index_exp[index]], self.degree)

    # -- differential operators ------------------------------------------

    def grad(self) -> 'PwPoly':
        """Exact piecewise gradient; appends a value axis of length 2."""
        dxi = np.einsum('mxc...,cd->mxd...', self.coef, _derivative_matrix(self.degree, 0))
        deta = np.einsum('mxc...,cd->mxd...', self.coef, _derivative_matrix(self.degree, 1))
        ref = np.stack([dxi, deta], axis=-1)
        Binv = self.mesh.inv_jacobians
        coef = np.einsum('mji,mxc...j->mxc...i', Binv, ref)
        return PwPoly(self.mesh, coef, max(self.degree - 1, 0))

    def curl(self) -> 'PwPoly':
        """Rotated gradient (d/dy, -d/dx) of a scalar field."""
        g = self.grad().coef
        return PwPoly(self.mesh, np.stack([g[..., 1], -g[..., 0]], axis=-1), max(self.degree - 1, 0))

    def hess(self) -> 'PwPoly':
        return self.grad().grad()

    def laplace(self) -> 'PwPoly':
        H = self.hess().coef
        return PwPoly(self.mesh, H[..., 0, 0] + H[..., 1, 1], max(self.degree - 2, 0))

    def diffop(self, op: str) -> 'PwPoly':
        ops = {'grad': self.grad, 'curl': self.curl, 'laplace': self.laplace, 'hess': self.hess}
        if op not in ops:
            raise ValueError(f"unknown differential operator {op!r}; expected one of {sorted(ops)}")
        return ops[op]()

    # -- evaluation -----------------------------------------------------

    def at_rule(self, points: np.ndarray, triangles: Optional[np.ndarray] = None) -> np.ndarray:
        """Values at per-piece reference points (3, nq, 2): result (m, 3, nq, *shape)."""
        V = vandermonde(points, self.degree)
        coef = self.coef if triangles is None else self.coef[triangles]
        if coef.shape[1] == 1:
            return np.einsum('sqc,mc...->msq...', V, coef[:, 0])
        return np.einsum('sqc,msc...->msq...', V, coef)

    def evaluate(self, triangles: np.ndarray, ref_points: np.ndarray,
                 piece: Optional[np.ndarray] = None) -> np.ndarray:
        """Values at reference points (k, n, 2) of triangles (k,)."""
        triangles = np.asarray(triangles, dtype=np.int64)
        ref_points = np.asarray(ref_points, dtype=float)
        if piece is None:
            piece = piece_of(ref_points) if self.split else np.zeros(ref_points.shape[:-1], dtype=np.int64)
        elif not self.split:
            piece = np.zeros_like(piece)
        V = vandermonde(ref_points, self.degree)
        coef = self.coef[triangles[:, None], piece]      # (k, n, ncoef, *shape)
        return np.einsum('knc,knc...->kn...', V, coef)

    def vertex_values(self) -> np.ndarray:
        tri, loc = self.mesh.vertex_triangle.T
        return self.evaluate(tri, REF_VERTICES[loc][:, None, :], piece=((loc + 1) % 3)[:, None])[:, 0]

    def edge_traces(self, edges: np.ndarray, t: np.ndarray, side: int = 0) -> np.ndarray:
        """Values at x(t) = lo + t (hi - lo) on the given edges, seen from T+ (0) or T- (1).

        Returns (k, len(t), *shape); T- rows of boundary edges are zero.
        """
        edges = np.asarray(edges, dtype=np.int64)
        tri = self.mesh.edge_triangles[edges, side]
        loc = self.mesh.edge_local_index[edges, side]
        exists = tri >= 0
        tri_safe, loc_safe = np.where(exists, tri, 0), np.where(exists, loc, 0)
        forward = self.mesh.edge_sign[tri_safe, loc_safe] > 0
        start = REF_VERTICES[(loc_safe + 1) % 3]
        end = REF_VERTICES[(loc_safe + 2) % 3]
        start, end = np.where(forward[:, None], start, end), np.where(forward[:, None], end, start)
        t = np.asarray(t, dtype=float)
        ref = start[:, None, :] + t[None, :, None] * (end - start)[:, None, :]
        piece = np.repeat(loc_safe[:, None], len(t), axis=1)
        vals = self.evaluate(tri_safe, ref, piece=piece)
        return vals * exists.reshape((-1,) + (1,) * (vals.ndim - 1))

    def edge_normal_means(self, npts: int = 2) -> np.ndarray:
        """Mean of grad p . nu_E over every edge, evaluated from T+."""
        edges = np.arange(self.mesh.n_edges)
        t, w = gauss_legendre_01(npts)
        g = self.grad().edge_traces(edges, t, side=0)
        return np.einsum('eqk,ek,q->e', g, self.mesh.normals, w)

    # -- integrals and norms ----------------------------------------------

    def _rule_values(self, power_degree: int):
        _check_degree(power_degree, MAX_RULE_DEGREE)
        pts, wts = split_rule(power_degree)
        return self.at_rule(pts), wts

    def integrate_per_triangle(self) -> np.ndarray:
        vals, wts = self._rule_values(self.degree)
        return self.mesh.dets.reshape((-1,) + (1,) * len(self.shape)) * np.einsum('msq...,sq->m...', vals, wts)

    def integrate(self) -> np.ndarray:
        """Exact integral over the domain (componentwise for vector values)."""
        return np.sum(self.integrate_per_triangle(), axis=0)

    def _pointwise_abs(self, vals: np.ndarray) -> np.ndarray:
        axes = tuple(range(vals.ndim - len(self.shape), vals.ndim))
        return np.sqrt(np.sum(vals ** 2, axis=axes)) if axes else np.abs(vals)

    def norm(self, kind: str = 'L2', h_power: float = 0.0) -> float:
        """L2, L4 or Linf norm of |p| (Euclidean / Frobenius for non-scalar values).

        h_power multiplies each piece by h_T ** h_power.
        """
        weight = self.mesh.diameters ** h_power
        if kind == 'Linf':
            pts = lattice(LINF_LATTICE_ORDER, self.split)
            vals = self._pointwise_abs(self.at_rule(pts))
            return float(np.max(weight * vals.reshape(len(weight), -1).max(axis=1)))
        if kind not in ('L2', 'L4'):
            raise ValueError(f"unknown norm {kind!r}; expected L2, L4 or Linf")
        p = 2 if kind == 'L2' else 4
        vals, wts = self._rule_values(p * self.degree)
        absval = self._pointwise_abs(vals)
        per_tri = self.mesh.dets * np.einsum('msq,sq->m', absval ** p, wts)
        return float(np.sum(weight ** p * per_tri) ** (1.0 / p))

    def norms(self, kind: str, weight: float = 0.0) -> float:
        return self.norm(kind, h_power=weight)

    def pi0(self) -> 'PwPoly':
        """Piecewise integral mean per macro triangle."""
        means = self.integrate_per_triangle() / self.mesh.areas.reshape((-1,) + (1,) * len(self.shape))
        return PwPoly(self.mesh, means[:, None, None], 0)


def vandermonde_grad(points: np.ndarray, degree: int) -> np.ndarray:
    """Reference gradients of all monomials, shape (..., 2, ncoef)."""
    points = np.asarray(points, dtype=float)
    e = exponents(degree)
    x, y = points[..., 0, None], points[..., 1, None]
    dx = e[:, 0] * x ** np.maximum(e[:, 0] - 1, 0) * y ** e[:, 1]
    dy = e[:, 1] * x ** e[:, 0] * y ** np.maximum(e[:, 1] - 1, 0)
    return np.stack([dx, dy], axis=-2)


def vandermonde_hess(points: np.ndarray, degree: int) -> np.ndarray:
    """Reference Hessians of all monomials, shape (..., 2, 2, ncoef)."""
    points = np.asarray(points, dtype=float)
    e = exponents(degree)
    a, b = e[:, 0], e[:, 1]
    x, y = points[..., 0, None], points[..., 1, None]
    dxx = a * (a - 1) * x ** np.maximum(a - 2, 0) * y ** b
    dyy = b * (b - 1) * x ** a * y ** np.maximum(b - 2, 0)
    dxy = a * b * x ** np.maximum(a - 1, 0) * y ** np.maximum(b - 1, 0)
    return np.stack([np.stack([dxx, dxy], axis=-2), np.stack([dxy, dyy], axis=-2)], axis=-3)
