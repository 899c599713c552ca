"""
The Morley element.

Degrees of freedom: the value at every interior vertex and the mean of
grad v . nu_E over every interior edge; boundary dofs vanish. Interior
vertices are numbered first, interior edges after them.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .mesh import Mesh
from .pwpoly import PwPoly, TriPoly, vandermonde, vandermonde_grad, vandermonde_hess
from .quadrature import REF_VERTICES, gauss_legendre_01
from .scatter import gather

# midpoints of the local edges in reference coordinates
REF_MIDPOINTS = np.array([0.5 * (REF_VERTICES[(k + 1) % 3] + REF_VERTICES[(k + 2) % 3]) for k in range(3)])


def local_outer_normals(mesh: Mesh) -> np.ndarray:
    """Unit outer normals (m, 3, 2) of the local edges."""
    p = mesh.vertices[mesh.triangles]
    d = np.stack([p[:, (k + 2) % 3] - p[:, (k + 1) % 3] for k in range(3)], axis=1)
    d /= np.linalg.norm(d, axis=2, keepdims=True)
    return np.stack([d[..., 1], -d[..., 0]], axis=-1)


class MorleySpace:
    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        inner_vertices = np.flatnonzero(~mesh.boundary_vertices)
        inner_edges = np.flatnonzero(~mesh.boundary_edges)
        self.vertex_dof = -np.ones(mesh.n_vertices, dtype=np.int64)
        self.vertex_dof[inner_vertices] = np.arange(len(inner_vertices))
        self.edge_dof = -np.ones(mesh.n_edges, dtype=np.int64)
        self.edge_dof[inner_edges] = len(inner_vertices) + np.arange(len(inner_edges))
        self.inner_vertices = inner_vertices
        self.inner_edges = inner_edges
        self.dim = len(inner_vertices) + len(inner_edges)
        self.l2g = np.hstack([self.vertex_dof[mesh.triangles], self.edge_dof[mesh.tri_edges]])
        self.signs = np.hstack([np.ones((mesh.n_triangles, 3)), mesh.edge_sign])

    @property
    def ndof(self) -> int:
        return self.dim

    @cached_property
    def local_coef(self) -> np.ndarray:
        """Monomial coefficients (m, 6, 6) of the signed local basis; axis 1 is the monomial."""
        mesh = self.mesh
        m = mesh.n_triangles
        D = np.empty((m, 6, 6))
        D[:, :3, :] = vandermonde(REF_VERTICES, 2)
        # n . grad_x = (B^-1 n) . grad_xi
        w = np.einsum('mij,mkj->mki', mesh.inv_jacobians, local_outer_normals(mesh))
        G = vandermonde_grad(REF_MIDPOINTS, 2)                     # (3, 2, 6)
        D[:, 3:, :] = np.einsum('mkj,kjc->mkc', w, G)
        C = np.linalg.inv(D)
        return C * self.signs[:, None, :]

    @cached_property
    def hessians(self) -> np.ndarray:
        """Constant physical Hessians (m, 6, 2, 2) of the signed local basis."""
        Binv = self.mesh.inv_jacobians
        H = vandermonde_hess(np.zeros(2), 2)                       # (2, 2, 6)
        Href = np.einsum('abc,mcl->mlab', H, self.local_coef)
        return np.einsum('mai,mlab,mbj->mlij', Binv, Href, Binv)

    def basis_on(self, t: int):
        """The 6 signed local shape functions of triangle t with their global dofs and signs."""
        mesh = self.mesh
        B = mesh.jacobians[t]
        origin = mesh.vertices[mesh.triangles[t, 0]]
        polys = [TriPoly(t, self.local_coef[t, :, l][None, :], 2, B, origin) for l in range(6)]
        return polys, self.l2g[t], self.signs[t]

    def basis_at(self, points: np.ndarray, sl: slice = slice(None)):
        """Values (c, S, nq, 6) and physical gradients (c, S, nq, 2, 6).

        `points` are reference points (S, nq, 2) shared by all triangles or
        (c, S, nq, 2) per triangle.
        """
        coef = self.local_coef[sl]
        Binv = self.mesh.inv_jacobians[sl]
        V, VG = vandermonde(points, 2), vandermonde_grad(points, 2)
        if V.ndim == 3:
            V, VG = V[None], VG[None]
        values = np.matmul(V, coef[:, None])
        ref_grad = np.matmul(VG, coef[:, None, None])
        grads = np.einsum('mji,msqjl->msqil', Binv, ref_grad)
        return values, grads

    def function(self, coef) -> 'MorleyFunction':
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (self.dim,):
            raise ValueError(f"Morley coefficient vector must have length {self.dim}, got {coef.shape}")
        return MorleyFunction(self, coef)

    def zero(self) -> 'MorleyFunction':
        return MorleyFunction(self, np.zeros(self.dim))


@dataclass(frozen=True, eq=False)
class MorleyFunction:
    space: MorleySpace
    coef: np.ndarray

    @property
    def mesh(self) -> Mesh:
        return self.space.mesh

    def local(self) -> np.ndarray:
        return gather(self.coef, self.space.l2g)

    def to_pwpoly(self) -> PwPoly:
        c = np.einsum('mcl,ml->mc', self.space.local_coef, self.local())
        return PwPoly(self.mesh, c[:, None, :], 2)

    def hessians(self) -> np.ndarray:
        return np.einsum('mlij,ml->mij', self.space.hessians, self.local())

    def laplacians(self) -> np.ndarray:
        H = self.hessians()
        return H[:, 0, 0] + H[:, 1, 1]

    def energy_norm(self) -> float:
        H = self.hessians()
        return float(np.sqrt(np.sum(self.mesh.areas * np.sum(H ** 2, axis=(1, 2)))))

    def __add__(self, other: 'MorleyFunction') -> 'MorleyFunction':
        return MorleyFunction(self.space, self.coef + other.coef)

    def __sub__(self, other: 'MorleyFunction') -> 'MorleyFunction':
        return MorleyFunction(self.space, self.coef - other.coef)

    def __rmul__(self, scalar: float) -> 'MorleyFunction':
        return MorleyFunction(self.space, scalar * self.coef)


@dataclass(frozen=True)
class SmoothFunction:
    """A closed-form function given by value and gradient callables of (x, y)."""

    value: Callable
    gradient: Callable
    edge_points: int = 6

    def vertex_values(self, mesh: Mesh) -> np.ndarray:
        x, y = mesh.vertices.T
        return np.asarray(self.value(x, y), dtype=float) * np.ones(mesh.n_vertices)

    def edge_normal_means(self, mesh: Mesh) -> np.ndarray:
        t, w = gauss_legendre_01(self.edge_points)
        lo, hi = mesh.vertices[mesh.edges[:, 0]], mesh.vertices[mesh.edges[:, 1]]
        pts = lo[:, None, :] + t[None, :, None] * (hi - lo)[:, None, :]
        gx, gy = self.gradient(pts[..., 0], pts[..., 1])
        dn = gx * mesh.normals[:, None, 0] + gy * mesh.normals[:, None, 1]
        return dn @ w


def interpolate(space: MorleySpace, v) -> MorleyFunction:
    """Morley interpolation I v: match interior vertex values and edge normal-derivative means.

    `v` is a MorleyFunction, an HctFunction, a PwPoly or a SmoothFunction.
    """
    if hasattr(v, 'to_pwpoly'):
        v = v.to_pwpoly()
    if isinstance(v, PwPoly):
        values, means = v.vertex_values(), v.edge_normal_means()
    else:
        values, means = v.vertex_values(space.mesh), v.edge_normal_means(space.mesh)
    coef = np.concatenate([values[space.inner_vertices], means[space.inner_edges]])
    return MorleyFunction(space, coef)


def _as_pwpoly(v) -> PwPoly:
    return v.to_pwpoly() if hasattr(v, 'to_pwpoly') else v


def a_pw(u, v) -> float:
    """Piecewise energy product of two Morley / HCT / piecewise-polynomial functions."""
    hu, hv = _as_pwpoly(u).hess(), _as_pwpoly(v).hess()
    return float(hu.multiply(hv, 'kl,kl->').integrate())


def energy_norm_pw(v) -> float:
    """|||v|||_pw for any Morley / HCT / piecewise-polynomial function or difference."""
    return _as_pwpoly(v).hess().norm('L2')
