"""
The full cubic Hsieh-Clough-Tocher macro element and the smoother J.

Local dofs of a triangle (12): for every vertex i the value and the two
gradient components (3i, 3i+1, 3i+2), then for every local edge k the
normal derivative at the edge midpoint (9 + k). Globally the edge dof is
taken along nu_E; vertex dofs need no orientation. Boundary dofs vanish,
so every HctFunction lies in H^2_0.

J maps a Morley function to an HCT function by keeping the vertex values,
averaging the piecewise gradients at every interior vertex, and choosing
the midpoint normal derivative so that the edge mean of grad(Jv) . nu_E
equals the Morley edge dof (Simpson's rule is exact for the quadratic
normal derivative). Hence I J = id.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import sparse

from .config import CHUNK, TOL_EIG_J
from .mesh import Mesh
from .morley import REF_MIDPOINTS, MorleyFunction, MorleySpace, local_outer_normals
from .pwpoly import PwPoly, n_coef, vandermonde, vandermonde_grad, vandermonde_hess
from .quadrature import REF_CENTROID, REF_VERTICES, split_rule
from .scatter import assemble_matrix, chunks, gather
from .spectral import EigResult, Pencil, extreme_eig, inflate

NCOEF = n_coef(3)
# unit outer normals of the reference triangle's local edges
REF_NORMALS = np.array([[1.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
REF_NORMALS[0] /= np.sqrt(2.0)


@lru_cache(maxsize=None)
def reference_basis() -> np.ndarray:
    """Coefficients (3, 10, 12) of the reference HCT basis: piece, monomial, dof."""
    rows, rhs = [], []
    t = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
    for k in range(3):
        # pieces k and k+1 share the segment from the centroid to P_{k+2}
        pts = REF_CENTROID + t[:, None] * (REF_VERTICES[(k + 2) % 3] - REF_CENTROID)
        blocks = [vandermonde(pts, 3)] + list(np.moveaxis(vandermonde_grad(pts, 3), 1, 0))
        for V in blocks:
            row = np.zeros((len(pts), 3 * NCOEF))
            row[:, k * NCOEF:(k + 1) * NCOEF] = V
            row[:, ((k + 1) % 3) * NCOEF:((k + 1) % 3 + 1) * NCOEF] = -V
            rows.append(row)
            rhs.append(np.zeros((len(pts), 12)))

    dof_rows = np.zeros((12, 3 * NCOEF))
    for i in range(3):
        s = (i + 1) % 3
        block = slice(s * NCOEF, (s + 1) * NCOEF)
        dof_rows[3 * i, block] = vandermonde(REF_VERTICES[i], 3)
        dof_rows[3 * i + 1:3 * i + 3, block] = vandermonde_grad(REF_VERTICES[i], 3)
    for k in range(3):
        block = slice(k * NCOEF, (k + 1) * NCOEF)
        dof_rows[9 + k, block] = REF_NORMALS[k] @ vandermonde_grad(REF_MIDPOINTS[k], 3)
    rows.append(dof_rows)
    rhs.append(np.eye(12))

    M, R = np.vstack(rows), np.vstack(rhs)
    coef, *_ = np.linalg.lstsq(M, R, rcond=None)
    if np.abs(M @ coef - R).max() > 1e-10:
        raise RuntimeError("HCT reference system is inconsistent")
    coef = coef.reshape(3, NCOEF, 12)
    coef.setflags(write=False)
    return coef


class HctSpace:
    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        inner_vertices = np.flatnonzero(~mesh.boundary_vertices)
        inner_edges = np.flatnonzero(~mesh.boundary_edges)
        self.vertex_dof = -np.ones(mesh.n_vertices, dtype=np.int64)
        self.vertex_dof[inner_vertices] = 3 * np.arange(len(inner_vertices))
        self.edge_dof = -np.ones(mesh.n_edges, dtype=np.int64)
        self.edge_dof[inner_edges] = 3 * len(inner_vertices) + np.arange(len(inner_edges))
        self.inner_vertices = inner_vertices
        self.inner_edges = inner_edges
        self.dim = 3 * len(inner_vertices) + len(inner_edges)

        vd = self.vertex_dof[mesh.triangles]
        vertex_cols = np.where(vd[:, :, None] >= 0, vd[:, :, None] + np.arange(3), -1).reshape(-1, 9)
        self.l2g = np.hstack([vertex_cols, self.edge_dof[mesh.tri_edges]])
        self.signs = np.hstack([np.ones((mesh.n_triangles, 9)), mesh.edge_sign])

    def transforms(self, sl: slice = slice(None)) -> np.ndarray:
        """Maps (c, 12, 12) from reference basis coefficients to the signed physical local basis."""
        mesh = self.mesh
        Binv = mesh.inv_jacobians[sl]
        c = len(Binv)
        D = np.zeros((c, 12, 12))
        for i in range(3):
            D[:, 3 * i, 3 * i] = 1.0
            D[:, 3 * i + 1:3 * i + 3, 3 * i + 1:3 * i + 3] = np.transpose(Binv, (0, 2, 1))
        w = np.einsum('mij,mkj->mki', Binv, local_outer_normals(mesh)[sl])
        G = reference_gradients_at_midpoints()
        D[:, 9:, :] = np.einsum('mkj,kjd->mkd', w, G)
        T = np.linalg.inv(D)
        return T * self.signs[sl][:, None, :]

    def basis_at(self, points: np.ndarray, sl: slice = slice(None), hessians: bool = False):
        """Values, gradients (and Hessians) of the signed local basis.

        `points` are per-piece reference points (3, nq, 2) or (c, 3, nq, 2).
        Shapes: values (c, 3, nq, 12), gradients (c, 3, nq, 2, 12),
        Hessians (c, 3, nq, 2, 2, 12).
        """
        ref = reference_basis()
        T = self.transforms(sl)
        Binv = self.mesh.inv_jacobians[sl]
        V = np.einsum('...sqc,scj->...sqj', vandermonde(points, 3), ref)
        G = np.einsum('...sqac,scj->...sqaj', vandermonde_grad(points, 3), ref)
        if V.ndim == 3:
            V, G = V[None], G[None]
        values = np.matmul(V, T[:, None])
        grads = np.einsum('mji,msqjl->msqil', Binv, np.matmul(G, T[:, None, None]))
        if not hessians:
            return values, grads
        H = np.einsum('...sqabc,scj->...sqabj', vandermonde_hess(points, 3), ref)
        if H.ndim == 5:
            H = H[None]
        H = np.matmul(H, T[:, None, None, None])
        hess = np.einsum('mai,mbj,msqabl->msqijl', Binv, Binv, H)
        return values, grads, hess

    def function(self, coef) -> 'HctFunction':
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (self.dim,):
            raise ValueError(f"HCT coefficient vector must have length {self.dim}, got {coef.shape}")
        return HctFunction(self, coef)


@lru_cache(maxsize=None)
def reference_gradients_at_midpoints() -> np.ndarray:
    """Reference gradients (3 edges, 2, 12) of the reference basis at the edge midpoints."""
    ref = reference_basis()
    return np.stack([vandermonde_grad(REF_MIDPOINTS[k], 3) @ ref[k] for k in range(3)])


@dataclass(frozen=True, eq=False)
class HctFunction:
    space: HctSpace
    coef: np.ndarray

    @property
    def mesh(self) -> Mesh:
        return self.space.mesh

    def to_pwpoly(self) -> PwPoly:
        ref = reference_basis()
        local = gather(self.coef, self.space.l2g)
        out = np.empty((self.mesh.n_triangles, 3, NCOEF))
        for sl in chunks(self.mesh.n_triangles, CHUNK):
            physical = np.einsum('mjl,ml->mj', self.space.transforms(sl), local[sl])
            out[sl] = np.einsum('scj,mj->msc', ref, physical)
        return PwPoly(self.mesh, out, 3)

    def vertex_values(self) -> np.ndarray:
        values = np.zeros(self.mesh.n_vertices)
        inner = self.space.inner_vertices
        values[inner] = self.coef[self.space.vertex_dof[inner]]
        return values

    def vertex_gradients(self) -> np.ndarray:
        grads = np.zeros((self.mesh.n_vertices, 2))
        inner = self.space.inner_vertices
        base = self.space.vertex_dof[inner]
        grads[inner] = np.stack([self.coef[base + 1], self.coef[base + 2]], axis=1)
        return grads

    def __add__(self, other: 'HctFunction') -> 'HctFunction':
        return HctFunction(self.space, self.coef + other.coef)

    def __rmul__(self, scalar: float) -> 'HctFunction':
        return HctFunction(self.space, scalar * self.coef)


def _vertex_gradient_average(mspace: MorleySpace) -> tuple:
    """Sparse maps (nv x N) from Morley coefficients to averaged vertex gradients."""
    mesh = mspace.mesh
    Binv = mesh.inv_jacobians
    VG = vandermonde_grad(REF_VERTICES, 2)                          # (3 vertices, 2, 6)
    G = np.einsum('mji,pjc,mcl->mpil', Binv, VG, mspace.local_coef)  # (m, 3, 2, 6)
    star = mesh.vertex_star_size[mesh.triangles]                      # (m, 3)
    inner = ~mesh.boundary_vertices[mesh.triangles]
    G = G * (inner / star)[:, :, None, None]
    rows = np.repeat(mesh.triangles[:, :, None], 6, axis=2)          # (m, 3, 6)
    cols = np.repeat(mspace.l2g[:, None, :], 3, axis=1)
    keep = cols >= 0
    shape = (mesh.n_vertices, mspace.dim)
    Gx = sparse.coo_matrix((G[:, :, 0][keep], (rows[keep], cols[keep])), shape=shape).tocsr()
    Gy = sparse.coo_matrix((G[:, :, 1][keep], (rows[keep], cols[keep])), shape=shape).tocsr()
    return Gx, Gy


def smoother_matrix(mspace: MorleySpace, hspace: HctSpace) -> sparse.csr_matrix:
    """The matrix of J: Morley coefficients -> HCT coefficients."""
    mesh = mspace.mesh
    N = mspace.dim
    iv, ie = hspace.inner_vertices, hspace.inner_edges
    Gx, Gy = _vertex_gradient_average(mspace)

    Sel_v = sparse.coo_matrix((np.ones(len(iv)), (np.arange(len(iv)), mspace.vertex_dof[iv])),
                              shape=(len(iv), N)).tocsr()
    a, b = mesh.edges[ie, 0], mesh.edges[ie, 1]
    ends = sparse.coo_matrix((np.ones(2 * len(ie)), (np.tile(np.arange(len(ie)), 2), np.concatenate([a, b]))),
                             shape=(len(ie), mesh.n_vertices)).tocsr()
    nu = mesh.normals[ie]
    Sel_e = sparse.coo_matrix((np.ones(len(ie)), (np.arange(len(ie)), mspace.edge_dof[ie])),
                              shape=(len(ie), N)).tocsr()
    endpoint_dn = sparse.diags(nu[:, 0]) @ ends @ Gx + sparse.diags(nu[:, 1]) @ ends @ Gy
    midpoint = 1.5 * Sel_e - 0.25 * endpoint_dn

    blocks = sparse.vstack([Sel_v, Gx[iv], Gy[iv], midpoint]).tocoo()
    # block rows -> HCT dof numbers
    base = hspace.vertex_dof[iv]
    row_map = np.concatenate([base, base + 1, base + 2, hspace.edge_dof[ie]])
    J = sparse.coo_matrix((blocks.data, (row_map[blocks.row], blocks.col)), shape=(hspace.dim, N))
    return J.tocsr()


def interpolation_matrix(hspace: HctSpace, mspace: MorleySpace) -> sparse.csr_matrix:
    """Morley interpolation restricted to HCT functions, read off the HCT dofs."""
    mesh = mspace.mesh
    iv, ie = mspace.inner_vertices, mspace.inner_edges
    rows, cols, vals = [mspace.vertex_dof[iv]], [hspace.vertex_dof[iv]], [np.ones(len(iv))]
    nu = mesh.normals[ie]
    for end in (0, 1):
        v = mesh.edges[ie, end]
        ok = hspace.vertex_dof[v] >= 0
        for comp in (0, 1):
            rows.append(mspace.edge_dof[ie][ok])
            cols.append(hspace.vertex_dof[v][ok] + 1 + comp)
            vals.append(nu[ok, comp] / 6.0)
    rows.append(mspace.edge_dof[ie])
    cols.append(hspace.edge_dof[ie])
    vals.append(np.full(len(ie), 4.0 / 6.0))
    I = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(mspace.dim, hspace.dim))
    return I.tocsr()


class Smoother:
    """J together with its spaces; built once per mesh."""

    def __init__(self, mspace: MorleySpace, hspace: HctSpace = None):
        self.mspace = mspace
        self.hspace = hspace if hspace is not None else HctSpace(mspace.mesh)

    @cached_property
    def matrix(self) -> sparse.csr_matrix:
        return smoother_matrix(self.mspace, self.hspace)

    def __call__(self, v: MorleyFunction) -> HctFunction:
        return HctFunction(self.hspace, self.matrix @ v.coef)


def smooth(v: MorleyFunction, hspace: HctSpace = None) -> HctFunction:
    """J v for a Morley function."""
    return Smoother(v.space, hspace)(v)


def hct_matrices(hspace: HctSpace):
    """HCT Gram matrices of the Hessian and gradient products."""
    mesh = hspace.mesh
    pts, wts = split_rule(4)
    K_parts, L_parts = [], []
    for sl in chunks(mesh.n_triangles, CHUNK):
        _, g, h = hspace.basis_at(pts, sl, hessians=True)
        w = mesh.dets[sl, None, None] * wts
        K_parts.append(np.einsum('msq,msqijk,msqijl->mkl', w, h, h))
        L_parts.append(np.einsum('msq,msqik,msqil->mkl', w, g, g))
    shape = (hspace.dim, hspace.dim)
    K = assemble_matrix(np.concatenate(K_parts), hspace.l2g, hspace.l2g, shape)
    L = assemble_matrix(np.concatenate(L_parts), hspace.l2g, hspace.l2g, shape)
    return K, L


def operator_norm_J(A_J, A_nc, tol: float = TOL_EIG_J, factor=None) -> tuple:
    """||J|| = sqrt(lambda_max(A_J, A_nc)), inflated by (1 + tol). Returns (bound, raw EigResult)."""
    result: EigResult = extreme_eig(Pencil(lambda x: A_J @ x, A_nc, 'largest', tol, factor=factor, name='norm_J'))
    return float(np.sqrt(inflate(result.value, tol))), result
