"""
Triangulations of the unit square and the L-shaped domain.

A Mesh is immutable: refinement returns a new Mesh whose `parent` array maps
every triangle to the triangle of the previous mesh it came from.

Conventions
-----------
* triangles are counter-clockwise; local edge k is opposite local vertex k
  and runs from vertex k+1 to vertex k+2 (mod 3)
* `refine_edge[t]` is the local index of the refinement edge of triangle t
* edge E = (lo, hi) with lo < hi; tau_E points from lo to hi and nu_E is tau_E
  rotated 90 degrees clockwise
* T+ of an interior edge is the triangle for which nu_E is the outer normal
"""

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .config import GENERAL_CONSTANTS, GEOMETRY_TOL, RIGHT_ISOSCELES_CONSTANTS
from .errors import RefinementError

DOMAINS = ('unit_square', 'l_shape')
DOMAIN_AREAS = {'unit_square': 1.0, 'l_shape': 3.0}


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    refine_edge: np.ndarray
    domain: str = 'custom'
    generation: int = 0
    parent: Optional[np.ndarray] = None

    def __post_init__(self):
        vertices = np.ascontiguousarray(self.vertices, dtype=float)
        triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        refine_edge = np.ascontiguousarray(self.refine_edge, dtype=np.int64)
        for arr in (vertices, triangles, refine_edge):
            arr.setflags(write=False)
        object.__setattr__(self, 'vertices', vertices)
        object.__setattr__(self, 'triangles', triangles)
        object.__setattr__(self, 'refine_edge', refine_edge)
        if self.parent is not None:
            parent = np.ascontiguousarray(self.parent, dtype=np.int64)
            parent.setflags(write=False)
            object.__setattr__(self, 'parent', parent)
        self._validate()

    def _validate(self):
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise ValueError(f"vertices must have shape (n, 2), got {self.vertices.shape}")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError(f"triangles must have shape (m, 3), got {self.triangles.shape}")
        if self.triangles.min() < 0 or self.triangles.max() >= len(self.vertices):
            raise ValueError("triangle vertex index out of range")
        if self.refine_edge.shape != (len(self.triangles),) or not np.isin(self.refine_edge, (0, 1, 2)).all():
            raise ValueError("refine_edge must hold one local index in {0, 1, 2} per triangle")
        if (self.dets <= 0.0).any():
            bad = int(np.argmin(self.dets))
            raise ValueError(f"triangle {bad} is degenerate or clockwise")
        counts = np.bincount(self._local_edge_ids, minlength=len(self.edges))
        if counts.max() > 2:
            raise ValueError("non-conforming mesh: an edge has more than 2 adjacent triangles")

    # ------------------------------------------------------------------
    # Sizes and per-triangle geometry
    # ------------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def jacobians(self) -> np.ndarray:
        """Affine maps B_T (m, 2, 2) with x = P0 + B_T xi."""
        p = self.vertices[self.triangles]
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)

    @cached_property
    def dets(self) -> np.ndarray:
        B = self.jacobians
        return B[:, 0, 0] * B[:, 1, 1] - B[:, 0, 1] * B[:, 1, 0]

    @cached_property
    def inv_jacobians(self) -> np.ndarray:
        B = self.jacobians
        d = self.dets
        inv = np.empty_like(B)
        inv[:, 0, 0] = B[:, 1, 1] / d
        inv[:, 1, 1] = B[:, 0, 0] / d
        inv[:, 0, 1] = -B[:, 0, 1] / d
        inv[:, 1, 0] = -B[:, 1, 0] / d
        return inv

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * self.dets

    @cached_property
    def local_edge_lengths(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return np.stack([
            np.linalg.norm(p[:, (k + 2) % 3] - p[:, (k + 1) % 3], axis=1) for k in range(3)
        ], axis=1)

    @cached_property
    def diameters(self) -> np.ndarray:
        return self.local_edge_lengths.max(axis=1)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def h_max(self) -> float:
        return float(self.diameters.max())

    @property
    def area(self) -> float:
        return float(np.sum(self.areas))

    # ------------------------------------------------------------------
    # Edges
    # ------------------------------------------------------------------

    @cached_property
    def _local_edges(self) -> np.ndarray:
        t = self.triangles
        return np.stack([t[:, [(k + 1) % 3, (k + 2) % 3]] for k in range(3)], axis=1)

    @cached_property
    def _edge_table(self):
        local = self._local_edges.reshape(-1, 2)
        keyed = np.sort(local, axis=1)
        edges, inverse = np.unique(keyed, axis=0, return_inverse=True)
        return edges, inverse.reshape(-1)

    @property
    def edges(self) -> np.ndarray:
        """Global edges (ne, 2) as sorted vertex pairs."""
        return self._edge_table[0]

    @cached_property
    def _local_edge_ids(self) -> np.ndarray:
        return self._edge_table[1]

    @cached_property
    def tri_edges(self) -> np.ndarray:
        """Global edge index of local edge k of triangle t, shape (m, 3)."""
        return self._local_edge_ids.reshape(-1, 3)

    @cached_property
    def edge_sign(self) -> np.ndarray:
        """+1 where nu_E is the outer normal of the triangle on local edge k, else -1."""
        start = self._local_edges[:, :, 0]
        lo = self.edges[self.tri_edges, 0]
        return np.where(start == lo, 1.0, -1.0)

    @cached_property
    def _adjacency(self):
        ne = self.n_edges
        tris = -np.ones((ne, 2), dtype=np.int64)
        local = -np.ones((ne, 2), dtype=np.int64)
        t_idx = np.repeat(np.arange(self.n_triangles), 3)
        k_idx = np.tile(np.arange(3), self.n_triangles)
        e_idx = self.tri_edges.reshape(-1)
        plus = self.edge_sign.reshape(-1) > 0
        # interior edges: exactly one side is T+; boundary edges go to slot 0
        counts = np.bincount(e_idx, minlength=ne)
        slot = np.where(plus, 0, 1)
        slot = np.where(counts[e_idx] == 1, 0, slot)
        tris[e_idx, slot] = t_idx
        local[e_idx, slot] = k_idx
        return tris, local

    @property
    def edge_triangles(self) -> np.ndarray:
        """(T+, T-) per edge; boundary edges have T- = -1."""
        return self._adjacency[0]

    @property
    def edge_local_index(self) -> np.ndarray:
        """Local edge index of the edge inside T+ and T-."""
        return self._adjacency[1]

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return self.edge_triangles[:, 1] < 0

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        flags = np.zeros(self.n_vertices, dtype=bool)
        flags[self.edges[self.boundary_edges].reshape(-1)] = True
        return flags

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)

    @cached_property
    def tangents(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return d / self.edge_lengths[:, None]

    @cached_property
    def normals(self) -> np.ndarray:
        tau = self.tangents
        return np.stack([tau[:, 1], -tau[:, 0]], axis=1)

    @cached_property
    def vertex_star_size(self) -> np.ndarray:
        return np.bincount(self.triangles.reshape(-1), minlength=self.n_vertices)

    @cached_property
    def vertex_triangle(self) -> np.ndarray:
        """One (triangle, local index) pair per vertex, shape (n, 2)."""
        flat = self.triangles.reshape(-1)
        first = np.full(self.n_vertices, -1, dtype=np.int64)
        order = np.arange(len(flat))[::-1]
        first[flat[order]] = order
        return np.stack([first // 3, first % 3], axis=1)

    # ------------------------------------------------------------------
    # Edge parameter and shape checks
    # ------------------------------------------------------------------

    def frak_h(self, edge: int) -> float:
        """3|E| / (h_{T+}^-4 |T+| + h_{T-}^-4 |T-|) for an interior edge."""
        if self.boundary_edges[edge]:
            raise ValueError(f"edge {edge} lies on the boundary; frak_h needs an interior edge")
        tp, tm = self.edge_triangles[edge]
        h, a = self.diameters, self.areas
        return float(3.0 * self.edge_lengths[edge] / (h[tp] ** -4 * a[tp] + h[tm] ** -4 * a[tm]))

    def frak_h_interior(self) -> np.ndarray:
        """frak_h over all interior edges, in the order of np.flatnonzero(~boundary_edges)."""
        inner = ~self.boundary_edges
        tp, tm = self.edge_triangles[inner].T
        h, a = self.diameters, self.areas
        return 3.0 * self.edge_lengths[inner] / (h[tp] ** -4 * a[tp] + h[tm] ** -4 * a[tm])

    def right_isosceles(self, tol: float = GEOMETRY_TOL) -> np.ndarray:
        lengths = np.sort(self.local_edge_lengths, axis=1)
        legs_equal = np.abs(lengths[:, 0] - lengths[:, 1]) <= tol * lengths[:, 2]
        hyp = np.abs(lengths[:, 2] - np.sqrt(2.0) * lengths[:, 0]) <= tol * lengths[:, 2]
        return legs_equal & hyp

    def refinement_edge_is_longest(self, tol: float = GEOMETRY_TOL) -> np.ndarray:
        lengths = self.local_edge_lengths
        own = lengths[np.arange(self.n_triangles), self.refine_edge]
        return own >= (1.0 - tol) * lengths.max(axis=1)


@dataclass(frozen=True)
class MeshConstants:
    h_max: float
    C_P: float
    C_tr1: float
    kappa1: float
    kappa2: float
    area: float
    right_isosceles: bool


def mesh_constants(mesh: Mesh) -> MeshConstants:
    if mesh.right_isosceles().all():
        c = RIGHT_ISOSCELES_CONSTANTS
        return MeshConstants(mesh.h_max, c['C_P'], c['C_tr1'], c['kappa1'], c['kappa2'], mesh.area, True)
    # max over x in T of |x - mid(T)| is attained at a vertex
    p = mesh.vertices[mesh.triangles]
    far = np.linalg.norm(p - mesh.centroids[:, None, :], axis=2).max(axis=1)
    c_tr1 = float(np.max(far / mesh.diameters))
    c = GENERAL_CONSTANTS
    return MeshConstants(mesh.h_max, c['C_P'], c_tr1, c['kappa1'], c['kappa2'], mesh.area, False)


# ----------------------------------------------------------------------
# Initial triangulations
# ----------------------------------------------------------------------

def _split_square(corner, diagonal):
    """Two right-isosceles triangles of the unit cell at `corner`, right angle at local vertex 0."""
    x0, y0 = corner
    a, b, c, d = (x0, y0), (x0 + 1, y0), (x0 + 1, y0 + 1), (x0, y0 + 1)
    if diagonal == 'ac':
        return [(b, c, a), (d, a, c)]
    return [(a, b, d), (c, d, b)]


def build_initial(domain: str) -> Mesh:
    """Initial mesh: unit cells cut by one diagonal, hypotenuse as refinement edge."""
    if domain == 'unit_square':
        cells = [((0, 0), 'ac')]
    elif domain == 'l_shape':
        # diagonals meet at the reentrant corner
        cells = [((-1, 0), 'bd'), ((-1, -1), 'ac'), ((0, -1), 'bd')]
    else:
        raise ValueError(f"unknown domain {domain!r}; expected one of {DOMAINS}")

    index = {}
    triangles = []
    for corner, diagonal in cells:
        for tri in _split_square(corner, diagonal):
            triangles.append([index.setdefault(p, len(index)) for p in tri])
    vertices = np.array(sorted(index, key=index.get), dtype=float)
    triangles = np.array(triangles)
    return Mesh(vertices, triangles, np.zeros(len(triangles), dtype=np.int64), domain=domain)


# ----------------------------------------------------------------------
# Refinement
# ----------------------------------------------------------------------

def _edge_keys(a: np.ndarray, b: np.ndarray, base: int) -> np.ndarray:
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return lo.astype(np.int64) * base + hi


def refine_nvb(mesh: Mesh, marked_edges) -> Mesh:
    """Newest-vertex bisection of all marked edges plus closure."""
    marked_idx = np.unique(np.asarray(list(marked_edges), dtype=np.int64))
    if marked_idx.size == 0:
        raise ValueError("refine_nvb needs a nonempty set of marked edges")
    if marked_idx.min() < 0 or marked_idx.max() >= mesh.n_edges:
        raise ValueError("marked edge index out of range")

    marked = np.zeros(mesh.n_edges, dtype=bool)
    marked[marked_idx] = True
    own = mesh.tri_edges[np.arange(mesh.n_triangles), mesh.refine_edge]
    bound = 10 * mesh.n_triangles
    for rounds in range(bound + 1):
        need = marked[mesh.tri_edges].any(axis=1) & ~marked[own]
        if not need.any():
            break
        marked[own[need]] = True
    else:
        raise RefinementError(f"NVB closure did not terminate within {bound} rounds", bound)

    new_edges = mesh.edges[marked]
    n0 = mesh.n_vertices
    midpoints = 0.5 * (mesh.vertices[new_edges[:, 0]] + mesh.vertices[new_edges[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])
    base = len(vertices)
    keys = _edge_keys(new_edges[:, 0], new_edges[:, 1], base)
    order = np.argsort(keys)
    keys, mids = keys[order], (n0 + np.arange(len(new_edges)))[order]

    tris, ref, parent = mesh.triangles.copy(), mesh.refine_edge.copy(), np.arange(mesh.n_triangles)
    while True:
        rows = np.arange(len(tris))
        p = tris[rows, (ref + 1) % 3]
        q = tris[rows, (ref + 2) % 3]
        k = _edge_keys(p, q, base)
        pos = np.minimum(np.searchsorted(keys, k), len(keys) - 1)
        hit = keys[pos] == k
        if not hit.any():
            break
        v = tris[hit, ref[hit]]
        m = mids[pos[hit]]
        child1 = np.stack([v, p[hit], m], axis=1)
        child2 = np.stack([v, m, q[hit]], axis=1)
        keep = ~hit
        tris = np.vstack([tris[keep], child1, child2])
        ref = np.concatenate([ref[keep], np.full(hit.sum(), 2), np.full(hit.sum(), 1)])
        parent = np.concatenate([parent[keep], parent[hit], parent[hit]])

    return Mesh(vertices, tris, ref, domain=mesh.domain, generation=mesh.generation + 1, parent=parent)


def refine_red(mesh: Mesh) -> Mesh:
    """Uniform red refinement; children keep the parent's refinement-edge index."""
    n0, m = mesh.n_vertices, mesh.n_triangles
    midpoints = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    vertices = np.vstack([mesh.vertices, midpoints])
    t = mesh.triangles
    m0, m1, m2 = (n0 + mesh.tri_edges[:, k] for k in range(3))
    children = np.stack([
        np.stack([t[:, 0], m2, m1], axis=1),
        np.stack([m2, t[:, 1], m0], axis=1),
        np.stack([m1, m0, t[:, 2]], axis=1),
        np.stack([m0, m1, m2], axis=1),
    ], axis=1).reshape(-1, 3)
    ref = np.repeat(mesh.refine_edge, 4)
    parent = np.repeat(np.arange(m), 4)
    return Mesh(vertices, children, ref, domain=mesh.domain, generation=mesh.generation + 1, parent=parent)


# ----------------------------------------------------------------------
# Plain-text export
# ----------------------------------------------------------------------

def save_mesh(mesh: Mesh, path) -> Path:
    path = Path(path)
    lines = [f"# domain {mesh.domain} generation {mesh.generation}"]
    lines += [f"v {x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"t {i} {j} {k} {r}" for (i, j, k), r in zip(mesh.triangles.tolist(), mesh.refine_edge.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def load_mesh(path, domain: str = 'custom') -> Mesh:
    vertices, triangles, ref = [], [], []
    generation = 0
    for raw in Path(path).read_text().splitlines():
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == '#':
            if 'domain' in parts:
                domain = parts[parts.index('domain') + 1]
            if 'generation' in parts:
                generation = int(parts[parts.index('generation') + 1])
        elif parts[0] == 'v':
            vertices.append((float(parts[1]), float(parts[2])))
        elif parts[0] == 't':
            triangles.append(tuple(int(s) for s in parts[1:4]))
            ref.append(int(parts[4]))
        else:
            raise ValueError(f"unrecognised mesh line: {raw!r}")
    return Mesh(np.array(vertices), np.array(triangles), np.array(ref), domain=domain, generation=generation)
