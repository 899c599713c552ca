"""
Quadrature rules on triangles and edges.

All rules are conical (collapsed) product rules: Gauss-Jacobi in the
radial direction towards an apex, Gauss-Legendre across. A rule of
degree d integrates polynomials of total degree d exactly, and putting
the apex on a singular vertex absorbs an r^(-1) type singularity.

Macro-triangle reference coordinates: vertices (0,0), (1,0), (0,1) and
centroid (1/3, 1/3). Sub-triangle k of the centroid split is
(P_{k+1}, P_{k+2}, c); it contains local edge k.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

REF_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
REF_CENTROID = np.array([1.0 / 3.0, 1.0 / 3.0])
SUB_TRIANGLES = np.array([
    [REF_VERTICES[(k + 1) % 3], REF_VERTICES[(k + 2) % 3], REF_CENTROID]
    for k in range(3)
])


def points_needed(degree: int) -> int:
    return max(degree, 0) // 2 + 1


@lru_cache(maxsize=None)
def gauss_legendre_01(n: int):
    """n-point Gauss-Legendre rule on [0, 1] (weights sum to 1)."""
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def _radial(n: int):
    # weight s on [0, 1]
    x, w = roots_jacobi(n, 0.0, 1.0)
    return (x + 1.0) / 2.0, w / 4.0


def collapsed_rule(corners: np.ndarray, degree: int, apex: int = 0):
    """Conical rule on the triangle `corners` (3, 2) collapsed at corners[apex].

    Returns points (n*n, 2) and weights (n*n,) summing to the triangle area.
    """
    corners = np.asarray(corners, dtype=float)
    a = corners[apex]
    b = corners[(apex + 1) % 3]
    c = corners[(apex + 2) % 3]
    n = points_needed(degree)
    s, ws = _radial(n)
    t, wt = gauss_legendre_01(n)
    S, T = np.meshgrid(s, t, indexing='ij')
    W = np.outer(ws, wt)
    pts = a + S[..., None] * ((b - a) + T[..., None] * (c - b))
    area2 = abs((b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0])
    return pts.reshape(-1, 2), (area2 * W).reshape(-1)


@lru_cache(maxsize=None)
def split_rule(degree: int):
    """Rule on the 3 centroid sub-triangles of the reference macro triangle.

    Returns points (3, nq, 2) and weights (3, nq); sub-triangle k uses
    piece k. Weights over all pieces sum to 1/2.
    """
    pts, wts = [], []
    for k in range(3):
        p, w = collapsed_rule(SUB_TRIANGLES[k], degree, apex=2)
        pts.append(p)
        wts.append(w)
    pts, wts = np.array(pts), np.array(wts)
    pts.setflags(write=False)
    wts.setflags(write=False)
    return pts, wts


def singular_split_rule(degree: int, vertex: int):
    """Split rule whose sub-triangles touching reference vertex `vertex` collapse there."""
    pts, wts = [], []
    for k in range(3):
        # sub-triangle k has corners P_{k+1}, P_{k+2}, c
        if (k + 1) % 3 == vertex:
            apex = 0
        elif (k + 2) % 3 == vertex:
            apex = 1
        else:
            apex = 2
        p, w = collapsed_rule(SUB_TRIANGLES[k], degree, apex=apex)
        pts.append(p)
        wts.append(w)
    return np.array(pts), np.array(wts)


@lru_cache(maxsize=None)
def lattice(order: int, split: bool):
    """Barycentric lattice of the given order, per piece.

    Returns points (S, nl, 2) with S = 3 on the centroid split, else 1.
    """
    ij = [(i, j) for i in range(order + 1) for j in range(order + 1 - i)]
    bary = np.array([(i / order, j / order, 1.0 - (i + j) / order) for i, j in ij])
    if not split:
        corners = REF_VERTICES[None]
    else:
        corners = SUB_TRIANGLES
    pts = np.einsum('lb,sbd->sld', bary, corners)
    pts.setflags(write=False)
    return pts


def piece_of(ref_points: np.ndarray) -> np.ndarray:
    """Index of the centroid sub-triangle containing each reference point.

    Sub-triangle k is where barycentric coordinate k is the smallest.
    """
    ref_points = np.asarray(ref_points, dtype=float)
    bary = np.stack([
        1.0 - ref_points[..., 0] - ref_points[..., 1],
        ref_points[..., 0],
        ref_points[..., 1],
    ], axis=-1)
    return np.argmin(bary, axis=-1)


def edge_points(k: int, t: np.ndarray, reverse: bool = False) -> np.ndarray:
    """Reference points on local edge k at parameters t in [0, 1], from P_{k+1} to P_{k+2}."""
    start, end = REF_VERTICES[(k + 1) % 3], REF_VERTICES[(k + 2) % 3]
    if reverse:
        start, end = end, start
    t = np.asarray(t, dtype=float)
    return start + t[..., None] * (end - start)
