"""Scatter element contributions into global sparse arrays.

Local-to-global maps use -1 for constrained (boundary) degrees of freedom;
those entries are dropped.
"""

import numpy as np
from scipy import sparse


def assemble_matrix(local: np.ndarray, rows: np.ndarray, cols: np.ndarray, shape) -> sparse.csr_matrix:
    """Sum local blocks (m, r, c) with maps rows (m, r), cols (m, c)."""
    R = np.broadcast_to(rows[:, :, None], local.shape)
    C = np.broadcast_to(cols[:, None, :], local.shape)
    keep = (R >= 0) & (C >= 0)
    A = sparse.coo_matrix((local[keep], (R[keep], C[keep])), shape=shape)
    return A.tocsr()


def assemble_vector(local: np.ndarray, rows: np.ndarray, size: int) -> np.ndarray:
    keep = rows >= 0
    return np.bincount(rows[keep], weights=local[keep], minlength=size)


def gather(x: np.ndarray, l2g: np.ndarray) -> np.ndarray:
    """Local coefficient values x[l2g] with zeros on constrained entries."""
    extended = np.append(np.asarray(x, dtype=float), 0.0)
    return extended[l2g]


def chunks(n: int, size: int):
    for start in range(0, n, size):
        yield slice(start, min(start + size, n))
