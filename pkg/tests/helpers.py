"""Independent reference computations used as oracles by the tests.

These deliberately avoid the library's own code paths: ranks via Gaussian
elimination, subspace intersections via full complement projectors, mode
operators via explicit index loops.
"""

from fractions import Fraction
from math import prod

import numpy as np


def gauss_rank_exact(M):
    """Rank over the rationals by fraction-free Gaussian elimination.

    Exact for integer (or rational) matrices; the reference for SVD rank
    decisions on integer test data.
    """
    rows = [[Fraction(x) for x in row] for row in np.asarray(M).tolist()]
    rank = 0
    n_rows = len(rows)
    n_cols = len(rows[0]) if n_rows else 0
    col = 0
    for col in range(n_cols):
        pivot = None
        for i in range(rank, n_rows):
            if rows[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pr = rows[rank]
        for i in range(rank + 1, n_rows):
            if rows[i][col] != 0:
                factor = rows[i][col] / pr[col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], pr)]
        rank += 1
        if rank == n_rows:
            break
    return rank


def gauss_rank_float(M, tol=1e-10):
    """Rank by partially pivoted row reduction with a relative threshold."""
    A = np.array(M, dtype=float)
    if A.size == 0:
        return 0
    scale = np.max(np.abs(A))
    if scale == 0:
        return 0
    n_rows, n_cols = A.shape
    rank = 0
    for col in range(n_cols):
        if rank == n_rows:
            break
        pivot = rank + int(np.argmax(np.abs(A[rank:, col])))
        if abs(A[pivot, col]) <= tol * scale:
            continue
        A[[rank, pivot]] = A[[pivot, rank]]
        A[rank + 1:] -= np.outer(
            A[rank + 1:, col] / A[rank, col], A[rank]
        )
        rank += 1
    return rank


def apply_single_mode_oracle(A, mode, v):
    """Apply a matrix on one mode by explicit index iteration."""
    d = v.ndim
    out_shape = list(v.shape)
    out_shape[mode - 1] = A.shape[0]
    out = np.zeros(out_shape)
    for idx in np.ndindex(*out_shape):
        acc = 0.0
        for k in range(v.shape[mode - 1]):
            src = list(idx)
            src[mode - 1] = k
            acc += A[idx[mode - 1], k] * v[tuple(src)]
        out[idx] = acc
    return out


def intersection_dim_bruteforce(bases, tol=1e-10):
    """Dimension of the intersection of operator spaces via the nullspace of
    the sum of full complement projectors (dense, tiny cases only)."""
    if not bases:
        return 0
    n = bases[0].vectors.shape[0]
    S = np.zeros((n, n))
    for b in bases:
        S += np.eye(n) - b.vectors @ b.vectors.T
    w = np.linalg.eigvalsh(S)
    return int(np.sum(np.abs(w) <= tol * max(1.0, np.max(np.abs(w)))))


def principal_angle_residual(B1, B2):
    """How far two orthonormal bases are from spanning the same space:
    1 minus the smallest singular value of the cross-Gram (0 for equal spans
    of equal dimension)."""
    if B1.shape[1] != B2.shape[1]:
        return 1.0
    if B1.shape[1] == 0:
        return 0.0
    s = np.linalg.svd(B1.T @ B2, compute_uv=False)
    return float(1.0 - s[-1])


def capped_rank_tuple(tree, shape, cap=2):
    """Rank tuple with every non-root rank at min(cap, unfolding bounds);
    valid for the shapes used in the tests (all mode sizes at least 2)."""
    from treegeom.subspaces import TreeRank

    N = prod(shape)
    ranks = {}
    for node in tree.nodes:
        if node == tree.root:
            ranks[node] = 1
            continue
        n_in = prod(shape[m - 1] for m in node)
        ranks[node] = min(cap, n_in, N // n_in)
    return TreeRank(ranks)
