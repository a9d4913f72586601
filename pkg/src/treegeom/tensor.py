"""Dense tensor primitives: matricization, mode operators, SVD, matrix exponential.

Conventions used throughout the package:

* A tensor of order ``d`` is a ``numpy.ndarray`` with ``d`` axes; its modes are
  labelled ``1..d`` and its flat layout is row-major (C order).
* A mode subset is a sorted tuple of mode labels, e.g. ``(2, 3)``.
* All spaces carry the Euclidean/Frobenius inner product.  Every routine here
  is a pure function of its inputs; arrays are treated as immutable.

The matricization ``matricize(v, alpha)`` has rows indexed by the multi-indices
of the modes in ``alpha`` (row-major over the sorted subset) and columns by the
multi-indices of the remaining modes, also row-major.  This fixes the bijection
between a tensor and each of its unfoldings.
"""

from __future__ import annotations

import json
import struct
from math import prod
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError, ParseError

__all__ = [
    "normalize_modes",
    "matricize",
    "apply_mode_operator",
    "tensor_product",
    "svd",
    "svd_rank",
    "matrix_exp",
    "embed_block_operator",
    "block_transpose_permutation",
    "check_tensor",
    "load_tensor",
    "save_tensor",
]


def check_tensor(v, allow_zero=True):
    """Validate a dense tensor and return it as a float array."""
    v = np.asarray(v, dtype=float)
    if v.ndim < 1:
        raise InvalidArgumentError("tensor must have at least one mode")
    if any(n < 1 for n in v.shape):
        raise InvalidArgumentError(f"all mode sizes must be positive, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError("tensor entries must be finite")
    if not allow_zero and not np.any(v):
        raise DegenerateInputError("tensor is identically zero")
    return v


def normalize_modes(alpha, ndim):
    """Canonicalize a mode subset: sorted tuple, nonempty, within 1..ndim."""
    alpha = tuple(sorted(set(int(a) for a in alpha)))
    if not alpha:
        raise InvalidArgumentError("mode subset must be nonempty")
    if alpha[0] < 1 or alpha[-1] > ndim:
        raise InvalidArgumentError(
            f"mode subset {alpha} not contained in 1..{ndim}"
        )
    return alpha


def complement_modes(alpha, ndim):
    """Modes of 1..ndim not in alpha, sorted."""
    rest = tuple(m for m in range(1, ndim + 1) if m not in set(alpha))
    return rest


def matricize(v, alpha):
    """Unfold ``v`` into a matrix with the modes of ``alpha`` as row index.

    Rows run over the multi-indices of ``alpha`` (sorted, row-major), columns
    over the remaining modes.  ``alpha`` equal to all modes yields a column
    vector.  The entries are a permutation of the entries of ``v`` and the
    Frobenius norm is preserved.
    """
    v = check_tensor(v)
    alpha = normalize_modes(alpha, v.ndim)
    row_axes = [a - 1 for a in alpha]
    col_axes = [m - 1 for m in complement_modes(alpha, v.ndim)]
    rows = prod(v.shape[i] for i in row_axes)
    return np.transpose(v, row_axes + col_axes).reshape(rows, -1)


def _check_partition(partition, ndim):
    blocks = [normalize_modes(b, ndim) for b in partition]
    seen = set()
    for b in blocks:
        if seen & set(b):
            raise InvalidArgumentError(f"partition blocks overlap at {seen & set(b)}")
        seen |= set(b)
    if seen != set(range(1, ndim + 1)):
        raise InvalidArgumentError(
            f"partition {blocks} does not cover modes 1..{ndim}"
        )
    return tuple(sorted(blocks, key=lambda b: b[0]))


def apply_mode_operator(A, alpha, partition, v):
    """Apply ``A`` on the mode block ``alpha`` of ``v``, identity elsewhere.

    ``partition`` must be a partition of the modes containing ``alpha``; it
    documents with respect to which block structure the identity factors act
    (the result does not depend on how the complement is partitioned).

    If ``A`` is square the output has the shape of ``v``.  Otherwise the
    block ``alpha`` is replaced by a single fused mode of size ``A.shape[0]``
    located at the position of ``min(alpha)``.
    """
    v = check_tensor(v)
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise InvalidArgumentError("operator must be a matrix")
    alpha = normalize_modes(alpha, v.ndim)
    blocks = _check_partition(partition, v.ndim)
    if alpha not in blocks:
        raise InvalidArgumentError(f"partition does not contain block {alpha}")
    M = matricize(v, alpha)
    if A.shape[1] != M.shape[0]:
        raise InvalidArgumentError(
            f"operator has {A.shape[1]} columns, block {alpha} has size {M.shape[0]}"
        )
    Y = A @ M
    row_axes = [a - 1 for a in alpha]
    rest = complement_modes(alpha, v.ndim)
    col_axes = [m - 1 for m in rest]
    if A.shape[0] == M.shape[0]:
        dims = [v.shape[i] for i in row_axes] + [v.shape[i] for i in col_axes]
        out = Y.reshape(dims)
        inv = np.argsort(row_axes + col_axes)
        return np.ascontiguousarray(np.transpose(out, inv))
    # fused output block
    out = Y.reshape([A.shape[0]] + [v.shape[i] for i in col_axes])
    pos = sum(1 for m in rest if m < alpha[0])
    order = [1 + i for i in range(pos)] + [0] + [1 + i for i in range(pos, len(rest))]
    return np.ascontiguousarray(np.transpose(out, order))


def tensor_product(factors):
    """Outer product of a list of tensors; shapes concatenate."""
    if not factors:
        raise InvalidArgumentError("tensor_product needs at least one factor")
    factors = [check_tensor(f) for f in factors]
    out = factors[0]
    for f in factors[1:]:
        out = np.tensordot(out, f, axes=0)
    return out


def _fix_signs(U, Vt=None):
    """Deterministic SVD signs: in each left singular vector the entry of
    largest magnitude is made nonnegative (ties break at the lowest index)."""
    U = U.copy()
    Vt = None if Vt is None else Vt.copy()
    for j in range(U.shape[1]):
        col = U[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            U[:, j] = -col
            if Vt is not None and j < Vt.shape[0]:
                Vt[j, :] = -Vt[j, :]
    return U if Vt is None else (U, Vt)


def svd(M, full_matrices=False):
    """Singular value decomposition with a deterministic sign convention.

    Returns ``(U, s, Vt)`` with ``M = U @ diag(s) @ Vt``; singular values are
    nonincreasing and in each column of ``U`` the largest-magnitude entry is
    nonnegative.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidArgumentError("svd expects a matrix")
    if not np.all(np.isfinite(M)):
        raise InvalidArgumentError("svd input has non-finite entries")
    U, s, Vt = np.linalg.svd(M, full_matrices=full_matrices)
    U, Vt = _fix_signs(U, Vt)
    return U, s, Vt


def svd_rank(s, tol=None, shape=None):
    """Number of singular values above the rank tolerance.

    ``tol`` is relative to the largest singular value.  When ``tol`` is None
    the machine default ``max(rows, cols) * eps`` is used (``shape`` required).
    """
    s = np.asarray(s, dtype=float)
    if s.size == 0 or s[0] == 0.0:
        return 0
    if tol is None:
        if shape is None:
            raise InvalidArgumentError("svd_rank needs a tolerance or a shape")
        tol = max(shape) * np.finfo(float).eps
    return int(np.sum(s > tol * s[0]))


def matrix_exp(A, terms=24):
    """Matrix exponential by scaling and squaring of a truncated series.

    The argument is halved until its Frobenius norm is at most 1/2, the
    exponential of the scaled matrix is summed as a Taylor series, and the
    result is repeatedly squared.  Accuracy is well below 1e-12 relative for
    norms up to ~10, which is the regime this package operates in.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError("matrix_exp expects a square matrix")
    if not np.all(np.isfinite(A)):
        raise InvalidArgumentError("matrix_exp input has non-finite entries")
    n = A.shape[0]
    nrm = np.linalg.norm(A)
    squarings = 0
    if nrm > 0.5:
        squarings = int(np.ceil(np.log2(nrm / 0.5)))
    B = A / (2.0 ** squarings)
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms + 1):
        term = term @ B / k
        E = E + term
    for _ in range(squarings):
        E = E @ E
    return E


def block_transpose_permutation(shape, alpha):
    """Flat-index permutation moving the modes of ``alpha`` in front.

    Returns ``perm`` such that ``x.ravel()[perm]`` is the flattening of ``x``
    with mode order ``sorted(alpha) + rest``.
    """
    d = len(shape)
    alpha = normalize_modes(alpha, d)
    axes = [a - 1 for a in alpha] + [m - 1 for m in complement_modes(alpha, d)]
    n = prod(shape)
    return np.transpose(np.arange(n).reshape(shape), axes).ravel()


def embed_block_operator(M, alpha, shape):
    """Dense operator acting as ``M`` on the mode block ``alpha`` of a tensor
    with the given shape and as identity on all other modes.

    The result is the full matrix on the flattened tensor space, i.e. the
    Kronecker embedding of ``M`` conjugated by the mode permutation that
    groups ``alpha`` in front.
    """
    M = np.asarray(M, dtype=float)
    d = len(shape)
    alpha = normalize_modes(alpha, d)
    n_alpha = prod(shape[a - 1] for a in alpha)
    if M.shape != (n_alpha, n_alpha):
        raise InvalidArgumentError(
            f"block operator must be {n_alpha}x{n_alpha} for block {alpha}"
        )
    n_rest = prod(shape) // n_alpha
    K = np.kron(M, np.eye(n_rest))
    perm = block_transpose_permutation(shape, alpha)
    inv = np.argsort(perm)
    return K[np.ix_(inv, inv)]


# ---------------------------------------------------------------------------
# Tensor file formats.  JSON: {"shape": [...], "data": [... row-major ...]}.
# Binary: 8-byte little-endian unsigned order d, then d 8-byte little-endian
# dimensions, then IEEE-754 little-endian doubles in row-major order.
# ---------------------------------------------------------------------------


def save_tensor(path, v):
    """Write a tensor; JSON if the suffix is .json, binary otherwise."""
    v = check_tensor(v)
    path = Path(path)
    if path.suffix == ".json":
        doc = {"shape": list(v.shape), "data": [float(x) for x in v.ravel()]}
        path.write_text(json.dumps(doc))
    else:
        d = v.ndim
        header = struct.pack("<Q", d) + struct.pack(f"<{d}Q", *v.shape)
        path.write_bytes(header + v.astype("<f8").tobytes(order="C"))


def _tensor_from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid tensor JSON: {e}") from e
    if not isinstance(doc, dict) or "shape" not in doc or "data" not in doc:
        raise ParseError("tensor JSON must be an object with 'shape' and 'data'")
    shape = doc["shape"]
    data = doc["data"]
    if not shape or any(not isinstance(n, int) or n < 1 for n in shape):
        raise ParseError(f"invalid tensor shape {shape}")
    if len(data) != prod(shape):
        raise ParseError(
            f"data length {len(data)} does not match shape {shape}"
        )
    return check_tensor(np.asarray(data, dtype=float).reshape(shape))


def _tensor_from_binary(raw):
    if len(raw) < 8:
        raise ParseError("binary tensor file too short")
    (d,) = struct.unpack("<Q", raw[:8])
    if d < 1 or d > 64:
        raise ParseError(f"implausible tensor order {d}")
    need = 8 + 8 * d
    if len(raw) < need:
        raise ParseError("binary tensor file truncated in header")
    shape = struct.unpack(f"<{d}Q", raw[8:need])
    if any(n < 1 for n in shape):
        raise ParseError(f"invalid tensor shape {shape}")
    count = prod(shape)
    if len(raw) != need + 8 * count:
        raise ParseError("binary tensor payload size mismatch")
    data = np.frombuffer(raw[need:], dtype="<f8", count=count)
    return check_tensor(data.reshape(shape).astype(float))


def load_tensor(path):
    """Read a tensor file, auto-detecting the JSON and binary formats."""
    raw = Path(path).read_bytes()
    if raw[:1] in (b"{", b" ", b"\n", b"\t"):
        return _tensor_from_json(raw.decode("utf-8"))
    try:
        return _tensor_from_binary(raw)
    except ParseError as binary_error:
        # fall back in case of a JSON file with unusual leading bytes
        try:
            return _tensor_from_json(raw.decode("utf-8"))
        except (UnicodeDecodeError, ParseError):
            raise binary_error from None
