"""Minimal subspaces, tree-based ranks, and the nesting relations among them.

The minimal subspace of a nonzero tensor at a mode subset is realized as the
column space of its unfolding, represented by the left singular vectors whose
singular values exceed a relative tolerance.  Subspaces are points on a
Grassmannian and have no canonical basis; the deterministic SVD sign
convention of :mod:`treegeom.tensor` makes the returned bases reproducible.

Rank decisions are approximate by nature in floating point: every function
takes a relative tolerance (default ``1e-10``) applied to the largest
singular value.  The zero tensor is rejected rather than assigned rank zero,
since rank tuples are required to be positive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, ParseError
from .tensor import (
    apply_mode_operator,
    check_tensor,
    matricize,
    normalize_modes,
    svd,
)

__all__ = [
    "DEFAULT_TOL",
    "SubspaceBasis",
    "TreeRank",
    "minimal_subspace",
    "tree_rank",
    "bundle_projection",
    "check_nestedness",
    "check_chain",
    "ranks_to_json",
    "ranks_from_json",
]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal basis of a minimal subspace at a mode subset.

    ``basis`` has shape (ambient, rank) where ambient is the product of the
    mode sizes in ``alpha``; ``singular_values`` are the retained values of
    the unfolding, nonincreasing.
    """

    alpha: tuple
    basis: np.ndarray
    singular_values: np.ndarray
    tol: float

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def rank(self):
        return self.basis.shape[1]


@dataclass(frozen=True)
class TreeRank:
    """Rank tuple indexed by the nodes of a dimension tree."""

    ranks: dict

    def __post_init__(self):
        object.__setattr__(
            self,
            "ranks",
            {tuple(sorted(k)): int(v) for k, v in self.ranks.items()},
        )

    def __getitem__(self, node):
        return self.ranks[tuple(sorted(node))]

    def __contains__(self, node):
        return tuple(sorted(node)) in self.ranks

    def nodes(self):
        return set(self.ranks)

    def __eq__(self, other):
        if isinstance(other, TreeRank):
            return self.ranks == other.ranks
        return NotImplemented

    def items(self):
        return sorted(self.ranks.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def __repr__(self):
        body = ", ".join(f"{set(k)}: {v}" for k, v in self.items())
        return f"TreeRank({{{body}}})"


def minimal_subspace(v, alpha, tol=DEFAULT_TOL):
    """Orthonormal basis of the minimal subspace of ``v`` at ``alpha``.

    Retains the left singular vectors of the unfolding whose singular values
    exceed ``tol`` times the largest one.
    """
    v = check_tensor(v, allow_zero=False)
    if tol <= 0:
        raise InvalidArgumentError("rank tolerance must be positive")
    alpha = normalize_modes(alpha, v.ndim)
    U, s, _ = svd(matricize(v, alpha))
    r = int(np.sum(s > tol * s[0]))
    return SubspaceBasis(
        alpha=alpha, basis=U[:, :r], singular_values=s[:r], tol=tol
    )


def tree_rank(v, tree, tol=DEFAULT_TOL):
    """Tree-based rank: minimal subspace dimensions at every tree node."""
    v = check_tensor(v, allow_zero=False)
    tree.ensure_valid()
    if tree.ndim != v.ndim:
        raise InvalidArgumentError(
            f"tree has {tree.ndim} modes, tensor has {v.ndim}"
        )
    ranks = {}
    for node in tree.nodes:
        ranks[node] = minimal_subspace(v, node, tol).rank
    return TreeRank(ranks)


def bundle_projection(v, partition, tol=DEFAULT_TOL):
    """Minimal subspaces at every block of a partition, in block order."""
    v = check_tensor(v, allow_zero=False)
    blocks = sorted(
        (normalize_modes(b, v.ndim) for b in partition), key=lambda b: b[0]
    )
    covered = [m for b in blocks for m in b]
    if sorted(covered) != list(range(1, v.ndim + 1)):
        raise InvalidArgumentError(f"{blocks} is not a partition of the modes")
    return [minimal_subspace(v, b, tol) for b in blocks]


def _project_block_tensor(t, positions, basis):
    """Project the fused mode block at 1-based ``positions`` of ``t`` onto
    the span of ``basis`` (orthonormal columns)."""
    P = basis @ basis.T
    sub_partition = [positions] + [
        (m,) for m in range(1, t.ndim + 1) if m not in set(positions)
    ]
    return apply_mode_operator(P, positions, sub_partition, t)


def check_nestedness(v, alpha, sub_partition, tol=DEFAULT_TOL):
    """Residual of the minimal subspace at ``alpha`` against the tensor
    product of the minimal subspaces of a sub-partition of ``alpha``.

    Returns the Frobenius norm of the component of the ``alpha`` basis lying
    outside the product of the finer subspaces; the nesting relation says
    this vanishes, so the residual is numerical noise for exact-rank inputs.
    """
    v = check_tensor(v, allow_zero=False)
    alpha = normalize_modes(alpha, v.ndim)
    blocks = sorted(
        (normalize_modes(b, v.ndim) for b in sub_partition), key=lambda b: b[0]
    )
    covered = [m for b in blocks for m in b]
    if sorted(covered) != list(alpha):
        raise InvalidArgumentError(
            f"{blocks} is not a partition of {alpha}"
        )
    big = minimal_subspace(v, alpha, tol)
    alpha_dims = tuple(v.shape[a - 1] for a in alpha)
    # positions of each block's modes inside the sorted alpha (1-based)
    local = {m: i + 1 for i, m in enumerate(alpha)}
    residual_sq = 0.0
    fine = {b: minimal_subspace(v, b, tol) for b in blocks}
    for col in big.basis.T:
        t = col.reshape(alpha_dims)
        proj = t
        for b in blocks:
            positions = tuple(local[m] for m in b)
            proj = _project_block_tensor(proj, positions, fine[b].basis)
        residual_sq += float(np.sum((t - proj) ** 2))
    return float(np.sqrt(residual_sq))


def check_chain(v, tree, tol=DEFAULT_TOL):
    """Per-level residuals of ``v`` against the product of its minimal
    subspaces over each level partition.

    Returns a dict mapping level k to the norm of the component of ``v``
    outside the tensor product of the level-k minimal subspaces.  All
    residuals are numerical noise: the chain of inclusions holds for every
    tensor.
    """
    from .trees import level_partition, levels

    v = check_tensor(v, allow_zero=False)
    tree.ensure_valid()
    depth = levels(tree).depth
    residuals = {}
    for k in range(1, depth + 1):
        blocks = level_partition(tree, k)
        proj = v
        for b in blocks:
            basis = minimal_subspace(v, b, tol).basis
            proj = _project_block_tensor(
                proj, b, basis
            )
        residuals[k] = float(np.linalg.norm(v - proj))
    return residuals


# ---------------------------------------------------------------------------
# Rank tuple JSON: {"ranks": [{"block": [...], "r": k}, ...]}
# ---------------------------------------------------------------------------


def ranks_to_json(r):
    entries = [{"block": list(node), "r": val} for node, val in r.items()]
    return json.dumps({"ranks": entries})


def ranks_from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid rank JSON: {e}") from e
    if not isinstance(doc, dict) or "ranks" not in doc:
        raise ParseError("rank JSON must be an object with a 'ranks' list")
    ranks = {}
    for entry in doc["ranks"]:
        if (
            not isinstance(entry, dict)
            or "block" not in entry
            or "r" not in entry
        ):
            raise ParseError(f"invalid rank entry {entry!r}")
        block = tuple(sorted(entry["block"]))
        val = entry["r"]
        if not isinstance(val, int) or val < 1:
            raise ParseError(f"rank for block {list(block)} must be a positive integer")
        if block in ranks:
            raise ParseError(f"duplicate rank entry for block {list(block)}")
        ranks[block] = val
    return TreeRank(ranks)
