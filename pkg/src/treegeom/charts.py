"""Local charts for fixed-rank sets: a Laplacian-like operator plus a core.

A point near an anchor with the same rank profile is written as the
exponential of a Laplacian-like operator applied to a full-rank coefficient
core expressed in the anchor's minimal subspaces.  The exponential factors
block by block into ``I + part``, so the forward map is a sequence of
block-operator applications; the inverse reads each block map off the graph
that the point's minimal subspace forms over the anchor's.

For a tree, the operator lives in the intersection of the level operator
spaces and the core in the level-1 subspace product; the forward and inverse
maps can be evaluated through any level partition and agree across levels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidCoreError,
    NotOnManifoldError,
    OutsideChartDomainError,
    OutsideChartImageError,
)
from .formats import _structurally_implied, is_member
from .operators import (
    LaplacianLike,
    assemble_laplacian,
    decompose_laplacian,
    lifted_part,
    split,
)
from .subspaces import DEFAULT_TOL, minimal_subspace
from .tangent import (
    OperatorSpaceBasis,
    intersect_operator_spaces,
    level_operator_basis,
)
from .tensor import apply_mode_operator, check_tensor
from .trees import level_partition, levels

__all__ = [
    "ChartData",
    "tucker_chart_point",
    "tucker_chart_inverse",
    "tree_chart",
    "tree_chart_point",
    "tree_chart_inverse",
    "level_inverse_operator",
]

GRAPH_CONDITION_LIMIT = 1e8


def _sorted_blocks(partition):
    return tuple(sorted((tuple(sorted(b)) for b in partition),
                        key=lambda b: b[0]))


def _apply_block_maps(t_core, mats, blocks, shape):
    """Contract a block-indexed core with one ambient matrix per block and
    reorder the unfused modes back to 1..d."""
    t = t_core
    for M in mats:
        t = np.tensordot(t, M, axes=([0], [1]))
    dims = [shape[m - 1] for b in blocks for m in b]
    modes = [m for b in blocks for m in b]
    t = t.reshape(dims)
    return np.ascontiguousarray(np.transpose(t, np.argsort(modes)))


def _extract_core(w, mats, blocks, shape):
    """Coefficients of ``w`` against one ambient basis matrix per block:
    fuse the modes block by block in block order, then contract."""
    order = [m - 1 for b in blocks for m in b]
    t = np.transpose(w, order).reshape([
        prod(shape[m - 1] for m in b) for b in blocks
    ])
    for M in mats:
        t = np.tensordot(t, M, axes=([0], [0]))
    return t


def _check_full_core(core, blocks, ranks, tol):
    """A chart core must have full blockwise rank: every mode unfolding of
    the core tensor has rank equal to the block rank."""
    core = np.asarray(core, dtype=float)
    if core.shape != tuple(ranks):
        raise InvalidArgumentError(
            f"core has shape {core.shape}, expected {tuple(ranks)}"
        )
    if not np.any(core):
        raise InvalidCoreError("core is identically zero")
    for i, b in enumerate(blocks):
        M = np.moveaxis(core, i, 0).reshape(core.shape[i], -1)
        s = np.linalg.svd(M, compute_uv=False)
        r = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
        if r != ranks[i]:
            raise InvalidCoreError(
                f"core is rank-deficient on block {set(b)}: "
                f"rank {r} < {ranks[i]}"
            )
    return core


def tucker_chart_point(L, core, splits, shape, tol=DEFAULT_TOL):
    """Forward chart over one partition: lift the core through the split
    bases and apply the blockwise exponential factors.

    Equivalent to applying the dense exponential of the assembled operator,
    but evaluated structurally as one ``basis + complement @ coefficients``
    matrix per block.  The output has the same blockwise ranks as the core.
    """
    blocks = L.partition
    ranks = [splits[b].rank for b in blocks]
    core = _check_full_core(core, blocks, ranks, tol)
    mats = [
        splits[b].u + splits[b].w @ L.parts[b] for b in blocks
    ]
    return _apply_block_maps(core, mats, blocks, shape)


def tucker_chart_inverse(w, partition, splits, ranks, tol=DEFAULT_TOL):
    """Inverse chart over one partition.

    For each block, an orthonormal basis of the point's minimal subspace is
    written as a graph over the anchor's: with ``A`` the component along the
    anchor subspace and ``G`` the component along the complement, the block
    coefficients are ``G A^{-1}``.  The core is the point pulled back by the
    inverse exponential factors and expressed in the anchor bases.

    Raises when the point's blockwise ranks differ from the prescribed ones
    (not on the manifold) or when some ``A`` is numerically singular (the
    point is outside this chart's domain).
    """
    w = check_tensor(w, allow_zero=False)
    blocks = _sorted_blocks(partition)
    parts = {}
    for b in blocks:
        s = splits[b]
        sub = minimal_subspace(w, b, tol)
        if sub.rank != ranks[b]:
            raise NotOnManifoldError(
                f"block {set(b)} has rank {sub.rank}, expected {ranks[b]}"
            )
        A = s.u.T @ sub.basis
        # columns of the point's basis are unit vectors, so the singular
        # values of A lie in [0, 1]; the graph over the anchor subspace is
        # well conditioned iff the smallest one stays away from zero
        sv = np.linalg.svd(A, compute_uv=False)
        sigma_min = sv[-1] if sv.size else 0.0
        if sigma_min <= 1.0 / GRAPH_CONDITION_LIMIT:
            cond = 1.0 / sigma_min if sigma_min > 0 else float("inf")
            raise OutsideChartDomainError(b, cond)
        G = s.w.T @ sub.basis
        parts[b] = np.linalg.solve(A.T, G.T).T
    L = LaplacianLike(partition=blocks, parts=parts)
    # pull back through the inverse factors (each part squares to zero, so
    # the inverse of I + part is I - part), then project onto the bases
    pulled = w
    for b in blocks:
        s = splits[b]
        op = np.eye(s.ambient_dim) - lifted_part(s, parts[b])
        sub_partition = [b] + [
            (m,) for m in range(1, w.ndim + 1) if m not in set(b)
        ]
        pulled = apply_mode_operator(op, b, sub_partition, pulled)
    core = _extract_core(pulled, [splits[b].u for b in blocks], blocks, w.shape)
    return L, core


@dataclass(frozen=True, eq=False)
class ChartData:
    """Everything anchored at one point of a fixed tree-rank set.

    ``splits`` covers every non-root tree node; ``operator_basis`` spans the
    intersection of the level operator spaces; ``core`` holds the anchor's
    coefficients in the level-1 subspace product.  Reconstructing the anchor
    from the core through the level-1 bases reproduces it to roundoff.
    """

    anchor: np.ndarray
    tree: object
    ranks: object
    splits: dict
    level_partitions: tuple
    operator_basis: OperatorSpaceBasis
    core: np.ndarray
    tol: float

    @property
    def shape(self):
        return self.anchor.shape


def tree_chart(v, tree, r, tol=DEFAULT_TOL):
    """Build the chart data anchored at a tensor with rank profile ``r``.

    Requires membership at the given tolerance.  When one level's Tucker
    constraints already imply all node constraints the chart is still built,
    but a warning notes that the fixed-rank set is not proper.
    """
    if tol is None or tol <= 0:
        raise InvalidArgumentError("chart tolerance must be positive")
    v = check_tensor(v, allow_zero=False)
    tree.ensure_valid()
    report = is_member(v, tree, r, tol)
    if not report.member:
        raise NotOnManifoldError(
            f"anchor does not have the prescribed rank profile; failing "
            f"levels {report.failing_levels()}"
        )
    depth = levels(tree).depth
    partitions = tuple(level_partition(tree, k) for k in range(1, depth + 1))
    if depth == 1 or any(
        _structurally_implied(tree, r, k) for k in range(1, depth + 1)
    ):
        warnings.warn(
            "fixed-rank set is not proper: some level set already equals it",
            stacklevel=2,
        )
    splits = {
        node: split(v, node, tol) for node in tree.nodes if node != tree.root
    }
    bases = [
        level_operator_basis(p, splits, v.shape, label=f"level-{k + 1}")
        for k, p in enumerate(partitions)
    ]
    operator_basis = intersect_operator_spaces(bases, tol)
    core = _extract_core(
        v, [splits[b].u for b in partitions[0]], partitions[0], v.shape
    )
    return ChartData(
        anchor=v, tree=tree, ranks=r, splits=splits,
        level_partitions=partitions, operator_basis=operator_basis,
        core=core, tol=tol,
    )


def _lift_level1(chart, core):
    blocks = chart.level_partitions[0]
    return _apply_block_maps(
        core, [chart.splits[b].u for b in blocks], blocks, chart.shape
    )


def _check_core_in_domain(chart, core):
    """The core must keep full rank at every level when lifted through the
    anchor subspaces; otherwise the image leaves the fixed-rank set."""
    blocks = chart.level_partitions[0]
    ranks = [chart.splits[b].rank for b in blocks]
    core = _check_full_core(core, blocks, ranks, chart.tol)
    lifted = _lift_level1(chart, core)
    report = is_member(lifted, chart.tree, chart.ranks, chart.tol)
    if not report.member:
        raise InvalidCoreError(
            "core loses rank at levels "
            f"{report.failing_levels()} when lifted through the anchor bases"
        )
    return core, lifted


def tree_chart_point(chart, operator_coords, core):
    """Forward tree chart: assemble the operator from its coordinates in the
    intersection basis, split it at level 1, and push the lifted core through
    the blockwise exponential factors.  The result keeps the anchor's rank
    profile."""
    core, _ = _check_core_in_domain(chart, core)
    blocks = chart.level_partitions[0]
    Lop = chart.operator_basis.operator(operator_coords)
    L1 = decompose_laplacian(
        Lop, blocks, chart.splits, chart.shape, tol=max(chart.tol, 1e-9)
    )
    mats = [
        chart.splits[b].u + chart.splits[b].w @ L1.parts[b] for b in blocks
    ]
    return _apply_block_maps(core, mats, blocks, chart.shape)


def level_inverse_operator(chart, w, k, tol=None):
    """Dense operator recovered by the inverse chart at level ``k``.

    For a point in the chart's image the recovered operator is the same at
    every level, up to roundoff; comparing levels is a consistency check.
    """
    tol = chart.tol if tol is None else tol
    blocks = chart.level_partitions[k - 1]
    ranks = {b: chart.ranks[b] for b in blocks}
    L, _ = tucker_chart_inverse(
        w, blocks, chart.splits, ranks, tol
    )
    return assemble_laplacian(L, chart.splits, chart.shape)


def tree_chart_inverse(chart, w, tol=None):
    """Inverse tree chart: coordinates in the intersection basis plus core.

    The operator is recovered from the deepest level (the leaf partition),
    projected onto the intersection basis, and the projection residual is
    required to be numerical noise; a genuine residual means the point is not
    in this chart's image and the failing level is identified by comparing
    against each level space.  The core is the pulled-back point in the
    level-1 bases, checked to be full rank at every level.
    """
    tol = chart.tol if tol is None else tol
    w = check_tensor(w, allow_zero=False)
    depth = len(chart.level_partitions)
    membership = is_member(w, chart.tree, chart.ranks, tol)
    if not membership.member:
        raise OutsideChartImageError(
            "point does not have the anchor's rank profile; failing levels "
            f"{membership.failing_levels()}",
            level=(membership.failing_levels() or [None])[0],
        )
    leaf_blocks = chart.level_partitions[-1]
    ranks = {b: chart.ranks[b] for b in leaf_blocks}
    L_leaf, _ = tucker_chart_inverse(
        w, leaf_blocks, chart.splits, ranks, tol
    )
    Lop = assemble_laplacian(L_leaf, chart.splits, chart.shape)
    coords, residual = chart.operator_basis.coordinates(Lop)
    nrm = np.linalg.norm(Lop)
    if residual > max(1e-8, tol) * max(nrm, 1e-300) and nrm > 0:
        # identify the first level whose operator space misses the operator
        failing = None
        level_resid = residual
        for k in range(1, depth + 1):
            basis_k = level_operator_basis(
                chart.level_partitions[k - 1], chart.splits, chart.shape
            )
            _, res_k = basis_k.coordinates(Lop)
            if res_k > max(1e-8, tol) * nrm:
                failing = k
                level_resid = res_k
                break
        raise OutsideChartImageError(
            "recovered operator is outside the chart's operator space"
            + (f"; level {failing} rejects it" if failing else ""),
            level=failing, residual=level_resid,
        )
    blocks = chart.level_partitions[0]
    L1 = decompose_laplacian(
        Lop, blocks, chart.splits, chart.shape, tol=max(tol, 1e-8)
    )
    pulled = w
    for b in blocks:
        s = chart.splits[b]
        op = np.eye(s.ambient_dim) - lifted_part(s, L1.parts[b])
        sub_partition = [b] + [
            (m,) for m in range(1, w.ndim + 1) if m not in set(b)
        ]
        pulled = apply_mode_operator(op, b, sub_partition, pulled)
    core = _extract_core(
        pulled, [chart.splits[b].u for b in blocks], blocks, chart.shape
    )
    try:
        _check_core_in_domain(chart, core)
    except InvalidCoreError as e:
        raise OutsideChartImageError(
            f"pulled-back core is outside the chart's core set: {e}",
        ) from e
    # the chart image need not cover a whole rank-profile neighborhood, so
    # the recovered pair is verified to actually reproduce the point
    w_rec = tree_chart_point(chart, coords, core)
    rec_err = float(np.linalg.norm(w_rec - w))
    if rec_err > max(tol, 1e-8) * np.linalg.norm(w):
        raise OutsideChartImageError(
            "recovered coordinates do not reproduce the point "
            f"(relative error {rec_err / np.linalg.norm(w):.3e}); the point "
            "is outside this chart's image",
            residual=rec_err,
        )
    return coords, core
