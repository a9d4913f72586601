"""Level operator spaces, their intersection, and tangent dimension checks.

The level-k operator space at a tensor is the direct sum, over the blocks of
the level-k partition, of the maps sending the block's minimal subspace into
its orthogonal complement, tensored with the identity on the other blocks.
Operators are flattened to vectors with the Frobenius inner product, which
fixes the metric used for all bases and projectors here.

The intersection of the level spaces over all levels composes, with the
level-1 core space, the model space of the local charts.  Its dimension is
compared against two independent numbers: a finite-difference Jacobian rank
of the full tree-network parametrization, and a closed-form parameter count.
For depth-1 trees all three agree.  For deeper trees the operator-space
intersection is strictly smaller than the network dimension (interior
subspace motions are not expressible as level-wise complement maps that
vanish on every deeper complement), and the report surfaces the three
numbers side by side instead of reconciling them.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .errors import InvalidArgumentError, NotOnManifoldError
from .formats import is_member
from .operators import split
from .subspaces import DEFAULT_TOL, minimal_subspace
from .tensor import check_tensor, embed_block_operator, svd
from .trees import level_partition, levels

__all__ = [
    "OperatorSpaceBasis",
    "TangentReport",
    "ImmersionReport",
    "level_operator_basis",
    "intersect_operator_spaces",
    "network_dimension_formula",
    "parametrization_jacobian",
    "tangent_dimension_oracle",
    "tangent_dimension",
    "immersion_check",
]


@dataclass(frozen=True, eq=False)
class OperatorSpaceBasis:
    """Orthonormal basis of a space of operators on the full tensor space.

    ``vectors`` has one flattened N*N operator per column.
    """

    label: str
    vectors: np.ndarray

    @property
    def dim(self):
        return self.vectors.shape[1]

    def operator(self, coords):
        """Assemble the dense operator with the given coordinates."""
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.dim,):
            raise InvalidArgumentError(
                f"expected {self.dim} coordinates, got {coords.shape}"
            )
        n = int(round(np.sqrt(self.vectors.shape[0])))
        return (self.vectors @ coords).reshape(n, n)

    def coordinates(self, op):
        """Orthogonal coordinates of a dense operator and the residual norm."""
        vec = np.asarray(op, dtype=float).ravel()
        coords = self.vectors.T @ vec
        residual = float(np.linalg.norm(vec - self.vectors @ coords))
        return coords, residual


def level_operator_basis(partition, splits, shape, label=None):
    """Orthonormal basis of the level operator space for one partition.

    The elementary operators (one complement direction times one subspace
    direction per block, identity elsewhere) are exactly orthogonal across
    and within blocks, so the basis is obtained by normalization alone.  The
    dimension is the sum over blocks of rank times corank.
    """
    N = prod(shape)
    blocks = tuple(sorted((tuple(sorted(b)) for b in partition),
                          key=lambda b: b[0]))
    columns = []
    for b in blocks:
        s = splits[b]
        n_rest = N // s.ambient_dim
        scale = 1.0 / np.sqrt(n_rest)
        for j in range(s.rank):
            for i in range(s.corank):
                E = np.outer(s.w[:, i], s.u[:, j])
                columns.append(
                    embed_block_operator(E, b, shape).ravel() * scale
                )
    vectors = (
        np.column_stack(columns) if columns else np.zeros((N * N, 0))
    )
    return OperatorSpaceBasis(
        label=label or f"level:{blocks}", vectors=vectors
    )


def intersect_operator_spaces(bases, tol=DEFAULT_TOL, label="intersection"):
    """Orthonormal basis of the intersection of operator spaces.

    A vector of the first space lies in the intersection iff the complement
    projector of every other space annihilates it; the intersection is the
    nullspace, at the given tolerance, of those complement projectors
    restricted to the first basis (stacked and read off one SVD).
    """
    if not bases:
        raise InvalidArgumentError("need at least one operator space")
    first = bases[0]
    if len(bases) == 1 or first.dim == 0:
        return OperatorSpaceBasis(label=label, vectors=first.vectors.copy())
    stacked = []
    for other in bases[1:]:
        proj = other.vectors @ (other.vectors.T @ first.vectors)
        stacked.append(first.vectors - proj)
    A = np.vstack(stacked)
    _, s, Vt = svd(A)
    if s.size and s[0] > 0:
        null_mask = np.concatenate([
            s <= tol * s[0], np.ones(Vt.shape[0] - s.size, dtype=bool)
        ])
    else:
        null_mask = np.ones(Vt.shape[0], dtype=bool)
    null_basis = Vt[null_mask].T
    return OperatorSpaceBasis(label=label, vectors=first.vectors @ null_basis)


def _tree_splits(v, tree, tol):
    return {node: split(v, node, tol) for node in tree.nodes
            if node != tree.root}


def network_dimension_formula(tree, r, shape):
    """Closed-form parameter count of the tree network modulo per-node gauge:
    root coefficient block, plus one transfer block per interior node, plus
    the leaf factors, minus one general linear group per non-root node."""
    tree.ensure_valid()
    core = prod(r[b] for b in tree.sons_of(tree.root))
    interior = sum(
        r[node] * prod(r[b] for b in tree.sons_of(node))
        for node in tree.sons
        if node != tree.root
    )
    leaf = sum(shape[node[0] - 1] * r[node] for node in tree.leaves)
    gauge = sum(r[node] ** 2 for node in tree.nodes if node != tree.root)
    return core + interior + leaf - gauge


def _network_parameters(v, tree, tol):
    """Recover a tree-network parameter point reproducing ``v`` exactly:
    per-node orthonormal bases, interior transfer coefficients, root block."""
    from .formats import _son_lift

    shape = v.shape
    bases = {
        node: minimal_subspace(v, node, tol).basis
        for node in tree.nodes
        if node != tree.root
    }
    transfers = {}
    for node in tree.sons:
        G = _son_lift(tree, node, bases, shape)
        if node == tree.root:
            transfers[node] = G.T @ v.ravel()
        else:
            transfers[node] = G.T @ bases[node]
    leaf_factors = {leaf: bases[leaf] for leaf in tree.leaves}
    return leaf_factors, transfers


def _contract_network(tree, shape, leaf_factors, transfers):
    from .formats import _son_lift

    bases = dict(leaf_factors)

    def build(node):
        if len(node) == 1:
            return
        for kid in tree.sons_of(node):
            build(kid)
        if node != tree.root:
            G = _son_lift(tree, node, bases, shape)
            bases[node] = G @ transfers[node]

    for kid in tree.sons_of(tree.root):
        build(kid)
    G = _son_lift(tree, tree.root, bases, shape)
    return (G @ transfers[tree.root]).reshape(shape)


def parametrization_jacobian(v, tree, r, step=1e-6, tol=DEFAULT_TOL):
    """Jacobian of the tree-network parameters-to-tensor map at ``v``.

    The tensor is reproduced exactly by a tree-network parameter point; the
    Jacobian is formed by central finite differences, which are exact up to
    roundoff because the map is multilinear in the parameter blocks.  One
    column per parameter entry (leaf factors, interior transfers, root
    block); rows run over the flattened tensor.
    """
    v = check_tensor(v, allow_zero=False)
    tree.ensure_valid()
    report = is_member(v, tree, r, tol)
    if not report.member:
        raise NotOnManifoldError(
            f"tensor does not have the prescribed rank profile; failing "
            f"levels {report.failing_levels()}"
        )
    v = v / np.linalg.norm(v)
    shape = v.shape
    leaf_factors, transfers = _network_parameters(v, tree, tol)
    v_rec = _contract_network(tree, shape, leaf_factors, transfers)
    rec_err = np.linalg.norm(v_rec - v)
    if rec_err > 1e-8:
        raise NotOnManifoldError(
            f"network parametrization recovery failed (error {rec_err:.3e})"
        )

    blocks = [("leaf", node) for node in sorted(leaf_factors)]
    blocks += [("transfer", node) for node in sorted(transfers)]

    def evaluate():
        return _contract_network(tree, shape, leaf_factors, transfers).ravel()

    columns = []
    for kind, node in blocks:
        store = leaf_factors if kind == "leaf" else transfers
        base = store[node]
        flat = base.ravel()
        for i in range(flat.size):
            bumped = flat.copy()
            bumped[i] += step
            store[node] = bumped.reshape(base.shape)
            f_plus = evaluate()
            bumped[i] -= 2 * step
            store[node] = bumped.reshape(base.shape)
            f_minus = evaluate()
            store[node] = base
            columns.append((f_plus - f_minus) / (2 * step))
    return np.column_stack(columns)


def tangent_dimension_oracle(v, tree, r, step=1e-6, tol=DEFAULT_TOL):
    """Manifold dimension as the numerical rank of the parametrization
    Jacobian, with a rank threshold scaled by the step.  Re-run with
    ``step / 10`` to confirm stability."""
    J = parametrization_jacobian(v, tree, r, step=step, tol=tol)
    s = np.linalg.svd(J, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > step * s[0]))


@dataclass(frozen=True)
class TangentReport:
    """Three independent tangent dimension computations side by side.

    ``dim_total`` is the operator-space intersection dimension plus the
    level-1 core dimension; ``oracle_dim`` the Jacobian rank of the network
    parametrization; ``formula_dim`` the closed-form parameter count.  The
    flag is true only when all three coincide; a gap is reported, never
    hidden.
    """

    dim_e: int
    dim_core: int
    dim_total: int
    oracle_dim: int
    formula_dim: int
    agree: bool

    def to_dict(self):
        return {
            "dim_operator_intersection": self.dim_e,
            "dim_core": self.dim_core,
            "dim_total": self.dim_total,
            "oracle_dim": self.oracle_dim,
            "formula_dim": self.formula_dim,
            "agree": self.agree,
        }


def tangent_dimension(v, tree, r, tol=DEFAULT_TOL, step=1e-6):
    """Tangent report at a tensor with the prescribed rank profile."""
    v = check_tensor(v, allow_zero=False)
    tree.ensure_valid()
    report = is_member(v, tree, r, tol)
    if not report.member:
        raise NotOnManifoldError(
            f"tensor does not have the prescribed rank profile; failing "
            f"levels {report.failing_levels()}"
        )
    shape = v.shape
    depth = levels(tree).depth
    splits = _tree_splits(v, tree, tol)
    bases = [
        level_operator_basis(level_partition(tree, k), splits, shape,
                             label=f"level-{k}")
        for k in range(1, depth + 1)
    ]
    inter = intersect_operator_spaces(bases, tol)
    dim_core = prod(r[b] for b in level_partition(tree, 1))
    dim_total = inter.dim + dim_core
    oracle = tangent_dimension_oracle(v, tree, r, step=step, tol=tol)
    formula = network_dimension_formula(tree, r, shape)
    return TangentReport(
        dim_e=inter.dim,
        dim_core=dim_core,
        dim_total=dim_total,
        oracle_dim=oracle,
        formula_dim=formula,
        agree=(dim_total == oracle == formula),
    )


@dataclass(frozen=True)
class ImmersionReport:
    level: int
    max_inclusion_residual: float
    coordinate_condition: float
    included: bool
    injective: bool
    dim_ok: bool

    @property
    def passed(self):
        return self.included and self.injective and self.dim_ok

    def to_dict(self):
        return {
            "level": self.level,
            "max_inclusion_residual": self.max_inclusion_residual,
            "coordinate_condition": self.coordinate_condition,
            "included": self.included,
            "injective": self.injective,
            "dim_ok": self.dim_ok,
            "passed": self.passed,
        }


def immersion_check(v, tree, r, k, tol=DEFAULT_TOL, operator_basis=None):
    """Inclusion of the intersected operator space into the level-k space.

    Verifies that every intersection basis vector lies in the level-k space
    (projector residual), that the induced coordinate map has full column
    rank (condition number reported), and that the model dimension at the
    intersection does not exceed the level-k model dimension.  A basis may
    be supplied explicitly, e.g. to confirm that a corrupted vector is
    flagged.
    """
    v = check_tensor(v, allow_zero=False)
    tree.ensure_valid()
    shape = v.shape
    depth = levels(tree).depth
    if not 1 <= k <= depth:
        raise InvalidArgumentError(f"level {k} out of range 1..{depth}")
    splits = _tree_splits(v, tree, tol)
    bases = [
        level_operator_basis(level_partition(tree, j), splits, shape,
                             label=f"level-{j}")
        for j in range(1, depth + 1)
    ]
    inter = operator_basis
    if inter is None:
        inter = intersect_operator_spaces(bases, tol)
    bk = bases[k - 1]
    if inter.dim == 0:
        max_resid = 0.0
        cond = 1.0
        injective = True
    else:
        proj = bk.vectors @ (bk.vectors.T @ inter.vectors)
        max_resid = float(
            np.max(np.linalg.norm(inter.vectors - proj, axis=0))
        )
        coords = bk.vectors.T @ inter.vectors
        s = np.linalg.svd(coords, compute_uv=False)
        injective = bool(s.size and s[-1] > tol)
        cond = float(s[0] / s[-1]) if injective else float("inf")
    core_inter = prod(r[b] for b in level_partition(tree, 1))
    core_k = prod(r[b] for b in level_partition(tree, k))
    dim_ok = inter.dim + core_inter <= bk.dim + core_k
    return ImmersionReport(
        level=k,
        max_inclusion_residual=max_resid,
        coordinate_condition=cond,
        included=max_resid <= max(tol, 1e-10),
        injective=injective,
        dim_ok=dim_ok,
    )
