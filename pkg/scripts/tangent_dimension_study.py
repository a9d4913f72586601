"""Tangent dimension study across trees, shapes and ranks.

For each instance the table shows the intersected operator-space dimension
plus the level-1 core dimension next to the two independent references: the
Jacobian rank of the network parametrization and the closed-form parameter
count.  Depth-1 trees agree exactly; deeper trees show the structural gap
between the operator-space model and the full network dimension (interior
subspace motions are invisible to operators that must vanish on every
complement), which the report surfaces rather than reconciles.

Usage: python scripts/tangent_dimension_study.py
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import treegeom as tg
from treegeom.subspaces import TreeRank

from helpers import capped_rank_tuple


def tucker_rank(shape, leaf_ranks):
    d = len(shape)
    return TreeRank({
        **{(m,): leaf_ranks[m - 1] for m in range(1, d + 1)},
        tuple(range(1, d + 1)): 1,
    })


def main():
    instances = [
        ("tucker d=2 rank-1", tg.tucker_tree(2), (2, 2),
         tucker_rank((2, 2), (1, 1))),
        ("tucker d=2 rank-2", tg.tucker_tree(2), (3, 4),
         tucker_rank((3, 4), (2, 2))),
        ("tucker d=3", tg.tucker_tree(3), (3, 3, 3),
         tucker_rank((3, 3, 3), (2, 2, 2))),
        ("tucker d=4", tg.tucker_tree(4), (2, 3, 2, 3),
         tucker_rank((2, 3, 2, 3), (2, 2, 2, 2))),
        ("deep d=4", tg.tree_from_nested([[[1], [[2], [3]]], [4]]),
         (2, 2, 2, 3), None),
        ("mixed d=6", tg.tree_from_nested(
            [[[1], [[2], [3]]], [[4], [5]], [6]]), (2,) * 6, None),
        ("linear d=4", tg.linear_tree(4), (3, 2, 2, 3), None),
        ("binary d=4", tg.balanced_binary_tree(4), (2, 3, 3, 2), None),
    ]
    header = (
        f"{'instance':<18} {'shape':<20} {'dim_E':>5} {'core':>5} "
        f"{'total':>5} {'oracle':>6} {'formula':>7} {'agree':>6}"
    )
    print(header)
    print("-" * len(header))
    for name, tree, shape, r in instances:
        if r is None:
            r = capped_rank_tuple(tree, shape, cap=2)
        v = tg.random_tree_tensor(tree, r, shape, seed=7)
        rep = tg.tangent_dimension(v, tree, r)
        print(
            f"{name:<18} {str(shape):<20} {rep.dim_e:>5} {rep.dim_core:>5} "
            f"{rep.dim_total:>5} {rep.oracle_dim:>6} {rep.formula_dim:>7} "
            f"{str(rep.agree):>6}"
        )


if __name__ == "__main__":
    main()
