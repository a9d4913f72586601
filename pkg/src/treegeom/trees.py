"""Dimension partition trees: axioms, levels, level partitions, constructors.

A dimension partition tree over the mode set ``{1..d}`` is a rooted tree whose
vertices are nonempty mode subsets, whose root is the full set, whose leaves
are exactly the singletons, and in which the sons of every non-singleton
vertex form a partition of that vertex into at least two parts.

Nodes are stored as sorted tuples of mode labels; equality of nodes is set
equality.  Sons are kept in a deterministic order (ascending by smallest
element), which fixes iteration order everywhere without imposing structure
the format itself does not have.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import InvalidArgumentError, ParseError, TreeValidationError

__all__ = [
    "DimensionTree",
    "ValidationReport",
    "LevelInfo",
    "validate",
    "levels",
    "level_partition",
    "tucker_tree",
    "linear_tree",
    "balanced_binary_tree",
    "tree_to_json",
    "tree_from_json",
    "tree_from_nested",
]


def _canon(block):
    return tuple(sorted(int(m) for m in block))


def _sort_blocks(blocks):
    return tuple(sorted((_canon(b) for b in blocks), key=lambda b: (b[0], b)))


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class LevelInfo:
    """Vertex levels (root at 0) and the depth of the tree."""

    level: dict
    depth: int


class DimensionTree:
    """Immutable dimension partition tree over modes ``1..ndim``.

    Parameters
    ----------
    ndim : int
        Number of modes; the root is ``(1, ..., ndim)``.
    sons : mapping
        Maps each non-leaf node (any iterable of modes) to an iterable of its
        sons.  Structure is validated lazily via :func:`validate`.
    """

    def __init__(self, ndim, sons):
        if ndim < 1:
            raise InvalidArgumentError("tree needs at least one mode")
        self.ndim = int(ndim)
        self.root = tuple(range(1, self.ndim + 1))
        self.sons = {_canon(k): _sort_blocks(v) for k, v in sons.items()}
        nodes = {self.root} | set(self.sons)
        for kids in self.sons.values():
            nodes.update(kids)
        self.nodes = frozenset(nodes)
        self.leaves = tuple(
            sorted(n for n in self.nodes if n not in self.sons)
        )

    def sons_of(self, node):
        return self.sons.get(_canon(node), ())

    def parent_of(self, node):
        node = _canon(node)
        for parent, kids in self.sons.items():
            if node in kids:
                return parent
        return None

    def interior_nodes(self):
        """Non-leaf nodes, root included, in deterministic order."""
        return tuple(sorted(self.sons, key=lambda b: (len(b), b), reverse=True))

    def __eq__(self, other):
        if not isinstance(other, DimensionTree):
            return NotImplemented
        return self.ndim == other.ndim and self.sons == other.sons

    def __hash__(self):
        return hash((self.ndim, tuple(sorted(self.sons.items()))))

    def __repr__(self):
        return f"DimensionTree(ndim={self.ndim}, nodes={len(self.nodes)})"

    def ensure_valid(self):
        report = validate(self)
        if not report.ok:
            raise TreeValidationError(report.violations)
        return self


def validate(tree):
    """Check the tree axioms; returns a report rather than raising.

    Each violation names the offending node and the axiom it breaks:
    (a) vertices are nonempty subsets of the mode set, (b) the root is the
    full mode set, (c) non-singleton vertices have at least two sons forming
    a partition, (d) singletons have no sons.  The derived requirement that
    the leaf set equals all singletons is reported separately.
    """
    violations = []
    full = set(tree.root)
    for node in sorted(tree.nodes):
        s = set(node)
        if not s:
            violations.append("axiom (a): empty vertex")
        elif not s <= full:
            violations.append(
                f"axiom (a): vertex {s} is not a subset of {full}"
            )
    if tree.root not in tree.nodes:
        violations.append("axiom (b): root missing")
    for node, kids in sorted(tree.sons.items()):
        s = set(node)
        if len(s) == 1:
            violations.append(f"axiom (d): singleton {s} has sons")
            continue
        if len(kids) < 2:
            violations.append(
                f"axiom (c): vertex {s} has {len(kids)} son(s), needs at least 2"
            )
        union = set()
        overlap = False
        for kid in kids:
            if union & set(kid):
                overlap = True
            union |= set(kid)
        if overlap or union != s:
            violations.append(
                f"axiom (c): sons of {s} do not partition it"
            )
    for node in tree.nodes:
        if len(node) >= 2 and node not in tree.sons:
            violations.append(
                f"axiom (c): vertex {set(node)} has no sons"
            )
    expected_leaves = {(m,) for m in tree.root}
    actual_leaves = {n for n in tree.nodes if n not in tree.sons}
    if actual_leaves != expected_leaves:
        missing = sorted(expected_leaves - actual_leaves)
        extra = sorted(actual_leaves - expected_leaves)
        detail = []
        if missing:
            detail.append(f"missing {missing}")
        if extra:
            detail.append(f"non-singleton leaves {extra}")
        violations.append(
            "leaves must be exactly the singletons of the mode set"
            + (": " + ", ".join(detail) if detail else "")
        )
    # reachability: every node must hang off the root
    reached = {tree.root}
    frontier = [tree.root]
    while frontier:
        node = frontier.pop()
        for kid in tree.sons.get(node, ()):
            if kid not in reached:
                reached.add(kid)
                frontier.append(kid)
    unreachable = tree.nodes - reached
    if unreachable:
        violations.append(
            f"vertices not reachable from the root: {sorted(unreachable)}"
        )
    return ValidationReport(ok=not violations, violations=tuple(violations))


def levels(tree):
    """Breadth-first level assignment from the root; depth is the maximum."""
    tree.ensure_valid()
    level = {tree.root: 0}
    frontier = [tree.root]
    while frontier:
        nxt = []
        for node in frontier:
            for kid in tree.sons_of(node):
                level[kid] = level[node] + 1
                nxt.append(kid)
        frontier = nxt
    return LevelInfo(level=level, depth=max(level.values()))


def level_partition(tree, k):
    """The partition of the mode set attached to level ``k``.

    It consists of the vertices at level ``k`` together with the leaves at
    shallower levels.  Level 1 gives the sons of the root and the deepest
    level gives the leaf set.
    """
    info = levels(tree)
    if not 1 <= k <= info.depth:
        raise InvalidArgumentError(
            f"level {k} out of range 1..{info.depth}"
        )
    blocks = [n for n, l in info.level.items() if l == k]
    blocks += [
        n for n in tree.leaves if info.level[n] < k
    ]
    return _sort_blocks(blocks)


def tucker_tree(d):
    """Depth-1 tree: the root with every singleton as a son."""
    if d < 2:
        raise InvalidArgumentError("tucker_tree needs d >= 2")
    root = tuple(range(1, d + 1))
    return DimensionTree(d, {root: [(m,) for m in root]})


def linear_tree(d):
    """Nested tree splitting off one mode at a time: {1}, {2,...,d}, ..."""
    if d < 2:
        raise InvalidArgumentError("linear_tree needs d >= 2")
    sons = {}
    block = tuple(range(1, d + 1))
    while len(block) > 2:
        sons[block] = [(block[0],), block[1:]]
        block = block[1:]
    sons[block] = [(block[0],), (block[1],)]
    return DimensionTree(d, sons)


def balanced_binary_tree(d):
    """Binary tree splitting every block as evenly as possible (left-heavy)."""
    if d < 2:
        raise InvalidArgumentError("balanced_binary_tree needs d >= 2")
    sons = {}

    def split(block):
        if len(block) == 1:
            return
        half = (len(block) + 1) // 2
        left, right = block[:half], block[half:]
        sons[block] = [left, right]
        split(left)
        split(right)

    split(tuple(range(1, d + 1)))
    return DimensionTree(d, sons)


# ---------------------------------------------------------------------------
# JSON format.  A node is either an integer list [j] (leaf), an object
# {"block": [...modes...], "sons": [...nodes...]}, or a nested list of nodes
# whose block is the union of its sons.  The root's block must be 1..d.
# ---------------------------------------------------------------------------


def _parse_node(obj, sons):
    """Parse one node, record sons, and return its canonical block."""
    if isinstance(obj, list):
        if all(isinstance(x, int) for x in obj):
            if len(obj) != 1:
                raise ParseError(
                    f"leaf must contain exactly one mode, got {obj}"
                )
            return _canon(obj)
        kids = [_parse_node(child, sons) for child in obj]
        flat = [m for kid in kids for m in kid]
        block = _canon(flat)
        if len(block) != len(flat):
            raise ParseError(f"duplicate modes in node {flat}")
        sons[block] = kids
        return block
    if isinstance(obj, dict):
        if "block" not in obj or "sons" not in obj:
            raise ParseError("node object needs 'block' and 'sons'")
        block = obj["block"]
        if not isinstance(block, list) or not all(
            isinstance(x, int) for x in block
        ):
            raise ParseError(f"invalid block {block!r}")
        block_c = _canon(block)
        if len(block_c) != len(block):
            raise ParseError(f"duplicate modes in block {block}")
        kids = [_parse_node(child, sons) for child in obj["sons"]]
        flat = [m for kid in kids for m in kid]
        if _canon(flat) != block_c or len(flat) != len(block_c):
            raise ParseError(
                f"sons of block {block} do not partition it"
            )
        sons[block_c] = kids
        return block_c
    raise ParseError(f"cannot parse tree node {obj!r}")


def tree_from_nested(obj):
    """Build a tree from nested Python lists / node objects (see JSON format)."""
    sons = {}
    root = _parse_node(obj, sons)
    if root != tuple(range(1, len(root) + 1)):
        raise ParseError(
            f"root block must be 1..d, got {list(root)}"
        )
    tree = DimensionTree(len(root), sons)
    report = validate(tree)
    if not report.ok:
        raise TreeValidationError(report.violations)
    return tree


def tree_from_json(text):
    """Parse the JSON tree format; validates the result."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid tree JSON: {e}") from e
    return tree_from_nested(obj)


def _node_to_obj(tree, node):
    if node in tree.sons:
        return {
            "block": list(node),
            "sons": [_node_to_obj(tree, kid) for kid in tree.sons_of(node)],
        }
    return list(node)


def tree_to_json(tree):
    """Serialize a tree to its JSON object form (round-trips with parse)."""
    tree.ensure_valid()
    return json.dumps(_node_to_obj(tree, tree.root))
