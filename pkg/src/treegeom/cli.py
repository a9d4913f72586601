"""Command-line front end.

Subcommands: ``analyze`` (rank profile plus chain residuals), ``membership``,
``generate``, ``chart-check`` (round-trip diagnostics), ``tangent``
(dimension report), and ``proper``.  Reports are JSON by default; ``--human``
renders small tables instead.  Exit codes: 0 success or affirmative verdict,
1 negative verdict, 2 input error, 3 generation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from math import prod
from pathlib import Path

import numpy as np

from . import __version__
from .charts import tree_chart, tree_chart_inverse, tree_chart_point
from .errors import (
    DegenerateInputError,
    GenerationFailureError,
    InvalidArgumentError,
    NotOnManifoldError,
    OutsideChartDomainError,
    OutsideChartImageError,
    ParseError,
    TreegeomError,
    TreeValidationError,
)
from .formats import is_admissible, is_member, is_proper, random_tree_tensor
from .operators import decompose_laplacian
from .subspaces import (
    check_chain,
    minimal_subspace,
    ranks_from_json,
    tree_rank,
)
from .tangent import tangent_dimension
from .tensor import load_tensor, save_tensor
from .trees import (
    balanced_binary_tree,
    linear_tree,
    tree_from_json,
    tucker_tree,
)

OPERATOR_COMMAND_SIZE_LIMIT = 10 ** 6

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_GENERATION = 3


def _load_tree(source, ndim):
    if source == "tucker":
        return tucker_tree(ndim)
    if source == "linear":
        return linear_tree(ndim)
    if source == "binary":
        return balanced_binary_tree(ndim)
    text = Path(source).read_text()
    tree = tree_from_json(text)
    if ndim is not None and tree.ndim != ndim:
        raise InvalidArgumentError(
            f"tree has {tree.ndim} modes, tensor has {ndim}"
        )
    return tree


def _load_ranks(path):
    return ranks_from_json(Path(path).read_text())


def _emit(report, args):
    text = _render_human(report) if args.human else json.dumps(report, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _compact(val):
    """Lists of scalars (or of flat lists) render on one line."""
    if isinstance(val, list) and all(
        not isinstance(x, (dict, list)) for x in val
    ):
        return "[" + ", ".join(str(x) for x in val) + "]"
    if isinstance(val, list) and all(
        isinstance(x, list)
        and all(not isinstance(y, (dict, list)) for y in x)
        for x in val
    ):
        return " ".join(_compact(x) for x in val)
    return None


def _render_human(report, indent=0):
    lines = []
    pad = "  " * indent
    if isinstance(report, dict):
        for key, val in report.items():
            flat = _compact(val) if isinstance(val, list) else None
            if flat is not None:
                lines.append(f"{pad}{key}: {flat}")
            elif isinstance(val, (dict, list)) and val:
                lines.append(f"{pad}{key}:")
                lines.append(_render_human(val, indent + 1))
            else:
                lines.append(f"{pad}{key}: {val}")
    elif isinstance(report, list):
        for val in report:
            if isinstance(val, (dict, list)):
                flat = _compact(val) if isinstance(val, list) else None
                if flat is not None:
                    lines.append(f"{pad}- {flat}")
                else:
                    lines.append(_render_human(val, indent))
            else:
                lines.append(f"{pad}- {val}")
    else:
        lines.append(f"{pad}{report}")
    return "\n".join(lines)


def _meta(args):
    return {
        "tool": "treegeom",
        "version": __version__,
        "seed": args.seed,
        "tol": args.tol,
    }


def _guard_size(shape):
    n = prod(shape)
    if n > OPERATOR_COMMAND_SIZE_LIMIT:
        raise InvalidArgumentError(
            f"total dimension {n} exceeds the desk-scale limit "
            f"{OPERATOR_COMMAND_SIZE_LIMIT} for operator-space commands"
        )


def cmd_analyze(args):
    v = load_tensor(args.tensor)
    tree = _load_tree(args.tree, v.ndim)
    ranks = tree_rank(v, tree, args.tol)
    tails = {}
    for node in sorted(tree.nodes, key=lambda b: (len(b), b)):
        sub = minimal_subspace(v, node, args.tol)
        tails[str(list(node))] = [float(s) for s in sub.singular_values]
    residuals = check_chain(v, tree, args.tol)
    report = {
        **_meta(args),
        "command": "analyze",
        "shape": list(v.shape),
        "ranks": [
            {"block": list(node), "r": val} for node, val in ranks.items()
        ],
        "singular_values": tails,
        "chain_residuals": {str(k): float(r) for k, r in residuals.items()},
    }
    _emit(report, args)
    return EXIT_OK


def cmd_membership(args):
    v = load_tensor(args.tensor)
    tree = _load_tree(args.tree, v.ndim)
    r = _load_ranks(args.ranks)
    report = is_member(v, tree, r, args.tol)
    doc = {**_meta(args), "command": "membership", **report.to_dict()}
    _emit(doc, args)
    return EXIT_OK if report.member else EXIT_NEGATIVE


def cmd_generate(args):
    shape = tuple(int(x) for x in args.shape.split(","))
    if any(n < 1 for n in shape):
        raise InvalidArgumentError(f"invalid shape {shape}")
    tree = _load_tree(args.tree, len(shape))
    r = _load_ranks(args.ranks)
    verdict = is_admissible(tree, r, shape, trials=args.trials, seed=args.seed,
                            tol=args.tol)
    if verdict.verdict == "inadmissible":
        doc = {**_meta(args), "command": "generate", **verdict.to_dict()}
        _emit(doc, args)
        return EXIT_GENERATION
    v = random_tree_tensor(tree, r, shape, seed=args.seed,
                           max_retries=args.trials, tol=args.tol)
    # written output is re-verified before it reaches disk
    if not is_member(v, tree, r, args.tol).member:
        raise GenerationFailureError("generated tensor failed re-verification")
    out = args.out or "generated_tensor.json"
    save_tensor(out, v)
    doc = {
        **_meta(args),
        "command": "generate",
        "written": str(out),
        "shape": list(shape),
        "verified": True,
    }
    text = _render_human(doc) if args.human else json.dumps(doc, indent=2)
    print(text)
    return EXIT_OK


def cmd_chart_check(args):
    v = load_tensor(args.tensor)
    _guard_size(v.shape)
    tree = _load_tree(args.tree, v.ndim)
    r = _load_ranks(args.ranks)
    chart = tree_chart(v, tree, r, args.tol)
    rng = np.random.default_rng(args.seed)
    magnitudes = [1e-3, 1e-2, 1e-1, 1.0, 10.0]
    results = []
    worst = 0.0
    for mag in magnitudes:
        errors = []
        out_of_domain = 0
        for _ in range(args.trials):
            coords = _sample_coords(chart, rng, mag)
            core = chart.core * (1.0 + 0.01 * rng.standard_normal(
                chart.core.shape))
            try:
                w = tree_chart_point(chart, coords, core)
                rec_coords, rec_core = tree_chart_inverse(chart, w)
                w_rec = tree_chart_point(chart, rec_coords, rec_core)
            except (OutsideChartDomainError, OutsideChartImageError):
                out_of_domain += 1
                continue
            denom = max(np.linalg.norm(coords), np.linalg.norm(core), 1e-12)
            coord_err = (
                np.linalg.norm(rec_coords - coords)
                + np.linalg.norm(rec_core - core)
            ) / denom
            tensor_err = np.linalg.norm(w_rec - w) / max(
                np.linalg.norm(w), 1e-300
            )
            errors.append(max(float(coord_err), float(tensor_err)))
        max_err = max(errors, default=0.0)
        if mag <= 0.1:
            worst = max(worst, max_err)
        results.append({
            "magnitude": mag,
            "trials": args.trials,
            "outside_domain": out_of_domain,
            "max_roundtrip_error": max_err,
        })
    passed = worst <= 1e-8
    doc = {
        **_meta(args),
        "command": "chart-check",
        "operator_dim": chart.operator_basis.dim,
        "results": results,
        "max_error_small_magnitudes": worst,
        "passed": passed,
    }
    _emit(doc, args)
    return EXIT_OK if passed else EXIT_NEGATIVE


def _sample_coords(chart, rng, magnitude):
    dim = chart.operator_basis.dim
    if dim == 0:
        return np.zeros(0)
    coords = rng.standard_normal(dim)
    Lop = chart.operator_basis.operator(coords)
    blocks = chart.level_partitions[0]
    L1 = decompose_laplacian(Lop, blocks, chart.splits, chart.shape, tol=1e-6)
    peak = L1.max_norm()
    if peak == 0.0:
        return coords * 0.0
    return coords * (magnitude / peak)


def cmd_tangent(args):
    v = load_tensor(args.tensor)
    _guard_size(v.shape)
    tree = _load_tree(args.tree, v.ndim)
    r = _load_ranks(args.ranks)
    membership = is_member(v, tree, r, args.tol)
    if not membership.member:
        doc = {
            **_meta(args),
            "command": "tangent",
            "member": False,
            "failing_levels": membership.failing_levels(),
            "agree": False,
        }
        _emit(doc, args)
        return EXIT_NEGATIVE
    report = tangent_dimension(v, tree, r, tol=args.tol, step=args.step)
    doc = {
        **_meta(args),
        "command": "tangent",
        "member": True,
        **report.to_dict(),
    }
    _emit(doc, args)
    return EXIT_OK if report.agree else EXIT_NEGATIVE


def cmd_proper(args):
    shape = tuple(int(x) for x in args.shape.split(","))
    tree = _load_tree(args.tree, len(shape))
    r = _load_ranks(args.ranks)
    report = is_proper(tree, r, shape, trials=args.trials, seed=args.seed,
                       tol=args.tol)
    doc = {**_meta(args), "command": "proper", **report.to_dict()}
    _emit(doc, args)
    return EXIT_OK if report.proper else EXIT_NEGATIVE


def build_parser():
    parser = argparse.ArgumentParser(
        prog="treegeom",
        description=(
            "rank analysis, membership, generation, chart diagnostics and "
            "tangent dimension reports for tree tensor formats"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tensor=True, ranks=False, shape=False):
        if tensor:
            p.add_argument("--tensor", required=True, help="tensor file path")
        p.add_argument(
            "--tree", required=True,
            help="tree JSON path or one of: tucker, linear, binary",
        )
        if ranks:
            p.add_argument("--ranks", required=True, help="rank JSON path")
        if shape:
            p.add_argument(
                "--shape", required=True,
                help="comma-separated mode sizes, e.g. 2,3,4",
            )
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--trials", type=int, default=20)
        p.add_argument("--out", default=None, help="report/output file path")
        p.add_argument("--human", action="store_true",
                       help="human-readable tables instead of JSON")

    p = sub.add_parser("analyze", help="tree rank profile and chain residuals")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("membership", help="fixed tree-rank membership test")
    common(p, ranks=True)
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("generate", help="random tensor with prescribed ranks")
    common(p, tensor=False, ranks=True, shape=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("chart-check", help="chart round-trip diagnostics")
    common(p, ranks=True)
    p.set_defaults(func=cmd_chart_check)

    p = sub.add_parser("tangent", help="tangent dimension report")
    common(p, ranks=True)
    p.add_argument("--step", type=float, default=1e-6,
                   help="finite difference step for the Jacobian oracle")
    p.set_defaults(func=cmd_tangent)

    p = sub.add_parser("proper", help="properness verdict for a rank tuple")
    common(p, tensor=False, ranks=True, shape=True)
    p.set_defaults(func=cmd_proper)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except (DegenerateInputError, ParseError, TreeValidationError,
            InvalidArgumentError, FileNotFoundError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_INPUT
    except GenerationFailureError as e:
        print(f"generation failure: {e}", file=sys.stderr)
        code = EXIT_GENERATION
    except (NotOnManifoldError, OutsideChartDomainError,
            OutsideChartImageError) as e:
        print(f"negative verdict: {e}", file=sys.stderr)
        code = EXIT_NEGATIVE
    except TreegeomError as e:
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_INPUT
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
