"""Command-line surface: exponent tables, samplers, experiments and
scatter-diagram data, every subcommand seeded and machine-readable.

Exit codes are a stable scripting contract: 0 success, 1 runtime or
numerical failure (with a diagnostic on stderr), 2 usage error.  The
default seed is 0, never time-based, so bare invocations reproduce.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .experiments import (
    CROSS_VALIDATE,
    KINDS,
    LIS_SCALING,
    SURVIVAL,
    TWO_POINT,
    ExperimentConfig,
    report_basename,
    run_experiment,
)
from .exponents import exponent_table, write_exponent_csv, write_exponent_json
from .subsequence import lis_patience
from .trees import (
    cograph_edges,
    lis_tree,
    sample_tree,
    selection_rule_tree,
    to_permutation,
    tree_to_text,
)

DIAGRAM_MAX_LEAVES = 1 << 18
COGRAPH_MAX_LEAVES = 4096


class UsageError(ValueError):
    """Bad flag values; reported on stderr and mapped to exit code 2."""


# ---------------------------------------------------------------------------
# flag parsing helpers
# ---------------------------------------------------------------------------


def _parse_floats(text, flag):
    try:
        return tuple(float(tok) for tok in text.split(",") if tok != "")
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated numbers, "
                         f"got {text!r}")


def _parse_ints(text, flag):
    try:
        return tuple(int(tok) for tok in text.split(",") if tok != "")
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated integers, "
                         f"got {text!r}")


def _check_seed(seed):
    if not 0 <= seed < 1 << 64:
        raise UsageError(f"--seed must be a 64-bit value, got {seed}")
    return seed


def _check_unit_open_closed(p, flag="--p"):
    if not 0.0 < p <= 1.0:
        raise UsageError(f"{flag} must lie in (0, 1], got {p:g}")
    return p


def _check_positive(n, flag="--n"):
    if n < 1:
        raise UsageError(f"{flag} must be >= 1, got {n}")
    return n


def _write_text(out, text):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _seeded_tree(args):
    # sample/lis/selection/cograph/diagram share one derivation, so the
    # same (--p, --n, --seed) names the same tree in every subcommand
    _check_positive(args.n)
    _check_unit_open_closed(args.p)
    rng = np.random.default_rng(_check_seed(args.seed))
    return sample_tree(args.n, args.p, rng)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_exponents(args):
    """Exponent table for explicit p values or an evenly spaced grid."""
    if args.p is not None:
        ps = _parse_floats(args.p, "--p")
        if not ps:
            raise UsageError("--p: need at least one value")
    else:
        if args.grid < 1:
            raise UsageError(f"--grid must be >= 1, got {args.grid}")
        ps = tuple((i + 1) / (args.grid + 1) for i in range(args.grid))
    for p in ps:
        if not 0.0 < p < 1.0:
            raise UsageError(f"--p values must lie strictly in (0, 1), "
                             f"got {p:g}")
    table = exponent_table(ps)
    fmt = args.format or "csv"
    sink = sys.stdout if args.out is None else args.out
    if fmt == "csv":
        write_exponent_csv(table, sink)
    else:
        write_exponent_json(table, sink)
    return 0


def cmd_sample(args):
    """One permutation (optionally with its signed tree) on one line each."""
    tree = _seeded_tree(args)
    perm = to_permutation(tree)
    text = " ".join(str(int(v)) for v in perm.values) + "\n"
    if args.tree:
        text += tree_to_text(tree) + "\n"
    _write_text(args.out, text)
    return 0


def cmd_lis(args):
    tree = _seeded_tree(args)
    _write_text(args.out, f"{lis_tree(tree)}\n")
    return 0


def cmd_selection(args):
    tree = _seeded_tree(args)
    _write_text(args.out, f"{len(selection_rule_tree(tree))}\n")
    return 0


def cmd_cograph(args):
    """Edge list of the sampled cograph, CSV (i,j) or JSON."""
    if args.n > COGRAPH_MAX_LEAVES:
        raise UsageError(f"cograph: --n capped at {COGRAPH_MAX_LEAVES} "
                         f"(edge list is quadratic), got {args.n}")
    tree = _seeded_tree(args)
    edges = cograph_edges(tree, cap=COGRAPH_MAX_LEAVES)
    if (args.format or "csv") == "csv":
        lines = ["i,j"] + [f"{i},{j}" for i, j in edges]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps(
            {"n": args.n, "edge_count": len(edges),
             "edges": [[i, j] for i, j in edges]},
            sort_keys=True, indent=2) + "\n"
    _write_text(args.out, text)
    return 0


def cmd_diagram(args):
    """
    Scatter data behind the permutation diagram: one CSV row per index
    with normalized coordinates and two 0/1 marks, a patience-sorting
    LIS witness and the keep-the-bigger-side selection subsequence.
    """
    if args.n > DIAGRAM_MAX_LEAVES:
        raise UsageError(f"diagram: --n capped at {DIAGRAM_MAX_LEAVES}, "
                         f"got {args.n}")
    tree = _seeded_tree(args)
    perm = to_permutation(tree)
    n = args.n
    _, witness = lis_patience(perm)
    on_lis = np.zeros(n + 1, dtype=bool)
    on_lis[[w + 1 for w in witness]] = True
    on_sel = np.zeros(n + 1, dtype=bool)
    on_sel[selection_rule_tree(tree)] = True
    lines = ["x,y,lis,selection"]
    vals = perm.values
    for i in range(1, n + 1):
        lines.append(f"{i / n!r},{int(vals[i - 1]) / n!r},"
                     f"{int(on_lis[i])},{int(on_sel[i])}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _experiment_config(args, kind):
    sizes = _parse_ints(args.sizes, "--sizes")
    eps = _parse_floats(args.eps, "--eps") if args.eps else ()
    try:
        return ExperimentConfig(
            kind=kind,
            p=args.p,
            sizes=sizes,
            reps=args.reps,
            eps_grid=eps,
            master_seed=_check_seed(args.seed),
            threads=args.threads,
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _print_report_summary(report, path):
    print(f"report {path}")
    reg = report.regression
    if reg["defined"]:
        print(f"slope {reg['slope']:.6f}")
    else:
        print("slope undefined")
    ref = report.reference
    kind = report.config.kind
    if kind == LIS_SCALING:
        lo, hi = ref["target_slope_band"]
        print(f"reference alpha_star {lo:.6f} beta_star {hi:.6f}")
    elif kind in (SURVIVAL, TWO_POINT):
        print(f"reference slope {ref['target_slope']:.6f}")
    else:
        for n, block in sorted(report.extra.get("per_size", {}).items()):
            print(f"pvalue n={n} {block['pvalue_between']:.6g}")


def cmd_experiment(args, kind=None):
    """
    Run one experiment and write its report; prints the fitted slope and
    the reference exponent.  An interrupt flushes the partial report and
    exits 1.
    """
    config = _experiment_config(args, kind or args.kind)
    report = run_experiment(config)
    fmt = args.format or "json"
    path = args.out or f"{report_basename(config)}.{fmt}"
    _write_text(path, report.to_json() if fmt == "json" else report.to_csv())
    _print_report_summary(report, path)
    return 1 if report.partial else 0


def cmd_survival(args):
    return cmd_experiment(args, kind=SURVIVAL)


def cmd_crossval(args):
    return cmd_experiment(args, kind=CROSS_VALIDATE)


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0,
                     help="64-bit master seed (default 0, never time-based)")
    sub.add_argument("--out", default=None,
                     help="output path (default: stdout, or a derived "
                          "report name for experiments)")
    sub.add_argument("--format", choices=("json", "csv"), default=None,
                     help="output format where a subcommand supports both")
    sub.add_argument("--threads", type=int, default=1,
                     help="worker processes for experiment trials")


def _add_tree_flags(sub):
    sub.add_argument("--p", type=float, required=True,
                     help="PLUS probability in (0, 1]")
    sub.add_argument("--n", type=int, required=True, help="leaf count")


def _add_experiment_flags(sub, with_kind):
    if with_kind:
        sub.add_argument("--kind", choices=KINDS, required=True)
    sub.add_argument("--p", type=float, required=True)
    sub.add_argument("--sizes", required=True,
                     help="comma-separated sizes, strictly increasing")
    sub.add_argument("--reps", type=int, required=True)
    sub.add_argument("--eps", default="",
                     help="comma-separated eps grid (survival/two_point)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="permutons",
        description="Samplers, scaling experiments and exponent tables for "
                    "separable permutations and cographs.")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    sp = subs.add_parser("exponents",
                         help="growth-exponent table for one or more p")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--p", default=None,
                       help="comma-separated p values, each in (0, 1)")
    group.add_argument("--grid", type=int, default=None,
                       help="k evenly spaced p values 1/(k+1) .. k/(k+1)")
    _add_common(sp)
    sp.set_defaults(func=cmd_exponents)

    for name, func, extra in (
            ("sample", cmd_sample, "permutation (one line)"),
            ("lis", cmd_lis, "longest increasing subsequence length"),
            ("selection", cmd_selection, "selection-rule subsequence length"),
            ("cograph", cmd_cograph, "cograph edge list"),
            ("diagram", cmd_diagram, "diagram scatter CSV with LIS and "
                                     "selection marks")):
        sp = subs.add_parser(name, help=f"sample a signed tree; emit {extra}")
        _add_tree_flags(sp)
        if name == "sample":
            sp.add_argument("--tree", action="store_true",
                            help="also print the signed tree")
        _add_common(sp)
        sp.set_defaults(func=func)

    sp = subs.add_parser("experiment", help="run a Monte-Carlo experiment")
    _add_experiment_flags(sp, with_kind=True)
    _add_common(sp)
    sp.set_defaults(func=cmd_experiment)

    for name, func in (("survival", cmd_survival),
                       ("crossval", cmd_crossval)):
        sp = subs.add_parser(name, help=f"shortcut for experiment "
                                        f"--kind {name}")
        _add_experiment_flags(sp, with_kind=False)
        _add_common(sp)
        sp.set_defaults(func=func)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())
