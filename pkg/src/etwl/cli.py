"""``etwl`` command line.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import harness, wl
from .graphs import GraphFormatError, builtin_graphs, builtin_pairs, parse_graph, parse_pair
from .oracle import DEFAULT_DIGIT_BUDGET, DigitBudgetExceeded, PartitionMismatch

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read_graph(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_graph(text)
    except GraphFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _emit(args, report, extra_name: str | None = None, extra_text: str | None = None) -> None:
    if args.json:
        print(report.to_json())
    else:
        print(f"# {report.command}  ok={report.ok}  {report.seconds:.3f}s  threads={report.threads}")
        for k, v in report.summary.items():
            print(f"{k}: {v}")
        if report.results and args.verbose:
            keys = list(report.results[0])
            print("\t".join(keys))
            for row in report.results:
                print("\t".join(_fmt(row.get(k)) for k in keys))
    if args.out:
        report.write(args.out)
        if extra_name and extra_text is not None:
            Path(args.out, extra_name).write_text(extra_text)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}" if (v and (abs(v) < 1e-3 or abs(v) >= 1e4)) else f"{v:.4f}"
    return str(v)


def run_wl(args) -> int:
    g = _read_graph(args.graph)
    report, col = harness.cmd_wl(g, args.method, args.rounds, args.graph)
    _emit(args, report)
    if args.dump:
        Path(args.dump).write_text(json.dumps(col.to_dict()))
    return EXIT_OK


def run_distinguish(args) -> int:
    if args.builtin:
        pairs = builtin_pairs()
    elif args.pair:
        pairs = []
        for path in args.pair:
            try:
                pairs.append(parse_pair(Path(path).read_text()))
            except OSError as exc:
                raise UsageError(f"cannot read {path}: {exc.strerror}") from None
            except GraphFormatError as exc:
                raise UsageError(f"{path}: {exc}") from None
    else:
        raise UsageError("give pair files or --builtin")
    methods = wl.METHODS if args.method == "all" else (args.method,)
    report = harness.cmd_distinguish(pairs, methods)
    if not args.json:
        for row in report.results:
            print(f"{row['pair']:<28} {row['method']:<5} {row['verdict']:<18} expected={row['expected']}")
    _emit(args, report)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK if report.ok else EXIT_FAIL


def run_et_check(args) -> int:
    if args.graph:
        graphs = {p: _read_graph(p) for p in args.graph}
    else:
        graphs = builtin_graphs(args.max_n)
    try:
        report = harness.cmd_et_check(graphs, args.layers, args.seeds, args.tol, args.hidden, args.heads,
                                      args.perms, args.equiv_tol, args.max_n, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(args, report)
    return EXIT_OK if report.ok else EXIT_FAIL


def run_grad_check(args) -> int:
    try:
        report = harness.cmd_grad_check(args.n, args.d, args.heads, args.seed, args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(args, report)
    return EXIT_OK if report.ok else EXIT_FAIL


def run_bench(args) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    try:
        report = harness.cmd_bench(sizes, args.d, args.heads, args.repeats, args.seed, args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not args.json:
        for row in report.results:
            print(f"n={row['n']:<5} median={_fmt(row['median_s'])}s")
    _emit(args, report)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK if report.ok else EXIT_FAIL


def run_oracle(args) -> int:
    g = _read_graph(args.graph)
    try:
        report, trace = harness.cmd_oracle(g, args.rounds, args.digit_budget, args.graph)
    except DigitBudgetExceeded as exc:
        raise UsageError(str(exc)) from None
    except PartitionMismatch as exc:
        print(f"FALSIFICATION: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if not args.json:
        for row in report.results:
            print(f"round {row['round']}: {row['classes']} classes (fwl2 {row['fwl2_classes']}), "
                  f"max denominator digits {row['max_denominator_digits']}")
    _emit(args, report, "oracle_trace.json", trace.to_json())
    if args.dump:
        Path(args.dump).write_text(trace.to_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="etwl", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None,
                        help="kernel threads (default: $ETWL_THREADS or 1)")
    common.add_argument("--out", help="directory for JSON report artifacts")
    common.add_argument("--json", action="store_true", help="print the full JSON report")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wl", parents=[common], help="color a graph with a WL variant")
    p.add_argument("graph")
    p.add_argument("--method", choices=wl.METHODS, default="fwl2")
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--dump", help="write the coloring JSON here")
    p.set_defaults(func=run_wl)

    p = sub.add_parser("distinguish", parents=[common], help="pair distinguishability sweep")
    p.add_argument("pair", nargs="*")
    p.add_argument("--builtin", action="store_true")
    p.add_argument("--method", choices=wl.METHODS + ("all",), default="fwl2")
    p.add_argument("--csv")
    p.set_defaults(func=run_distinguish)

    p = sub.add_parser("et-check", parents=[common], help="ET vs 2-FWL consistency and equivariance")
    p.add_argument("graph", nargs="*")
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--equiv-tol", type=float, default=1e-9)
    p.add_argument("--perms", type=int, default=20)
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--max-n", type=int, default=8)
    p.set_defaults(func=run_et_check)

    p = sub.add_parser("grad-check", parents=[common], help="finite-difference gradient check")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=run_grad_check)

    p = sub.add_parser("bench", parents=[common], help="single-layer forward scaling benchmark")
    p.add_argument("--sizes", default="50,100,150,200")
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--csv")
    p.set_defaults(func=run_bench)

    p = sub.add_parser("oracle", parents=[common], help="exact-rational 2-FWL simulation")
    p.add_argument("graph")
    p.add_argument("--rounds", type=int, default=2)
    p.add_argument("--digit-budget", type=int, default=DEFAULT_DIGIT_BUDGET)
    p.add_argument("--dump", help="write the simulation trace JSON here")
    p.set_defaults(func=run_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        os.environ["ETWL_THREADS"] = str(args.threads)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"etwl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except wl.BudgetExceeded as exc:
        print(f"etwl {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
