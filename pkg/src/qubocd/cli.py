"""``qubocd`` command line: detect, sweep-k, sweep-threshold, benchmark, make-suite.

Exit codes: 0 success, 1 input/output or parse error, 2 invalid flags,
3 benchmark graphs skipped.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import (
    ZACHARY_BASELINES,
    ManifestError,
    RunRecord,
    benchmark_graph,
    default_jobs,
    load_entry,
    load_manifest,
    sweep_k,
    sweep_threshold,
    write_builtin_suite,
    write_labeling,
)
from .graph_io import GraphParseError, load_graph
from .pipeline import auto_detect, run_detection
from .qubo import PenaltyConfig
from .solvers import SolverParams

log = logging.getLogger("qubocd")

EXIT_IO = 1
EXIT_USAGE = 2
EXIT_SKIPPED = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _thresholds(text: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold list {text!r}") from None
    if not values or any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("thresholds must be a non-empty list of values >= 0")
    return values


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, type=Path, help="graph file")
    p.add_argument("--format", choices=("edgelist", "gml"), default=None,
                   help="input format (default: from the file suffix)")
    p.add_argument("--unweighted", action="store_true", help="treat every edge weight as 1")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=None, help="uniform one-hot penalty weight")
    p.add_argument("--beta", type=float, default=1.0, help="modularity weight")
    p.add_argument("--backend", choices=("auto", "exhaustive", "sa", "tabu", "hybrid"), default="auto")
    p.add_argument("--num-reads", type=_positive_int, default=SolverParams.num_reads)
    p.add_argument("--sweeps", type=_positive_int, default=SolverParams.sweeps)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qubocd", description="Modularity community detection via QUBO annealing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="detect communities in one graph")
    _add_graph_args(p)
    _add_solver_args(p)
    p.add_argument("--k", type=int, default=None, help="communities allowed (default: doubling search)")
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--out", required=True, type=Path, help="labeling file to write")
    p.add_argument("--record", type=Path, default=None, help="RunRecord JSON (default: OUT.json)")
    p.add_argument("--name", default=None, help="graph name for the record (default: file stem)")

    p = sub.add_parser("sweep-k", help="best modularity for k = 2..k_max")
    _add_graph_args(p)
    _add_solver_args(p)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--restarts", type=_positive_int, default=10)
    p.add_argument("--jobs", type=_positive_int, default=None)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("sweep-threshold", help="best modularity per B threshold")
    _add_graph_args(p)
    _add_solver_args(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--thresholds", type=_thresholds, required=True, help="comma separated, e.g. 0,0.05,0.1")
    p.add_argument("--restarts", type=_positive_int, default=10)
    p.add_argument("--jobs", type=_positive_int, default=None)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("benchmark", help="run a graph suite against the expected table")
    p.add_argument("--suite", required=True, type=Path, help="directory with manifest.json")
    p.add_argument("--repeats", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backend", choices=("auto", "exhaustive", "sa", "tabu", "hybrid"), default="auto")
    p.add_argument("--only", action="append", default=None, help="run just this graph (repeatable)")
    p.add_argument("--jobs", type=_positive_int, default=None)
    p.add_argument("--out", required=True, type=Path)

    p = sub.add_parser("make-suite", help="write the networkx-bundled graphs and a suite manifest")
    p.add_argument("directory", type=Path)
    return parser


def _params(args) -> SolverParams:
    return SolverParams(seed=args.seed, num_reads=args.num_reads, sweeps=args.sweeps)


def _penalty(args) -> PenaltyConfig:
    return PenaltyConfig(gamma=args.gamma, beta=args.beta)


def _csv(rows: list[dict], header: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _load(args):
    return load_graph(args.input, args.format, weighted=not args.unweighted)


def cmd_detect(args) -> int:
    g = _load(args)
    params, penalty = _params(args), _penalty(args)
    if args.k is None:
        d, _ = auto_detect(g, params, penalty, threshold=args.threshold, backend=args.backend)
    else:
        d = run_detection(g, args.k, params, penalty, threshold=args.threshold, backend=args.backend)
    record = RunRecord.from_detection(args.name or args.input.stem, g, d)
    _write(args.out, write_labeling(g, d.labeling.labels))
    _write(args.record or args.out.with_name(args.out.name + ".json"), record.to_json())
    print(f"Q={d.score:.5f} k_used={d.labeling.k_used}")
    return 0


def cmd_sweep_k(args) -> int:
    g = _load(args)
    rows = sweep_k(g, args.k_max, _params(args), _penalty(args), restarts=args.restarts,
                   backend=args.backend, jobs=args.jobs or default_jobs())
    _write(args.out, _csv(rows, ["k", "k_used", "modularity"]))
    for row in rows:
        print(f"k={row['k']} k_used={row['k_used']} Q={row['modularity']:.5f}")
    return 0


def cmd_sweep_threshold(args) -> int:
    g = _load(args)
    rows = sweep_threshold(g, args.k, args.thresholds, _params(args), _penalty(args),
                           restarts=args.restarts, backend=args.backend,
                           jobs=args.jobs or default_jobs())
    _write(args.out, _csv(rows, ["threshold", "kept_pairs", "k_used", "modularity"]))
    for row in rows:
        print(f"t={row['threshold']:g} kept_pairs={row['kept_pairs']} "
              f"k_used={row['k_used']} Q={row['modularity']:.5f}")
    return 0


def cmd_benchmark(args) -> int:
    entries = load_manifest(args.suite)
    if args.only:
        entries = [e for e in entries if e.name in args.only]
    params = SolverParams(seed=args.seed)
    results, skipped = [], []
    for entry in entries:
        try:
            g = load_entry(args.suite, entry)
        except (OSError, GraphParseError, ManifestError) as exc:
            print(f"skipping {entry.name}: {exc}", file=sys.stderr)
            skipped.append(entry.name)
            continue
        res = benchmark_graph(entry.name, g, args.repeats, params, backend=args.backend,
                              jobs=args.jobs or default_jobs())
        res["weighted"] = entry.weighted
        results.append(res)
        flag = {None: "n/a", True: "PASS", False: "FAIL"}[res["pass"]]
        print(f"{entry.name:16s} n={g.n:4d} |E|={g.num_edges:5d} best={res['best_modularity']:.5f} "
              f"mean={res['mean_modularity']:.5f} sd={res['std_modularity']:.5f} "
              f"k_used={res['k_used_best']} {flag}")
    body = {"results": results, "skipped": skipped, "zachary_baselines": ZACHARY_BASELINES}
    _write(args.out, json.dumps(body, indent=2) + "\n")
    if skipped:
        print(f"skipped: {', '.join(skipped)}", file=sys.stderr)
        return EXIT_SKIPPED
    return 0


def cmd_make_suite(args) -> int:
    path = write_builtin_suite(args.directory)
    print(f"wrote {path}")
    return 0


COMMANDS = {
    "detect": cmd_detect,
    "sweep-k": cmd_sweep_k,
    "sweep-threshold": cmd_sweep_threshold,
    "benchmark": cmd_benchmark,
    "make-suite": cmd_make_suite,
}


def _check(parser: argparse.ArgumentParser, args) -> None:
    if getattr(args, "k", None) is not None and args.k < 2:
        parser.error("--k must be >= 2")
    if getattr(args, "k_max", None) is not None and args.k_max < 2:
        parser.error("--k-max must be >= 2")
    if args.command == "benchmark" and args.repeats < 1:
        parser.error("--repeats must be >= 1")
    if getattr(args, "seed", 0) < 0:
        parser.error("--seed must be >= 0")
    if getattr(args, "threshold", 0.0) < 0:
        parser.error("--threshold must be >= 0")
    if getattr(args, "gamma", None) is not None and not args.gamma > 0:
        parser.error("--gamma must be > 0")
    if getattr(args, "beta", 1.0) <= 0:
        parser.error("--beta must be > 0")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check(parser, args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (OSError, GraphParseError, ManifestError) as exc:
        print(f"qubocd: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"qubocd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
