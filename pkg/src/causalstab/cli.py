"""Command-line entry point: ``causalstab {discover,compare,audit,rank,synth}``.

Exit codes: 0 ok, 2 bad flags, 3 data error, 4 generator failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .data import DataError, load_table, random_sem, synth_sem, write_csv
from .graph import FORMAT_VERSION, GraphError, deserialize, serialize, to_dot
from .lingam import ConvergenceError
from .stability import (
    ALPHA_GENERATORS,
    GENERATORS,
    Generator,
    StabilityReport,
    format_summary,
    graph_jaccard,
    jaccard_matrix,
    read_report_csv,
    run_alpha_sweep,
    run_cross_generator,
    run_projects,
    run_releases,
    run_subsample,
    write_edge_counts_csv,
    write_report_csv,
    write_summary_csv,
)
from .stats import format_ranks, scott_knott, write_ranks_csv

REPORT_FORMAT_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_GENERATOR = 0, 2, 3, 4
PROTOCOLS = ("releases", "projects", "alpha-sweep", "subsample", "cross-generator")
MIN_COMPLETION = 0.9

log = logging.getLogger("causalstab")


class UsageError(Exception):
    pass


def _dependent(args) -> list[str]:
    return [v for v in (args.dependent or "").split(",") if v]


def _load(path: str, args):
    return load_table(path, _dependent(args))


def _generator(args) -> Generator:
    if args.alpha is not None and args.algo not in ALPHA_GENERATORS:
        raise UsageError(f"--alpha is not accepted by {args.algo}")
    try:
        return Generator(args.algo, alpha=args.alpha, seed=args.seed,
                         max_cond_size=args.max_cond_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_discover(args) -> int:
    gen = _generator(args)
    t = _load(args.input, args)
    try:
        g = gen.run(t)
    except (ConvergenceError, RuntimeError, ValueError) as exc:
        log.error("%s failed: %s", gen.name, exc)
        return EXIT_GENERATOR
    text = serialize(g) if args.format == "json" else to_dot(g, t.name)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"nodes={len(g.nodes)} edges={len(g)}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        g1 = deserialize(Path(args.left).read_text(encoding="utf-8"))
        g2 = deserialize(Path(args.right).read_text(encoding="utf-8"))
    except (OSError, GraphError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    print(f"{graph_jaccard(g1, g2):.4f}")
    return EXIT_OK


def _write_matrix(report, path: Path) -> None:
    labels, m = jaccard_matrix(report)
    lines = ["," + ",".join(labels)]
    lines += [",".join([v] + [f"{x:.4f}" for x in row]) for v, row in zip(labels, m)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_audit(args) -> int:
    protocol = args.protocol
    inputs = args.inputs
    if protocol in ("releases", "projects") and len(inputs) < 2:
        raise UsageError(f"{protocol} needs at least two --inputs")
    if protocol == "alpha-sweep" and args.algo not in ALPHA_GENERATORS:
        raise UsageError(f"alpha-sweep needs --algo in {ALPHA_GENERATORS}")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    gen = None if protocol == "cross-generator" else _generator(args)
    tables = [_load(p, args) for p in inputs]

    if protocol == "releases":
        report = run_releases(tables, gen, jobs=args.jobs)
    elif protocol == "projects":
        report = run_projects(tables, gen, jobs=args.jobs)
    elif protocol == "alpha-sweep":
        report = StabilityReport()
        for t in tables:
            report.extend(run_alpha_sweep(t, gen, jobs=args.jobs))
    elif protocol == "subsample":
        report = StabilityReport()
        for k, t in enumerate(tables):
            report.extend(run_subsample(t, gen, runs=args.runs, fraction=args.fraction,
                                        root_seed=args.seed + k, jobs=args.jobs))
    else:
        report = run_cross_generator(tables, trials=args.trials, root_seed=args.seed,
                                     jobs=args.jobs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    group_of = (lambda r: args.group) if args.group else None
    write_report_csv(report, out / "report.csv")
    write_summary_csv(report, out / "summary.csv", group_of)
    if report.edge_counts:
        write_edge_counts_csv(report, out / "edges.csv")
    if protocol == "projects" and report.rows:
        _write_matrix(report, out / "matrix.csv")
    if report.failures:
        (out / "failures.txt").write_text("\n".join(report.failures) + "\n", encoding="utf-8")
    print(format_summary(report, group_of))
    if protocol == "cross-generator" and report.rows:
        print(f"median jaccard: {report.median():.2f}")
    if report.completion < MIN_COMPLETION:
        log.error("only %d of %d comparisons completed", len(report.rows), report.planned)
        return EXIT_GENERATOR
    return EXIT_OK


def cmd_rank(args) -> int:
    try:
        report = read_report_csv(args.input)
    except (OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    if not report.rows:
        log.error("%s: report has no rows", args.input)
        return EXIT_DATA
    keys = [k.strip() for k in args.by.split(",") if k.strip()]
    bad = [k for k in keys if k not in ("protocol", "dataset", "generator", "parameter")]
    if bad or not keys:
        raise UsageError(f"--by accepts protocol,dataset,generator,parameter; got {args.by!r}")
    groups: dict[str, list[float]] = {}
    for r in report.rows:
        groups.setdefault("/".join(getattr(r, k) for k in keys), []).append(r.jaccard)
    ranked = scott_knott(list(groups.items()), resamples=args.resamples, seed=args.seed)
    if args.out:
        write_ranks_csv(ranked, args.out)
    print(format_ranks(ranked))
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.nodes < 2:
        raise UsageError("--nodes must be at least 2")
    if not 0 <= args.edge_prob <= 1:
        raise UsageError("--edge-prob must lie in [0, 1]")
    if args.samples < 10:
        raise UsageError("--samples must be at least 10")
    spec = random_sem(args.nodes, args.edge_prob, args.seed, args.noise)
    out = Path(args.out)
    t = synth_sem(spec, args.samples, args.seed, name=out.stem)
    write_csv(t, out)
    spec_path = out.with_suffix(".sem.json")
    spec_path.write_text(spec.to_json(args.seed), encoding="utf-8")
    print(f"wrote {out} ({args.samples}x{args.nodes}) and {spec_path} ({len(spec.dag)} edges)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="causalstab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"causalstab {__version__} (graph format {FORMAT_VERSION}, "
                                f"report format {REPORT_FORMAT_VERSION})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def gen_flags(p, algo_required=True):
        p.add_argument("--algo", choices=GENERATORS, required=algo_required,
                       default=None if algo_required else "pc")
        p.add_argument("--alpha", type=float, help="pc/fci significance level (default 0.01)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--max-cond-size", type=int, default=None)
        p.add_argument("--dependent", help="comma-separated dependent column names")

    p = sub.add_parser("discover", help="learn one graph from a CSV file")
    gen_flags(p)
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "dot"), default="json")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("compare", help="Jaccard index of two graph files")
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("audit", help="run a stability protocol")
    gen_flags(p, algo_required=False)
    p.add_argument("--protocol", choices=PROTOCOLS, required=True)
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--fraction", type=float, default=0.9)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--group", help="summary group label for every row (e.g. defect)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("rank", help="Scott-Knott ranks for a report CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--by", default="dataset,protocol,generator")
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resamples", type=int, default=512)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("synth", help="sample a random linear SEM to CSV")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--edge-prob", type=float, default=0.3)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--noise", choices=("gaussian", "uniform"), default="gaussian")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"causalstab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except (ConvergenceError, RuntimeError) as exc:
        log.error("%s", exc)
        return EXIT_GENERATOR


if __name__ == "__main__":
    sys.exit(main())
