"""Graph-to-graph Jaccard stability and the perturbation protocols.

Every protocol returns a :class:`StabilityReport`. All randomness flows from
a root seed through :func:`causalstab.seeding.derive_seed`, and parallel
runs are merged back in task order, so reports are identical for any
``jobs`` value.
"""

from __future__ import annotations

import csv
import functools
import logging
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .data import DataError, DegenerateSubsampleError, Table, subsample, sufficient_stats
from .fci import DEFAULT_PDSEP_CAP, fci
from .ges import ges
from .graph import MixedGraph, canonical_tokens
from .lingam import DEFAULT_PRUNE, ica_lingam
from .pc import pc_stable
from .seeding import derive_seed

logger = logging.getLogger(__name__)

GENERATORS = ("pc", "fci", "ges", "lingam")
ALPHA_GENERATORS = ("pc", "fci")
DEFAULT_ALPHA = 0.01
SWEEP_SIZE = 999
REPORT_HEADER = ["protocol", "dataset", "generator", "parameter", "left", "right", "jaccard"]
SUMMARY_HEADER = ["group", "protocol", "generator", "mean", "stdev"]


def jaccard(e1: Iterable, e2: Iterable) -> float:
    """``|e1 & e2| / |e1 | e2|``; two empty sets count as identical (1.0)."""
    e1, e2 = set(e1), set(e2)
    union = e1 | e2
    if not union:
        return 1.0
    return len(e1 & e2) / len(union)


def graph_jaccard(g1: MixedGraph, g2: MixedGraph) -> float:
    return jaccard(canonical_tokens(g1), canonical_tokens(g2))


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Generator:
    """A discovery algorithm plus its settings."""

    name: str
    alpha: Optional[float] = None
    seed: int = 0
    prune: float = DEFAULT_PRUNE
    max_cond_size: Optional[int] = None
    pdsep_cap: int = DEFAULT_PDSEP_CAP

    def __post_init__(self):
        if self.name not in GENERATORS:
            raise ValueError(f"unknown generator {self.name!r}; choose from {GENERATORS}")
        if self.name in ALPHA_GENERATORS:
            if self.alpha is None:
                object.__setattr__(self, "alpha", DEFAULT_ALPHA)
            if not 0 < self.alpha < 1:
                raise ValueError("alpha must lie in (0, 1)")
        elif self.alpha is not None:
            raise ValueError(f"{self.name} has no alpha parameter")

    def with_(self, **changes) -> "Generator":
        fields = dict(name=self.name, alpha=self.alpha, seed=self.seed, prune=self.prune,
                      max_cond_size=self.max_cond_size, pdsep_cap=self.pdsep_cap)
        fields.update(changes)
        return Generator(**fields)

    @property
    def parameter(self) -> str:
        if self.name in ALPHA_GENERATORS:
            return f"alpha={self.alpha:.3f}"
        if self.name == "lingam":
            return f"seed={self.seed}"
        return ""

    def run(self, t: Table) -> MixedGraph:
        if self.name == "lingam":
            return ica_lingam(t, self.seed, self.prune).graph
        s = sufficient_stats(t)
        if self.name == "pc":
            return pc_stable(s, self.alpha, self.max_cond_size)[0]
        if self.name == "fci":
            return fci(s, self.alpha, self.max_cond_size, self.pdsep_cap)
        return ges(s)


def as_generator(gen) -> Generator:
    return gen if isinstance(gen, Generator) else Generator(gen)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    protocol: str
    dataset: str
    generator: str
    parameter: str
    left: str
    right: str
    jaccard: float


@dataclass
class StabilityReport:
    rows: list[ComparisonRow] = field(default_factory=list)
    edge_counts: list[tuple[str, int]] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    planned: int = 0

    def summary(self, group_of: Optional[Callable[[ComparisonRow], str]] = None) -> dict:
        """``(group, protocol, generator) -> (mean, stdev)``; stdev is the sample stdev."""
        group_of = group_of or (lambda r: r.dataset)
        buckets: dict[tuple[str, str, str], list[float]] = {}
        for r in self.rows:
            buckets.setdefault((group_of(r), r.protocol, r.generator), []).append(r.jaccard)
        return {k: (statistics.fmean(v), statistics.stdev(v) if len(v) > 1 else 0.0)
                for k, v in sorted(buckets.items())}

    def median(self) -> float:
        return statistics.median(r.jaccard for r in self.rows)

    @property
    def completion(self) -> float:
        return len(self.rows) / self.planned if self.planned else 1.0

    def extend(self, other: "StabilityReport") -> "StabilityReport":
        self.rows.extend(other.rows)
        self.edge_counts.extend(other.edge_counts)
        self.failures.extend(other.failures)
        self.planned += other.planned
        return self


def write_report_csv(report: StabilityReport, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in report.rows:
            w.writerow([r.protocol, r.dataset, r.generator, r.parameter, r.left, r.right,
                        repr(float(r.jaccard))])


def read_report_csv(path) -> StabilityReport:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != REPORT_HEADER:
            raise ValueError(f"{path}: expected header {','.join(REPORT_HEADER)}")
        rows = []
        for k, rec in enumerate(reader, start=2):
            if len(rec) != len(REPORT_HEADER):
                raise ValueError(f"{path}: line {k} has {len(rec)} fields")
            j = float(rec[6])
            if not 0.0 <= j <= 1.0:
                raise ValueError(f"{path}: line {k} jaccard {j} outside [0, 1]")
            rows.append(ComparisonRow(*rec[:6], j))
    return StabilityReport(rows, planned=len(rows))


def write_summary_csv(report: StabilityReport, path, group_of=None) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for (group, protocol, gen), (mean, sd) in report.summary(group_of).items():
            w.writerow([group, protocol, gen, f"{mean:.2f}", f"{sd:.2f}"])


def write_edge_counts_csv(report: StabilityReport, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["graph", "edges"])
        w.writerows(report.edge_counts)


def format_summary(report: StabilityReport, group_of=None) -> str:
    lines = [f"{'group':<16} {'protocol':<16} {'generator':<12} mean (stdev)"]
    for (group, protocol, gen), (mean, sd) in report.summary(group_of).items():
        lines.append(f"{group:<16} {protocol:<16} {gen:<12} {mean:.2f} ({sd:.2f})")
    return "\n".join(lines)


def jaccard_matrix(report: StabilityReport):
    """Symmetric ``(labels, matrix)`` view of a projects report; diagonal is 1."""
    labels: list[str] = []
    for r in report.rows:
        for v in (r.left, r.right):
            if v not in labels:
                labels.append(v)
    pos = {v: k for k, v in enumerate(labels)}
    m = [[1.0 if i == j else float("nan") for j in range(len(labels))] for i in range(len(labels))]
    for r in report.rows:
        m[pos[r.left]][pos[r.right]] = m[pos[r.right]][pos[r.left]] = r.jaccard
    return labels, m


# --------------------------------------------------------------------------
# protocols
# --------------------------------------------------------------------------


def _map(fn, items: Sequence, jobs: int = 1) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _common_columns(tables: Sequence[Table], label: str) -> list[Table]:
    """Keep tables that can share at least two columns; log the ones dropped."""
    kept: list[Table] = []
    shared: Optional[list[str]] = None
    for t in tables:
        cand = t.names if shared is None else [v for v in shared if v in set(t.names)]
        if len(cand) < 2:
            logger.warning("%s: excluding %s, shares fewer than two columns", label, t.name)
            continue
        kept.append(t)
        shared = cand
    if shared is None:
        raise DataError(f"{label}: no usable tables")
    return [t.select(shared) for t in kept]


def _common_prefix(names: Sequence[str]) -> str:
    prefix = names[0]
    for v in names[1:]:
        while not v.startswith(prefix):
            prefix = prefix[:-1]
    return prefix.rstrip("-_. ") or names[0]


def run_releases(versions: Sequence[Table], gen="pc", dataset: Optional[str] = None,
                 jobs: int = 1) -> StabilityReport:
    """Compare each release's graph with the next release's graph."""
    gen = as_generator(gen)
    if len(versions) < 2:
        raise ValueError("the releases protocol needs at least two versions")
    aligned = _common_columns(versions, "releases")
    if len(aligned) != len(versions):
        raise DataError("releases protocol: versions do not share at least two columns")
    dataset = dataset or _common_prefix([t.name for t in versions])
    graphs = _map(gen.run, aligned, jobs)
    rows = [ComparisonRow("releases", dataset, gen.name, gen.parameter, a.name, b.name,
                          graph_jaccard(ga, gb))
            for (a, ga), (b, gb) in zip(zip(aligned, graphs), zip(aligned[1:], graphs[1:]))]
    counts = [(t.name, len(g)) for t, g in zip(aligned, graphs)]
    return StabilityReport(rows, counts, planned=len(versions) - 1)


def run_projects(latest: Sequence[Table], gen="pc", dataset: str = "projects",
                 jobs: int = 1) -> StabilityReport:
    """Compare every pair of projects (upper triangle, input order)."""
    gen = as_generator(gen)
    if len(latest) < 2:
        raise ValueError("the projects protocol needs at least two projects")
    aligned = _common_columns(latest, "projects")
    excluded = [t.name for t in latest if t.name not in {a.name for a in aligned}]
    if len(aligned) < 2:
        raise DataError("projects protocol: fewer than two alignable projects")
    graphs = _map(gen.run, aligned, jobs)
    rows = []
    for i in range(len(aligned)):
        for j in range(i + 1, len(aligned)):
            rows.append(ComparisonRow("projects", dataset, gen.name, gen.parameter,
                                      aligned[i].name, aligned[j].name,
                                      graph_jaccard(graphs[i], graphs[j])))
    counts = [(t.name, len(g)) for t, g in zip(aligned, graphs)]
    return StabilityReport(rows, counts, [f"excluded {v}: not alignable" for v in excluded],
                           planned=len(rows))


def sweep_alphas(size: int = SWEEP_SIZE) -> list[float]:
    """``0.001 + i/1000`` for ``i = 0 .. size-1``, as exact decimals."""
    return [(1 + i) / 1000 for i in range(size)]


def run_alpha_sweep(t: Table, gen="pc", alphas: Optional[Sequence[float]] = None,
                    jobs: int = 1) -> StabilityReport:
    """One graph per alpha; every graph after the first is compared with the first."""
    gen = as_generator(gen)
    if gen.name not in ALPHA_GENERATORS:
        raise ValueError(f"{gen.name} exposes no alpha to sweep")
    alphas = list(alphas) if alphas is not None else sweep_alphas()
    gens = [gen.with_(alpha=a) for a in alphas]
    graphs = _map(lambda g: g.run(t), gens, jobs)
    ids = [f"alpha={a:.3f}" for a in alphas]
    base = canonical_tokens(graphs[0])
    rows = [ComparisonRow("alpha-sweep", t.name, gen.name, ids[k], ids[0], ids[k],
                          jaccard(base, canonical_tokens(graphs[k])))
            for k in range(1, len(graphs))]
    counts = [(ids[k], len(graphs[k])) for k in range(len(graphs))]
    return StabilityReport(rows, counts, planned=len(graphs) - 1)


def run_subsample(t: Table, gen="pc", runs: int = 20, fraction: float = 0.9,
                  root_seed: int = 0, jobs: int = 1) -> StabilityReport:
    """Graphs on ``runs`` random subsamples; runs 1.. compared with run 0."""
    gen = as_generator(gen)
    if runs < 2:
        raise ValueError("need at least two runs")

    def one(k: int):
        seed = derive_seed(root_seed, k)
        try:
            sub = subsample(t, fraction, seed)
        except DegenerateSubsampleError as exc:
            return k, None, f"run {k}: degenerate subsample ({exc})"
        g = gen.with_(seed=derive_seed(root_seed, k, 1)) if gen.name == "lingam" else gen
        try:
            return k, g.run(sub), None
        except Exception as exc:  # generator failures are recorded, not fatal
            return k, None, f"run {k}: {gen.name} failed ({exc})"

    results = _map(one, list(range(runs)), jobs)
    failures = [msg for _, _, msg in results if msg]
    for msg in failures:
        logger.warning("%s: %s", t.name, msg)
    ids = [f"run{k:02d}" for k in range(runs)]
    rows = []
    base = results[0][1]
    if base is not None:
        base_tokens = canonical_tokens(base)
        for k, g, _ in results[1:]:
            if g is not None:
                rows.append(ComparisonRow("subsample", t.name, gen.name, f"fraction={fraction:g}",
                                          ids[0], ids[k], jaccard(base_tokens, canonical_tokens(g))))
    counts = [(ids[k], len(g)) for k, g, _ in results if g is not None]
    return StabilityReport(rows, counts, failures, planned=runs - 1)


def run_cross_generator(tables: Sequence[Table], trials: int = 100, root_seed: int = 0,
                        generators: Sequence[str] = GENERATORS, max_attempts: int = 5,
                        jobs: int = 1) -> StabilityReport:
    """Each trial: one random table, two distinct generators at default settings."""
    if not tables:
        raise ValueError("need at least one table")
    generators = list(generators)
    if len(generators) < 2:
        raise ValueError("need at least two generators")

    def draw(trial: int, attempt: int):
        rng = np.random.default_rng(derive_seed(root_seed, trial, attempt))
        ti = int(rng.integers(len(tables)))
        a, b = rng.choice(len(generators), size=2, replace=False)
        return ti, generators[int(a)], generators[int(b)]

    @functools.lru_cache(maxsize=None)
    def deterministic(ti: int, name: str) -> MixedGraph:
        return Generator(name).run(tables[ti])

    def graph(ti: int, name: str, trial: int) -> MixedGraph:
        if name == "lingam":
            return Generator(name, seed=derive_seed(root_seed, trial)).run(tables[ti])
        return deterministic(ti, name)

    def one(trial: int):
        errors = []
        for attempt in range(max_attempts):
            ti, ga, gb = draw(trial, attempt)
            t = tables[ti]
            try:
                g1 = graph(ti, ga, trial)
                g2 = graph(ti, gb, trial)
            except Exception as exc:
                errors.append(f"trial {trial} attempt {attempt}: {ga}/{gb} on {t.name} failed ({exc})")
                continue
            row = ComparisonRow("cross-generator", t.name, f"{ga}-vs-{gb}", f"trial={trial}",
                                ga, gb, graph_jaccard(g1, g2))
            return row, errors
        return None, errors

    results = _map(one, list(range(trials)), jobs)
    rows = [r for r, _ in results if r is not None]
    failures = [msg for _, errs in results for msg in errs]
    for msg in failures:
        logger.warning(msg)
    return StabilityReport(rows, failures=failures, planned=trials)
