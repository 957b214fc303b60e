"""Tabular ingestion, correlation statistics, subsampling, and SEM synthesis."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .graph import Edge, Mark, MixedGraph, validate

logger = logging.getLogger(__name__)

MIN_ROWS = 10
MIN_COLUMNS = 2
COLLINEAR_TOL = 1e-12


class DataError(ValueError):
    """Input data cannot be turned into a valid table."""


class CollinearColumnsError(DataError):
    """Two columns are perfectly correlated."""


class DegenerateSubsampleError(DataError):
    """A subsample broke the table invariants (e.g. a column went constant)."""


@dataclass(frozen=True)
class Column:
    name: str
    role: str = "independent"  # or "dependent"


@dataclass(frozen=True, eq=False)
class Table:
    name: str
    columns: tuple[Column, ...]
    values: np.ndarray
    provenance: str = ""
    dropped: tuple[str, ...] = field(default=())

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def select(self, names: Sequence[str]) -> "Table":
        pos = {c.name: k for k, c in enumerate(self.columns)}
        cols = tuple(self.columns[pos[v]] for v in names)
        return replace(self, columns=cols, values=self.values[:, [pos[v] for v in names]])


@dataclass(frozen=True, eq=False)
class SufficientStats:
    corr: np.ndarray
    n: int
    names: tuple[str, ...]

    @property
    def p(self) -> int:
        return len(self.names)

    def index(self, v) -> int:
        if isinstance(v, (int, np.integer)):
            return int(v)
        return self.names.index(v)


def from_array(values, names: Sequence[str], name: str = "table",
               dependent_names: Iterable[str] = (), provenance: str = "") -> Table:
    """Wrap an in-memory array; no cleaning, invariants are not enforced."""
    dep = set(dependent_names)
    cols = tuple(Column(v, "dependent" if v in dep else "independent") for v in names)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != len(cols):
        raise DataError("values must be a rows x columns matrix matching the names")
    return Table(name, cols, values, provenance)


def check_table(t: Table) -> None:
    """Raise DataError unless ``t`` satisfies the table invariants."""
    rows, cols = t.values.shape
    if rows < MIN_ROWS:
        raise DataError(f"{t.name}: {rows} rows, need at least {MIN_ROWS}")
    if cols < MIN_COLUMNS:
        raise DataError(f"{t.name}: {cols} usable columns, need at least {MIN_COLUMNS}")
    if not np.all(np.isfinite(t.values)):
        raise DataError(f"{t.name}: non-finite values")
    const = [c.name for c, s in zip(t.columns, np.ptp(t.values, axis=0)) if s == 0]
    if const:
        raise DataError(f"{t.name}: constant columns {const}")
    corr = np.corrcoef(t.values, rowvar=False)
    iu = np.argwhere(np.triu(np.abs(corr) >= 1 - COLLINEAR_TOL, k=1))
    if len(iu):
        i, j = iu[0]
        raise CollinearColumnsError(
            f"{t.name}: columns {t.columns[i].name!r} and {t.columns[j].name!r} are perfectly collinear")


def _parse_float(text: str) -> Optional[float]:
    try:
        v = float(text)
    except ValueError:
        return None
    return v


def load_table(path, dependent_names: Iterable[str] = (), name: Optional[str] = None) -> Table:
    """Read a comma-separated file with a header row into a cleaned Table.

    Columns holding any non-numeric entry are dropped, rows with a missing
    entry are dropped, and constant columns are dropped with a warning. The
    names of everything removed end up in ``Table.dropped``.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    for k, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}: line {k} has {len(r)} fields, header has {len(header)}")

    dropped = []
    keep = []
    parsed = []
    for c, col_name in enumerate(header):
        cells = [r[c].strip() for r in body]
        vals = [math.nan if s == "" or s.upper() == "NA" else _parse_float(s) for s in cells]
        if any(v is None for v in vals):
            dropped.append(f"{col_name}: non-numeric")
            continue
        keep.append(col_name)
        parsed.append(vals)
    if len(keep) < MIN_COLUMNS:
        raise DataError(f"{path}: only {len(keep)} numeric columns")
    values = np.array(parsed, dtype=float).T.reshape(len(body), len(keep))
    complete = np.all(np.isfinite(values), axis=1)
    if not complete.all():
        logger.warning("%s: dropping %d rows with missing values", path, int((~complete).sum()))
        dropped.append(f"{int((~complete).sum())} rows with missing values")
        values = values[complete]
    if values.shape[0]:
        spread = np.ptp(values, axis=0)
    else:
        spread = np.zeros(len(keep))
    for col_name, s in zip(list(keep), spread):
        if s == 0:
            logger.warning("%s: dropping constant column %r", path, col_name)
            dropped.append(f"{col_name}: constant")
    nonconst = spread != 0
    keep = [v for v, ok in zip(keep, nonconst) if ok]
    values = values[:, nonconst]

    t = from_array(values, keep, name or path.stem, dependent_names, str(path))
    t = replace(t, dropped=tuple(dropped))
    check_table(t)
    return t


def sufficient_stats(t: Table) -> SufficientStats:
    corr = np.corrcoef(t.values, rowvar=False)
    corr = np.clip((corr + corr.T) / 2, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return SufficientStats(corr, int(t.n_rows), tuple(t.names))


def subsample(t: Table, fraction: float, seed: int) -> Table:
    """Draw ``ceil(fraction * rows)`` distinct rows (original order kept)."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    size = math.ceil(round(fraction * t.n_rows, 9))  # 0.9 * 130 must give 117
    if size < MIN_ROWS:
        raise DegenerateSubsampleError(f"subsample of {size} rows is below {MIN_ROWS}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(t.n_rows, size=size, replace=False))
    sub = replace(t, values=t.values[idx], provenance=f"{t.provenance}#subsample({fraction},{seed})")
    try:
        check_table(sub)
    except DataError as exc:
        raise DegenerateSubsampleError(str(exc)) from exc
    return sub


def align_columns(a: Table, b: Table) -> tuple[Table, Table]:
    """Restrict both tables to their shared columns, in ``a``'s order."""
    other = set(b.names)
    shared = [v for v in a.names if v in other]
    if len(shared) < MIN_COLUMNS:
        raise DataError(f"{a.name} and {b.name} share {len(shared)} columns, need {MIN_COLUMNS}")
    return a.select(shared), b.select(shared)


# --------------------------------------------------------------------------
# synthetic structural equation models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SemSpec:
    """Linear SEM: a weighted DAG, a noise family, and hidden nodes."""

    dag: MixedGraph
    noise: str = "gaussian"
    latent: frozenset = frozenset()

    def __post_init__(self):
        if self.noise not in ("gaussian", "uniform"):
            raise ValueError(f"noise must be gaussian or uniform, got {self.noise!r}")
        problems = validate(self.dag, "dag")
        if problems:
            raise ValueError("SEM graph is not a DAG: " + "; ".join(problems))
        extra = set(self.latent) - set(self.dag.nodes)
        if extra:
            raise ValueError(f"latent nodes not in graph: {sorted(extra)}")
        object.__setattr__(self, "latent", frozenset(self.latent))

    @classmethod
    def from_arcs(cls, nodes: Sequence[str], arcs: Iterable[tuple], noise: str = "gaussian",
                  latent: Iterable[str] = ()) -> "SemSpec":
        return cls(MixedGraph.directed(nodes, arcs), noise, frozenset(latent))

    @property
    def observed(self) -> list[str]:
        return [v for v in self.dag.nodes if v not in self.latent]

    def parents(self) -> dict[str, list[tuple[str, float]]]:
        out: dict[str, list[tuple[str, float]]] = {v: [] for v in self.dag.nodes}
        for e in self.dag.edges:
            src, dst = (e.a, e.b) if e.mark_b is Mark.ARROW else (e.b, e.a)
            out[dst].append((src, 1.0 if e.weight is None else e.weight))
        return out

    def topological_order(self) -> list[str]:
        pa = self.parents()
        order: list[str] = []
        placed: set[str] = set()
        while len(order) < len(pa):
            # smallest ready node in declaration order keeps this deterministic
            for v in self.dag.nodes:
                if v not in placed and all(u in placed for u, _ in pa[v]):
                    order.append(v)
                    placed.add(v)
                    break
        return order

    def coefficient_matrix(self) -> np.ndarray:
        """``B[i, j]`` = weight of ``j -> i`` over ``dag.nodes`` order."""
        pos = {v: k for k, v in enumerate(self.dag.nodes)}
        b = np.zeros((len(pos), len(pos)))
        for child, plist in self.parents().items():
            for par, w in plist:
                b[pos[child], pos[par]] = w
        return b

    def population_corr(self) -> np.ndarray:
        """Exact correlation matrix of the observed nodes (unit noise variance)."""
        b = self.coefficient_matrix()
        mix = np.linalg.inv(np.eye(len(b)) - b)
        cov = mix @ mix.T
        keep = [k for k, v in enumerate(self.dag.nodes) if v not in self.latent]
        cov = cov[np.ix_(keep, keep)]
        sd = np.sqrt(np.diag(cov))
        return cov / np.outer(sd, sd)

    def to_document(self, seed: Optional[int] = None) -> dict:
        doc = {
            "nodes": list(self.dag.nodes),
            "edges": [
                {"from": src, "to": dst, "weight": w}
                for dst, plist in self.parents().items() for src, w in plist
            ],
            "noise": self.noise,
            "latent": sorted(self.latent),
        }
        doc["edges"].sort(key=lambda d: (d["from"], d["to"]))
        if seed is not None:
            doc["seed"] = seed
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "SemSpec":
        arcs = [(d["from"], d["to"], d.get("weight", 1.0)) for d in doc["edges"]]
        return cls.from_arcs(doc["nodes"], arcs, doc.get("noise", "gaussian"), doc.get("latent", ()))

    def to_json(self, seed: Optional[int] = None) -> str:
        return json.dumps(self.to_document(seed), indent=2) + "\n"


def population_stats(spec: SemSpec, n: int) -> SufficientStats:
    return SufficientStats(spec.population_corr(), n, tuple(spec.observed))


def synth_sem(spec: SemSpec, n: int, seed: int, name: str = "synthetic") -> Table:
    if n < MIN_ROWS:
        raise DataError(f"n={n} is below {MIN_ROWS}")
    rng = np.random.default_rng(seed)
    pos = {v: k for k, v in enumerate(spec.dag.nodes)}
    p = len(pos)
    if spec.noise == "gaussian":
        noise = rng.standard_normal((n, p))
    else:
        half = math.sqrt(3.0)  # unit variance
        noise = rng.uniform(-half, half, size=(n, p))
    x = np.zeros((n, p))
    pa = spec.parents()
    for v in spec.topological_order():
        k = pos[v]
        x[:, k] = noise[:, k]
        for u, w in pa[v]:
            x[:, k] += w * x[:, pos[u]]
    keep = [pos[v] for v in spec.observed]
    return from_array(x[:, keep], spec.observed, name,
                      provenance=json.dumps(spec.to_document(seed), sort_keys=True))


def random_sem(n_nodes: int, edge_prob: float, seed: int, noise: str = "gaussian",
               weight_range: tuple[float, float] = (0.5, 1.5)) -> SemSpec:
    """Random DAG over ``x0..x{k-1}`` with arcs only from lower to higher index.

    Weights are drawn uniformly from ``weight_range`` with a random sign.
    """
    if n_nodes < 1:
        raise ValueError("need at least one node")
    if not 0 <= edge_prob <= 1:
        raise ValueError("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    width = len(str(n_nodes - 1))
    names = [f"x{k:0{width}d}" for k in range(n_nodes)]
    arcs = []
    lo, hi = weight_range
    for j in range(n_nodes):
        for i in range(j):
            if rng.random() < edge_prob:
                w = rng.uniform(lo, hi) * rng.choice((-1.0, 1.0))
                arcs.append((names[i], names[j], round(float(w), 6)))
    return SemSpec.from_arcs(names, arcs, noise)


def write_csv(t: Table, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(t.names)
        for row in t.values:
            w.writerow([repr(float(v)) for v in row])
