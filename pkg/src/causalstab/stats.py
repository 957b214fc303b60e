"""Cliff's delta, bootstrap significance, and Scott-Knott ranking."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .seeding import derive_seed

SMALL_EFFECT = 0.147
BOOTSTRAP_RESAMPLES = 512
BOOTSTRAP_P = 0.05


def _as_array(values, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"{label} must be nonempty")
    return arr


def cliffs_delta(a: Sequence[float], b: Sequence[float]) -> float:
    """Mean of ``sign(x - y)`` over all ``(x, y)`` in ``a x b``."""
    a = _as_array(a, "a")
    b = _as_array(b, "b")
    return _kernels.sign_sum(a, b) / (a.size * b.size)


def is_small_effect(delta: float) -> bool:
    return abs(delta) < SMALL_EFFECT


def _studentized(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Welch statistic along the last axis; 0/0 counts as 0."""
    num = a.mean(axis=-1) - b.mean(axis=-1)
    va = a.var(axis=-1, ddof=1) if a.shape[-1] > 1 else np.zeros_like(num)
    vb = b.var(axis=-1, ddof=1) if b.shape[-1] > 1 else np.zeros_like(num)
    den = np.sqrt(va / a.shape[-1] + vb / b.shape[-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.sign(num) * np.inf)
    return np.where((den == 0) & (num == 0), 0.0, t)


def bootstrap_differs(a, b, resamples: int = BOOTSTRAP_RESAMPLES, seed: int = 0) -> bool:
    """Two-sample bootstrap test on the studentized mean difference.

    Both samples are shifted onto the pooled mean (the null), resampled with
    replacement, and the observed statistic is significant when fewer than 5%
    of resampled statistics are at least as extreme.
    """
    a = _as_array(a, "a")
    b = _as_array(b, "b")
    observed = abs(float(_studentized(a, b)))
    pooled = np.concatenate([a, b]).mean()
    a0 = a - a.mean() + pooled
    b0 = b - b.mean() + pooled
    rng = np.random.default_rng(seed)
    ra = a0[rng.integers(0, a.size, size=(resamples, a.size))]
    rb = b0[rng.integers(0, b.size, size=(resamples, b.size))]
    extreme = np.count_nonzero(np.abs(_studentized(ra, rb)) >= observed)
    return extreme / resamples < BOOTSTRAP_P


def e_delta(left: Sequence[float], right: Sequence[float]) -> float:
    """Expected squared shift of the mean when ``left + right`` is split in two."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    whole = np.concatenate([left, right])
    mu = whole.mean()
    n = whole.size
    return (left.size / n * (left.mean() - mu) ** 2
            + right.size / n * (right.mean() - mu) ** 2)


@dataclass(frozen=True)
class RankedGroup:
    label: str
    values: tuple[float, ...]
    mean: float
    stdev: float
    rank: int


def _split_points(groups) -> list[int]:
    # never cut between two groups holding the same observations
    return [k for k in range(1, len(groups))
            if sorted(groups[k - 1][1]) != sorted(groups[k][1])]


def scott_knott(groups: Sequence[tuple[str, Sequence[float]]], resamples: int = BOOTSTRAP_RESAMPLES,
                seed: int = 0) -> list[RankedGroup]:
    """Rank treatments by recursive mean splits, best (highest mean) first.

    A split is kept only when its halves differ by the bootstrap test and by
    at least a small Cliff's delta; the resulting clusters get contiguous
    ranks from 0.
    """
    if not groups:
        raise ValueError("need at least one group")
    items = []
    for label, values in groups:
        arr = _as_array(values, f"group {label!r}")
        items.append((str(label), tuple(float(v) for v in arr)))
    items.sort(key=lambda g: (-float(np.mean(g[1])), g[0], g[1]))

    clusters: list[tuple[int, int]] = []

    def recurse(lo: int, hi: int) -> None:
        part = items[lo:hi]
        cuts = _split_points(part)
        best, best_cut = -1.0, None
        for cut in cuts:
            left = [v for _, vals in part[:cut] for v in vals]
            right = [v for _, vals in part[cut:] for v in vals]
            score = e_delta(left, right)
            if score > best:
                best, best_cut = score, cut
        if best_cut is not None:
            left = [v for _, vals in part[:best_cut] for v in vals]
            right = [v for _, vals in part[best_cut:] for v in vals]
            split_seed = derive_seed(seed, lo, hi)
            if (bootstrap_differs(left, right, resamples, split_seed)
                    and not is_small_effect(cliffs_delta(left, right))):
                recurse(lo, lo + best_cut)
                recurse(lo + best_cut, hi)
                return
        clusters.append((lo, hi))

    recurse(0, len(items))
    out = []
    for rank, (lo, hi) in enumerate(sorted(clusters)):
        for label, vals in items[lo:hi]:
            arr = np.asarray(vals)
            sd = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
            out.append(RankedGroup(label, vals, float(arr.mean()), sd, rank))
    return out


def write_ranks_csv(ranked: Sequence[RankedGroup], path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "group", "mean", "stdev"])
        for g in ranked:
            w.writerow([g.rank, g.label, f"{g.mean:.2f}", f"{g.stdev:.2f}"])


def format_ranks(ranked: Sequence[RankedGroup]) -> str:
    width = max([len("group")] + [len(g.label) for g in ranked])
    lines = [f"{'rank':>4}  {'group':<{width}}  mean (stdev)"]
    for g in ranked:
        lines.append(f"{g.rank:>4}  {g.label:<{width}}  {g.mean:.2f} ({g.stdev:.2f})")
    return "\n".join(lines)

