"""Fisher-z conditional independence tests on correlation matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable

import numpy as np

from . import _kernels
from .data import SufficientStats


@dataclass(frozen=True)
class CITResult:
    statistic: float
    independent: bool
    conditioning_size: int


def critical_value(alpha: float) -> float:
    """Two-sided Gaussian critical value ``Phi^-1(1 - alpha/2)``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return NormalDist().inv_cdf(1.0 - alpha / 2.0)


def fisher_z_statistic(r: float, n: int, k: int) -> float:
    """``sqrt(n - k - 3) * |atanh(r)|``; infinite when ``|r|`` is 1 within 1e-12."""
    if n - k - 3 < 1:
        raise ValueError(f"sample of {n} is too small for a conditioning set of size {k}")
    if abs(r) >= 1.0 - _kernels.UNIT_TOL:
        return math.inf
    return math.sqrt(n - k - 3) * abs(math.atanh(r))


def _indices(s: SufficientStats, i, j, cond: Iterable) -> np.ndarray:
    a, b = s.index(i), s.index(j)
    rest = sorted({s.index(v) for v in cond})
    if a == b:
        raise ValueError("i and j must differ")
    if a in rest or b in rest:
        raise ValueError("conditioning set must not contain i or j")
    if len(rest) > s.n - 4:
        raise ValueError(f"conditioning set of {len(rest)} needs more than n={s.n} samples")
    # canonical order so (i, j) and (j, i) run the identical computation
    a, b = min(a, b), max(a, b)
    return np.array([a, b, *rest], dtype=np.int64)


def partial_correlation(s: SufficientStats, i, j, cond: Iterable = ()) -> float:
    """Partial correlation of ``i`` and ``j`` given ``cond``, clamped to [-1, 1].

    Read off the (pseudo-)inverse of the correlation submatrix over
    ``{i, j} | cond``: ``-P_ij / sqrt(P_ii * P_jj)``.
    """
    return float(_kernels.pcorr(s.corr, _indices(s, i, j, cond)))


def independent(s: SufficientStats, i, j, cond: Iterable = (), alpha: float = 0.01) -> CITResult:
    idx = _indices(s, i, j, cond)
    k = len(idx) - 2
    r = float(_kernels.pcorr(s.corr, idx))
    stat = fisher_z_statistic(r, s.n, k)
    return CITResult(stat, stat <= critical_value(alpha), k)
