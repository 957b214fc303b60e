"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is picked once at import time from ``CAUSALSTAB_BACKEND``
(``numba`` or ``numpy``). ``numba`` is the default when it can be imported.
Both implementations are always importable under explicit names so the test
suite and the benchmark can compare them side by side.
"""

from __future__ import annotations

import itertools
import math
import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

BACKEND = os.environ.get("CAUSALSTAB_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ImportError(f"CAUSALSTAB_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")
if BACKEND == "numba" and not HAVE_NUMBA:
    BACKEND = "numpy"

# Cholesky pivots at or below this are treated as singular.
PIVOT_TOL = 1e-12
# |r| this close to 1 is dependent regardless of n.
UNIT_TOL = 1e-12


# --------------------------------------------------------------------------
# numpy implementations
# --------------------------------------------------------------------------


def pcorr_numpy(corr: np.ndarray, idx: np.ndarray) -> float:
    """Partial correlation of ``idx[0]``, ``idx[1]`` given ``idx[2:]``."""
    sub = corr[np.ix_(idx, idx)]
    try:
        chol = np.linalg.cholesky(sub)
        if np.min(np.diag(chol)) ** 2 <= PIVOT_TOL:
            raise np.linalg.LinAlgError
        prec = np.linalg.inv(sub)
    except np.linalg.LinAlgError:
        prec = np.linalg.pinv(sub)
    denom = prec[0, 0] * prec[1, 1]
    if not denom > 0.0:
        return 0.0
    r = -prec[0, 1] / math.sqrt(denom)
    return min(1.0, max(-1.0, r))


def is_independent(r: float, n: int, k: int, crit: float) -> bool:
    if abs(r) >= 1.0 - UNIT_TOL:
        return False
    return math.sqrt(n - k - 3) * abs(math.atanh(r)) <= crit


def skeleton_numpy(corr, n, crit, max_level):
    p = corr.shape[0]
    adj = ~np.eye(p, dtype=np.bool_)
    sep_size = np.full((p, p), -1, dtype=np.int64)
    sep = np.full((p, p, max(p - 2, 1)), -1, dtype=np.int64)
    level = 0
    while (max_level < 0 or level <= max_level) and n - level - 3 >= 1:
        snap = adj.copy()
        tested = False
        for i in range(p):
            for j in range(p):
                if i == j or not adj[i, j]:
                    continue
                nbrs = [k for k in range(p) if snap[i, k] and k != j]
                if len(nbrs) < level:
                    continue
                tested = True
                a, b = (i, j) if i < j else (j, i)
                for subset in itertools.combinations(nbrs, level):
                    idx = np.array((a, b) + subset, dtype=np.int64)
                    if is_independent(pcorr_numpy(corr, idx), n, level, crit):
                        adj[i, j] = adj[j, i] = False
                        sep_size[i, j] = sep_size[j, i] = level
                        sep[i, j, :level] = subset
                        sep[j, i, :level] = subset
                        break
        if not tested:
            break
        level += 1
    return adj, sep_size, sep


def first_sepset_numpy(corr, n, crit, i, j, cand, size):
    a, b = (i, j) if i < j else (j, i)
    for subset in itertools.combinations(cand.tolist(), size):
        idx = np.array((a, b) + subset, dtype=np.int64)
        if is_independent(pcorr_numpy(corr, idx), n, size, crit):
            return True, np.array(subset, dtype=np.int64)
    return False, np.empty(0, dtype=np.int64)


def sign_sum_numpy(a: np.ndarray, b: np.ndarray) -> int:
    """Sum of sign(x - y) over all pairs."""
    return int(np.sign(a[:, None] - b[None, :]).sum())


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------


def _pcorr_loop(corr, idx):
    m = idx.shape[0]
    sub = np.empty((m, m))
    for r in range(m):
        for c in range(m):
            sub[r, c] = corr[idx[r], idx[c]]
    low = np.zeros((m, m))
    ok = True
    for c in range(m):
        s = sub[c, c]
        for k in range(c):
            s -= low[c, k] * low[c, k]
        if s <= PIVOT_TOL:
            ok = False
            break
        low[c, c] = math.sqrt(s)
        for r in range(c + 1, m):
            t = sub[r, c]
            for k in range(c):
                t -= low[r, k] * low[c, k]
            low[r, c] = t / low[c, c]
    if ok:
        # columns 0 and 1 of inv(L); P = inv(L).T @ inv(L)
        u = np.zeros(m)
        v = np.zeros(m)
        u[0] = 1.0 / low[0, 0]
        for r in range(1, m):
            tu = 0.0
            tv = 0.0
            for k in range(r):
                tu -= low[r, k] * u[k]
                tv -= low[r, k] * v[k]
            if r == 1:
                tv += 1.0
            u[r] = tu / low[r, r]
            v[r] = tv / low[r, r]
        p00 = 0.0
        p11 = 0.0
        p01 = 0.0
        for k in range(m):
            p00 += u[k] * u[k]
            p11 += v[k] * v[k]
            p01 += u[k] * v[k]
    else:
        prec = np.linalg.pinv(sub)
        p00 = prec[0, 0]
        p11 = prec[1, 1]
        p01 = prec[0, 1]
    denom = p00 * p11
    if not denom > 0.0:
        return 0.0
    r = -p01 / math.sqrt(denom)
    return min(1.0, max(-1.0, r))


def _independent_loop(r, n, k, crit):
    if abs(r) >= 1.0 - UNIT_TOL:
        return False
    return math.sqrt(n - k - 3) * abs(math.atanh(r)) <= crit


def _skeleton_loop(corr, n, crit, max_level):
    p = corr.shape[0]
    adj = np.ones((p, p), dtype=np.bool_)
    for i in range(p):
        adj[i, i] = False
    sep_size = np.full((p, p), -1, dtype=np.int64)
    sep = np.full((p, p, max(p - 2, 1)), -1, dtype=np.int64)
    nbrs = np.empty(p, dtype=np.int64)
    idx = np.empty(p, dtype=np.int64)
    comb = np.empty(p, dtype=np.int64)
    level = 0
    while (max_level < 0 or level <= max_level) and n - level - 3 >= 1:
        snap = adj.copy()
        tested = False
        for i in range(p):
            for j in range(p):
                if i == j or not adj[i, j]:
                    continue
                m = 0
                for k in range(p):
                    if snap[i, k] and k != j:
                        nbrs[m] = k
                        m += 1
                if m < level:
                    continue
                tested = True
                if i < j:
                    idx[0] = i
                    idx[1] = j
                else:
                    idx[0] = j
                    idx[1] = i
                for c in range(level):
                    comb[c] = c
                while True:
                    for c in range(level):
                        idx[2 + c] = nbrs[comb[c]]
                    r = _pcorr(corr, idx[: level + 2])
                    if _independent(r, n, level, crit):
                        adj[i, j] = False
                        adj[j, i] = False
                        sep_size[i, j] = level
                        sep_size[j, i] = level
                        for c in range(level):
                            sep[i, j, c] = idx[2 + c]
                            sep[j, i, c] = idx[2 + c]
                        break
                    # next combination in lexicographic order
                    c = level - 1
                    while c >= 0 and comb[c] == m - level + c:
                        c -= 1
                    if c < 0:
                        break
                    comb[c] += 1
                    for d in range(c + 1, level):
                        comb[d] = comb[d - 1] + 1
        if not tested:
            break
        level += 1
    return adj, sep_size, sep


def _first_sepset_loop(corr, n, crit, i, j, cand, size):
    m = cand.shape[0]
    out = np.empty(0, dtype=np.int64)
    if m < size:
        return False, out
    idx = np.empty(size + 2, dtype=np.int64)
    comb = np.arange(size)
    idx[0] = min(i, j)
    idx[1] = max(i, j)
    while True:
        for c in range(size):
            idx[2 + c] = cand[comb[c]]
        if _independent(_pcorr(corr, idx), n, size, crit):
            return True, idx[2:].copy()
        c = size - 1
        while c >= 0 and comb[c] == m - size + c:
            c -= 1
        if c < 0:
            return False, out
        comb[c] += 1
        for d in range(c + 1, size):
            comb[d] = comb[d - 1] + 1


def _sign_sum_loop(a, b):
    total = 0
    for x in a:
        for y in b:
            if x > y:
                total += 1
            elif x < y:
                total -= 1
    return total


if HAVE_NUMBA:
    _pcorr = njit(cache=True, nogil=True)(_pcorr_loop)
    _independent = njit(cache=True, nogil=True)(_independent_loop)
    skeleton_numba = njit(cache=True, nogil=True)(_skeleton_loop)
    first_sepset_numba = njit(cache=True, nogil=True)(_first_sepset_loop)
    pcorr_numba = _pcorr
    sign_sum_numba = njit(cache=True, nogil=True)(_sign_sum_loop)
else:  # pragma: no cover
    _pcorr = _pcorr_loop
    _independent = _independent_loop
    skeleton_numba = _skeleton_loop
    first_sepset_numba = _first_sepset_loop
    pcorr_numba = _pcorr_loop
    sign_sum_numba = _sign_sum_loop


if BACKEND == "numba":
    pcorr = pcorr_numba
    skeleton = skeleton_numba
    first_sepset = first_sepset_numba
    sign_sum = sign_sum_numba
else:
    pcorr = pcorr_numpy
    skeleton = skeleton_numpy
    first_sepset = first_sepset_numpy
    sign_sum = sign_sum_numpy
