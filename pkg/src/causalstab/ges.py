"""Greedy equivalence search with a linear-Gaussian BIC score.

The search state is a CPDAG ``amat`` using the same convention as
:mod:`causalstab.pc`. After every Insert / Delete the state is extended to a
DAG and re-completed through the Meek closure.
"""

from __future__ import annotations

import logging
import math
from itertools import combinations
from typing import Iterator

import numpy as np

from .data import SufficientStats
from .graph import MixedGraph
from .pc import cpdag_from_dag

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-12


def _conditional_variance(corr: np.ndarray, node: int, parents: list[int]) -> tuple[float, bool]:
    if not parents:
        return 1.0, False
    r = corr[node, parents]
    R = corr[np.ix_(parents, parents)]
    singular = False
    try:
        chol = np.linalg.cholesky(R)
        if np.min(np.diag(chol)) ** 2 <= 1e-12:
            raise np.linalg.LinAlgError
        beta = np.linalg.solve(R, r)
    except np.linalg.LinAlgError:
        singular = True
        beta = np.linalg.pinv(R) @ r
    return max(1.0 - float(r @ beta), VARIANCE_FLOOR), singular


def bic_local(s: SufficientStats, node, parents=()) -> float:
    """``-(n/2) ln(sigma^2) - ((|parents| + 1)/2) ln(n)`` on standardized data."""
    i = s.index(node)
    pa = sorted({s.index(v) for v in parents})
    if i in pa:
        raise ValueError("node cannot be its own parent")
    var, singular = _conditional_variance(s.corr, i, pa)
    if singular:
        logger.warning("singular parent correlation for %s; used pseudo-inverse", s.names[i])
    return -0.5 * s.n * math.log(var) - 0.5 * (len(pa) + 1) * math.log(s.n)


class _Scorer:
    def __init__(self, s: SufficientStats):
        self.s = s
        self.cache: dict[tuple[int, frozenset], float] = {}
        self.flagged: set[int] = set()

    def __call__(self, node: int, parents) -> float:
        key = (node, frozenset(parents))
        hit = self.cache.get(key)
        if hit is None:
            var, singular = _conditional_variance(self.s.corr, node, sorted(key[1]))
            if singular and node not in self.flagged:
                self.flagged.add(node)
                logger.warning("singular parent correlation for %s; used pseudo-inverse",
                               self.s.names[node])
            n = self.s.n
            hit = -0.5 * n * math.log(var) - 0.5 * (len(key[1]) + 1) * math.log(n)
            self.cache[key] = hit
        return hit


# --------------------------------------------------------------------------
# CPDAG helpers
# --------------------------------------------------------------------------


def _neighbors(A, y) -> set[int]:
    return {int(k) for k in np.flatnonzero(A[y] & A[:, y])}


def _parents(A, y) -> set[int]:
    return {int(k) for k in np.flatnonzero(A[:, y] & (1 - A[y]))}


def _adjacents(A, x) -> set[int]:
    return {int(k) for k in np.flatnonzero(A[x] | A[:, x])}


def _is_clique(A, nodes) -> bool:
    nodes = sorted(nodes)
    return all(A[a, b] or A[b, a] for k, a in enumerate(nodes) for b in nodes[k + 1:])


def _semi_directed_blocked(A, y, x, blockers: set[int]) -> bool:
    """True when every semi-directed path from ``y`` to ``x`` meets ``blockers``."""
    p = A.shape[0]
    seen = {y}
    stack = [y]
    while stack:
        u = stack.pop()
        for w in range(p):
            if w in seen or not A[u, w]:  # A[u, w] = 1: u -> w or u - w
                continue
            if w == x:
                return False
            if w in blockers:
                continue
            seen.add(w)
            stack.append(w)
    return True


def _cliques_within(A, base: set[int], pool: list[int]) -> Iterator[tuple[int, ...]]:
    """Subsets T of ``pool`` (sorted tuples) such that ``base | T`` is a clique."""
    if not _is_clique(A, base):
        return

    def extend(start: int, chosen: list[int]):
        yield tuple(chosen)
        for k in range(start, len(pool)):
            v = pool[k]
            if all(A[v, u] or A[u, v] for u in base) and all(A[v, u] or A[u, v] for u in chosen):
                yield from extend(k + 1, chosen + [v])

    yield from extend(0, [])


def dag_extension(A: np.ndarray) -> np.ndarray:
    """Consistent DAG extension of a PDAG (Dor-Tarsi), lowest index first."""
    A = np.asarray(A, dtype=np.int8)
    p = A.shape[0]
    D = (A & (1 - A.T)).astype(np.int8)
    W = A.copy()
    remaining = set(range(p))
    while remaining:
        for x in sorted(remaining):
            out = [y for y in remaining if W[x, y] and not W[y, x]]
            if out:
                continue
            und = [y for y in remaining if W[x, y] and W[y, x]]
            adj = [y for y in remaining if y != x and (W[x, y] or W[y, x])]
            if all(all(W[y, z] or W[z, y] for z in adj if z != y) for y in und):
                for y in und:
                    D[y, x] = 1
                remaining.discard(x)
                W[x, :] = 0
                W[:, x] = 0
                break
        else:
            raise RuntimeError("PDAG admits no consistent DAG extension")
    return D


def total_score(s: SufficientStats, A: np.ndarray, scorer=None) -> float:
    scorer = scorer or _Scorer(s)
    D = dag_extension(A)
    return sum(scorer(k, np.flatnonzero(D[:, k]).tolist()) for k in range(s.p))


def _recomplete(A: np.ndarray) -> np.ndarray:
    return cpdag_from_dag(dag_extension(A)).astype(np.int8)


def _best_insert(A, score):
    p = A.shape[0]
    best = None
    for x in range(p):
        adj_x = _adjacents(A, x)
        for y in range(p):
            if x == y or y in adj_x:
                continue
            ne_y = _neighbors(A, y)
            na = ne_y & adj_x
            pool = sorted(ne_y - adj_x - {x})
            pa = _parents(A, y)
            for T in _cliques_within(A, na, pool):
                nat = na | set(T)
                if not _semi_directed_blocked(A, y, x, nat):
                    continue
                delta = score(y, nat | pa | {x}) - score(y, nat | pa)
                if _better(delta, (x, y, T), best):
                    best = (delta, x, y, T)
    return best


def _best_delete(A, score):
    p = A.shape[0]
    best = None
    for x in range(p):
        adj_x = _adjacents(A, x)
        for y in range(p):
            if x == y or not A[x, y]:  # need x - y or x -> y
                continue
            na = sorted(_neighbors(A, y) & adj_x)
            pa = _parents(A, y) - {x}
            for r in range(len(na) + 1):
                for H in combinations(na, r):
                    rest = set(na) - set(H)
                    if not _is_clique(A, rest):
                        continue
                    delta = score(y, rest | pa) - score(y, rest | pa | {x})
                    if _better(delta, (x, y, H), best):
                        best = (delta, x, y, H)
    return best


def _better(delta, key, best) -> bool:
    if best is None or delta > best[0]:
        return True
    return delta == best[0] and key < best[1:]


def _apply_insert(A, x, y, T):
    A = A.copy()
    A[x, y], A[y, x] = 1, 0
    for t in T:
        A[t, y], A[y, t] = 1, 0
    return _recomplete(A)


def _apply_delete(A, x, y, H):
    A = A.copy()
    A[x, y] = A[y, x] = 0
    for h in H:
        A[y, h], A[h, y] = 1, 0
        if A[x, h] and A[h, x]:
            A[h, x] = 0
    return _recomplete(A)


def ges_search(s: SufficientStats):
    """Run both phases; return ``(amat, scores)`` with the total score after each move."""
    p = s.p
    score = _Scorer(s)
    A = np.zeros((p, p), dtype=np.int8)
    trace = [total_score(s, A, score)]
    while True:
        best = _best_insert(A, score)
        if best is None or not best[0] > 0:
            break
        _, x, y, T = best
        A = _apply_insert(A, x, y, T)
        trace.append(total_score(s, A, score))
    while True:
        best = _best_delete(A, score)
        if best is None or not best[0] > 0:
            break
        _, x, y, H = best
        A = _apply_delete(A, x, y, H)
        trace.append(total_score(s, A, score))
    return A, trace


def ges(s: SufficientStats) -> MixedGraph:
    A, _ = ges_search(s)
    return MixedGraph.from_cpdag_amat(list(s.names), A)
