"""Order-stable PC: skeleton search, v-structures, and Meek closure.

Internally a CPDAG is an ``amat`` of 0/1 with ``amat[a, b] = 1`` when the
edge between a and b has no arrowhead at a. Undirected edges set both
entries, ``a -> b`` sets only ``amat[a, b]``.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from . import _kernels
from .citest import critical_value
from .data import SufficientStats
from .graph import MixedGraph

logger = logging.getLogger(__name__)

SepSets = dict  # frozenset({u, v}) -> tuple of node names


def skeleton(s: SufficientStats, alpha: float, max_cond_size: Optional[int] = None):
    """Return ``(adj, sepsets)`` with ``sepsets[(i, j)]`` a tuple of indices, i < j."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    corr = np.ascontiguousarray(s.corr, dtype=np.float64)
    max_level = -1 if max_cond_size is None else int(max_cond_size)
    adj, sep_size, sep = _kernels.skeleton(corr, int(s.n), critical_value(alpha), max_level)
    sepsets = {}
    p = s.p
    for i in range(p):
        for j in range(i + 1, p):
            if sep_size[i, j] >= 0:
                sepsets[(i, j)] = tuple(int(k) for k in sep[i, j, : sep_size[i, j]])
    return np.asarray(adj, dtype=bool), sepsets


def named_sepsets(names, sepsets) -> SepSets:
    return {frozenset((names[i], names[j])): tuple(names[k] for k in sorted(S))
            for (i, j), S in sorted(sepsets.items())}


# --------------------------------------------------------------------------
# orientation helpers
# --------------------------------------------------------------------------


def _adjacent(A, a, b) -> bool:
    return bool(A[a, b] or A[b, a])


def _undirected(A, a, b) -> bool:
    return bool(A[a, b] and A[b, a])


def _directed(A, a, b) -> bool:
    return bool(A[a, b] and not A[b, a])


def _has_directed_path(A, src, dst) -> bool:
    p = A.shape[0]
    seen = np.zeros(p, dtype=bool)
    stack = [src]
    seen[src] = True
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for w in range(p):
            if not seen[w] and A[u, w] and not A[w, u]:
                seen[w] = True
                stack.append(w)
    return False


def orient(A, a, b, names=None) -> bool:
    """Make the a-b edge ``a -> b`` unless that closes a directed cycle."""
    if _directed(A, a, b):
        return False
    was_reverse = _directed(A, b, a)
    if was_reverse:
        A[b, a] = 0
        A[a, b] = 1
        cyclic = _has_directed_path(A, b, a)
        if cyclic:
            A[b, a] = 1
            A[a, b] = 0
    else:
        cyclic = _has_directed_path(A, b, a)
    label = (lambda k: names[k]) if names is not None else str
    if cyclic:
        logger.info("skipping %s -> %s: would close a directed cycle", label(a), label(b))
        return False
    if was_reverse:
        logger.info("conflicting v-structures on %s-%s; keeping %s -> %s",
                    label(a), label(b), label(a), label(b))
    A[a, b] = 1
    A[b, a] = 0
    return True


def orient_v_structures(adj: np.ndarray, sepsets, names=None) -> np.ndarray:
    """Undirected skeleton plus ``i -> k <- j`` for each unshielded collider."""
    A = adj.astype(np.int8).copy()
    p = A.shape[0]
    for i in range(p):
        for j in range(i + 1, p):
            if adj[i, j]:
                continue
            sep = sepsets.get((i, j), ())
            for k in range(p):
                if adj[i, k] and adj[j, k] and k not in sep:
                    orient(A, i, k, names)
                    orient(A, j, k, names)
    return A


def _rule1(A, names) -> bool:
    changed = False
    p = A.shape[0]
    for b in range(p):
        for c in range(p):
            if not _undirected(A, b, c):
                continue
            for a in range(p):
                if a != c and _directed(A, a, b) and not _adjacent(A, a, c):
                    changed |= orient(A, b, c, names)
                    break
    return changed


def _rule2(A, names) -> bool:
    changed = False
    p = A.shape[0]
    for a in range(p):
        for c in range(p):
            if not _undirected(A, a, c):
                continue
            for b in range(p):
                if _directed(A, a, b) and _directed(A, b, c):
                    changed |= orient(A, a, c, names)
                    break
    return changed


def _rule3(A, names) -> bool:
    changed = False
    p = A.shape[0]
    for a in range(p):
        for b in range(p):
            if not _undirected(A, a, b):
                continue
            cands = [c for c in range(p)
                     if _undirected(A, a, c) and _directed(A, c, b)]
            hit = any(not _adjacent(A, c, d)
                      for x, c in enumerate(cands) for d in cands[x + 1:])
            if hit:
                changed |= orient(A, a, b, names)
    return changed


def _rule4(A, names) -> bool:
    changed = False
    p = A.shape[0]
    for a in range(p):
        for b in range(p):
            if not _undirected(A, a, b):
                continue
            hit = False
            for d in range(p):
                if not (_directed(A, d, b) and _adjacent(A, a, d)):
                    continue
                for c in range(p):
                    if (c != b and _undirected(A, a, c) and _directed(A, c, d)
                            and not _adjacent(A, c, b)):
                        hit = True
                        break
                if hit:
                    break
            if hit:
                changed |= orient(A, a, b, names)
    return changed


MEEK_RULES = (_rule1, _rule2, _rule3, _rule4)


def meek_closure(A: np.ndarray, names=None) -> np.ndarray:
    """Apply Meek's rules R1-R4, in that order, until nothing changes (in place)."""
    while True:
        changed = False
        for rule in MEEK_RULES:
            changed |= rule(A, names)
        if not changed:
            return A


def cpdag_from_dag(dag: np.ndarray) -> np.ndarray:
    """Equivalence-class CPDAG of a DAG given as ``dag[a, b] = 1`` for ``a -> b``."""
    dag = np.asarray(dag, dtype=np.int8)
    p = dag.shape[0]
    skel = (dag | dag.T).astype(np.int8)
    A = skel.copy()
    for k in range(p):
        parents = np.flatnonzero(dag[:, k])
        for x, i in enumerate(parents):
            for j in parents[x + 1:]:
                if not skel[i, j]:
                    A[k, i] = 0
                    A[k, j] = 0
    return meek_closure(A)


def pc_stable(s: SufficientStats, alpha: float = 0.01,
              max_cond_size: Optional[int] = None) -> tuple[MixedGraph, SepSets]:
    """Stable PC on a correlation matrix; returns the CPDAG and separating sets."""
    names = list(s.names)
    adj, sepsets = skeleton(s, alpha, max_cond_size)
    A = orient_v_structures(adj, sepsets, names)
    meek_closure(A, names)
    return MixedGraph.from_cpdag_amat(names, A), named_sepsets(names, sepsets)
