"""FCI producing a PAG over tail / arrow / circle endpoint marks.

Marks live in a matrix ``M`` where ``M[i, j]`` is the mark at ``j`` on the
``i``-``j`` edge (0 when there is no edge).
"""

from __future__ import annotations

import logging
from collections import deque
from typing import Optional

import numpy as np

from . import _kernels
from .citest import critical_value
from .data import SufficientStats
from .graph import ARROW, CIRCLE, NONE, TAIL, MixedGraph
from .pc import skeleton

logger = logging.getLogger(__name__)

DEFAULT_PDSEP_CAP = 3


def _circle_skeleton(adj: np.ndarray) -> np.ndarray:
    return np.where(adj, CIRCLE, NONE).astype(np.int8)


def _orient_colliders(M: np.ndarray, sepsets) -> None:
    p = M.shape[0]
    adj = M != NONE
    for i in range(p):
        for j in range(i + 1, p):
            if adj[i, j]:
                continue
            sep = sepsets.get((i, j), ())
            for k in range(p):
                if adj[i, k] and adj[j, k] and k not in sep:
                    M[i, k] = ARROW
                    M[j, k] = ARROW


def possible_d_sep(M: np.ndarray, x: int) -> list[int]:
    """Nodes reachable from ``x`` along paths whose every inner node is a
    collider or sits in a triangle with its two path neighbours."""
    adj = M != NONE
    p = M.shape[0]
    seen = set()
    queue = deque()
    for y in range(p):
        if adj[x, y]:
            seen.add((x, y))
            queue.append((x, y))
    out = set()
    while queue:
        u, v = queue.popleft()
        out.add(v)
        for w in range(p):
            if w == u or w == v or not adj[v, w]:
                continue
            collider = M[u, v] == ARROW and M[w, v] == ARROW
            if (collider or adj[u, w]) and (v, w) not in seen:
                seen.add((v, w))
                queue.append((v, w))
    out.discard(x)
    return sorted(out)


def _prune_possible_d_sep(s: SufficientStats, M: np.ndarray, sepsets, alpha: float, cap: int):
    corr = np.ascontiguousarray(s.corr, dtype=np.float64)
    crit = critical_value(alpha)
    n = int(s.n)
    p = M.shape[0]
    pdsep = [possible_d_sep(M, x) for x in range(p)]
    adj = M != NONE
    for i in range(p):
        for j in range(i + 1, p):
            if not adj[i, j]:
                continue
            removed = False
            for side in (i, j):
                cand = np.array([k for k in pdsep[side] if k != i and k != j], dtype=np.int64)
                # size 0 was already tested (and rejected) by the skeleton search
                for size in range(1, min(cap, len(cand)) + 1):
                    if n - size - 3 < 1:
                        break
                    found, S = _kernels.first_sepset(corr, n, crit, i, j, cand, size)
                    if found:
                        adj[i, j] = adj[j, i] = False
                        sepsets[(i, j)] = tuple(sorted(int(k) for k in S))
                        removed = True
                        break
                if removed:
                    break
    return adj


# --------------------------------------------------------------------------
# orientation rules
# --------------------------------------------------------------------------


def _rule1(M) -> bool:
    changed = False
    p = M.shape[0]
    for b in range(p):
        for c in range(p):
            if M[c, b] != CIRCLE:
                continue
            for a in range(p):
                if a != c and M[a, b] == ARROW and M[a, c] == NONE:
                    M[c, b] = TAIL
                    M[b, c] = ARROW
                    changed = True
                    break
    return changed


def _rule2(M) -> bool:
    changed = False
    p = M.shape[0]
    for a in range(p):
        for c in range(p):
            if M[a, c] != CIRCLE:
                continue
            for b in range(p):
                if b == a or b == c or M[a, b] == NONE or M[b, c] == NONE:
                    continue
                first = M[a, b] == ARROW and M[b, a] == TAIL and M[b, c] == ARROW
                second = M[a, b] == ARROW and M[b, c] == ARROW and M[c, b] == TAIL
                if first or second:
                    M[a, c] = ARROW
                    changed = True
                    break
    return changed


def _rule3(M) -> bool:
    changed = False
    p = M.shape[0]
    for t in range(p):
        for b in range(p):
            if M[t, b] != CIRCLE:
                continue
            parents = [a for a in range(p) if a != t and M[a, b] == ARROW and M[a, t] == CIRCLE]
            hit = any(M[a, c] == NONE for x, a in enumerate(parents) for c in parents[x + 1:])
            if hit:
                M[t, b] = ARROW
                changed = True
    return changed


def _discriminating_start(M, a, b, c) -> Optional[int]:
    """First theta of a discriminating path <theta, ..., a, b, c> for b, or None."""
    p = M.shape[0]
    # state: (node, next node towards b); node must be a collider that is a parent of c
    queue = deque([(a, b)])
    visited = {a, b, c}
    while queue:
        v, nxt = queue.popleft()
        for u in range(p):
            if u in visited or M[u, v] != ARROW:
                continue
            if M[u, c] == NONE and u != c:
                return u
            # u continues the path: it must be a collider and a parent of c
            if M[v, u] == ARROW and M[u, c] == ARROW and M[c, u] == TAIL:
                visited.add(u)
                queue.append((u, v))
    return None


def _rule4(M, sepsets) -> bool:
    changed = False
    p = M.shape[0]
    for b in range(p):
        for c in range(p):
            if M[c, b] != CIRCLE:
                continue
            for a in range(p):
                if a in (b, c):
                    continue
                # a is a collider between the path and b, and a parent of c
                if not (M[b, a] == ARROW and M[a, c] == ARROW and M[c, a] == TAIL and M[a, b] != NONE):
                    continue
                theta = _discriminating_start(M, a, b, c)
                if theta is None:
                    continue
                key = (min(theta, c), max(theta, c))
                if b in sepsets.get(key, ()):
                    M[c, b] = TAIL
                    M[b, c] = ARROW
                else:
                    M[a, b] = M[b, a] = ARROW
                    M[b, c] = M[c, b] = ARROW
                changed = True
                break
    return changed


def orient_pag(M: np.ndarray, sepsets) -> np.ndarray:
    while True:
        changed = _rule1(M)
        changed |= _rule2(M)
        changed |= _rule3(M)
        changed |= _rule4(M, sepsets)
        if not changed:
            return M


def fci(s: SufficientStats, alpha: float = 0.01, max_cond_size: Optional[int] = None,
        pdsep_cap: int = DEFAULT_PDSEP_CAP) -> MixedGraph:
    names = list(s.names)
    adj, sepsets = skeleton(s, alpha, max_cond_size)
    M = _circle_skeleton(adj)
    _orient_colliders(M, sepsets)
    adj = _prune_possible_d_sep(s, M, sepsets, alpha, pdsep_cap)
    M = _circle_skeleton(adj)
    _orient_colliders(M, sepsets)
    orient_pag(M, sepsets)
    return MixedGraph.from_marks(names, M)
