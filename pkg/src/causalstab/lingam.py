"""ICA-LiNGAM: symmetric FastICA followed by permutation to a causal order."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .data import Table
from .graph import Edge, Mark, MixedGraph

MAX_ITER = 500
TOL = 1e-6
RESTARTS = 3
DEFAULT_PRUNE = 0.05


class ConvergenceError(RuntimeError):
    """FastICA did not converge after all restarts."""


@dataclass(frozen=True, eq=False)
class LingamResult:
    order: tuple[str, ...]
    B: np.ndarray
    graph: MixedGraph


def _sym_decorrelate(W: np.ndarray) -> np.ndarray:
    # W <- (W W^T)^{-1/2} W
    s, u = np.linalg.eigh(W @ W.T)
    s = np.clip(s, np.finfo(float).tiny, None)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ W


def _whiten(X: np.ndarray):
    Xc = X - X.mean(axis=0)
    cov = Xc.T @ Xc / Xc.shape[0]
    d, E = np.linalg.eigh(cov)
    if d.min() <= 1e-12 * d.max():
        raise ValueError("data covariance is singular; cannot whiten")
    K = (E / np.sqrt(d)) @ E.T
    return Xc @ K.T, K


def _fixed_point(Z: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, bool]:
    n = Z.shape[0]
    for _ in range(MAX_ITER):
        Y = Z @ W.T
        G = np.tanh(Y)
        Gp = 1.0 - G * G
        W_new = _sym_decorrelate(G.T @ Z / n - Gp.mean(axis=0)[:, None] * W)
        done = np.min(np.abs(np.einsum("ij,ij->i", W_new, W))) > 1.0 - TOL
        W = W_new
        if done:
            return W, True
    return W, False


def fastica(t: Table | np.ndarray, seed: int = 0) -> np.ndarray:
    """Unmixing matrix ``W`` so that ``(X - mean) @ W.T`` has unit-variance,
    maximally independent columns.

    Symmetric fixed-point iteration with the ``tanh`` contrast, started from a
    seeded random orthogonal matrix. Up to three starts are tried.
    """
    X = t.values if isinstance(t, Table) else np.asarray(t, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("fastica needs at least two columns")
    Z, K = _whiten(X)
    p = X.shape[1]
    rng = np.random.default_rng(seed)
    for _ in range(RESTARTS):
        W0, _r = np.linalg.qr(rng.standard_normal((p, p)))
        W, ok = _fixed_point(Z, W0)
        if ok:
            return W @ K
    raise ConvergenceError(f"FastICA did not converge in {RESTARTS} x {MAX_ITER} iterations")


def amari_distance(P: np.ndarray) -> float:
    """Zero exactly when ``P`` is a scaled permutation; normalized to [0, 1]."""
    P = np.abs(np.asarray(P, dtype=float))
    p = P.shape[0]
    rows = (P.sum(axis=1) / P.max(axis=1) - 1).sum()
    cols = (P.sum(axis=0) / P.max(axis=0) - 1).sum()
    return float((rows + cols) / (2 * p * (p - 1)))


def _causal_order(B: np.ndarray) -> list[int]:
    p = B.shape[0]
    remaining = list(range(p))
    order = []
    while remaining:
        # most exogenous row: least weight on the variables still unplaced
        cost = [float(np.sum(B[i, remaining] ** 2) - B[i, i] ** 2) for i in remaining]
        k = int(np.argmin(cost))
        order.append(remaining.pop(k))
    return order


def ica_lingam(t: Table, seed: int = 0, prune_threshold: float = DEFAULT_PRUNE) -> LingamResult:
    """Estimate a weighted DAG; ``B[i, j]`` is the coefficient of ``j -> i``.

    Coefficients stay on the data's own scale. Pruning compares the
    standardized coefficient ``B[i, j] * sd_j / sd_i`` against the threshold.
    """
    if prune_threshold < 0:
        raise ValueError("prune_threshold must be non-negative")
    names = tuple(t.names)
    p = len(names)
    if p == 1:
        return LingamResult(names, np.zeros((1, 1)), MixedGraph(names))
    W = fastica(t, seed)
    cost = 1.0 / np.maximum(np.abs(W), 1e-300)
    rows, cols = linear_sum_assignment(cost)
    Wp = np.empty_like(W)
    Wp[cols] = W[rows]
    Wp = Wp / np.diag(Wp)[:, None]
    B = np.eye(p) - Wp
    order = _causal_order(B)
    rank = np.empty(p, dtype=int)
    rank[order] = np.arange(p)
    # keep only arcs from earlier to later in the order
    B = np.where(rank[None, :] < rank[:, None], B, 0.0)
    sd = t.values.std(axis=0)
    std_b = B * sd[None, :] / sd[:, None]
    B = np.where(np.abs(std_b) >= prune_threshold, B, 0.0)

    edges = [Edge(names[j], names[i], Mark.TAIL, Mark.ARROW, float(B[i, j]))
             for i in range(p) for j in range(p) if B[i, j] != 0.0]
    return LingamResult(tuple(names[k] for k in order), B, MixedGraph(names, edges))
