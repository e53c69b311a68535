"""Free distance of the superimposed product trellis.

Two independent routes: closed forms for the 4-state 8-PSK code, and an
exhaustive state-pair search that works for any product trellis. All
distances are squared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .product import ProductTrellis, as_power_pair

__all__ = [
    "DistanceReport",
    "SearchEvent",
    "d_dm_sq",
    "d_free_search",
    "d_free_sq",
    "d_parallel_sq",
    "free_distance_event",
]

SQRT2 = math.sqrt(2.0)


def _powers(powers):
    pp = as_power_pair(powers)
    return pp.p1, pp.p2


def d_parallel_sq(powers) -> float:
    """``min(2*sqrt(p2) - 2*sqrt(p1), 2*sqrt(p1))**2``; requires ``p1 <= p2``."""
    p1, p2 = _powers(powers)
    if p1 > p2:
        raise ValueError(f"closed form assumes p1 <= p2, got ({p1}, {p2})")
    return min(2 * math.sqrt(p2) - 2 * math.sqrt(p1), 2 * math.sqrt(p1)) ** 2


def d_diverge_sq(powers) -> float:
    p1, p2 = _powers(powers)
    return (math.sqrt(2 * p2) - 2 * math.sqrt(p1)) ** 2


def d_mid_sq(powers) -> float:
    p1, p2 = _powers(powers)
    return (2 - SQRT2) * p2 + min(0.0, 4 * p1 + 2 * math.sqrt(p1 * p2) * (SQRT2 - 2))


def d_dm_sq(powers) -> float:
    """Length-3 diverge/merge event: diverge + mid + merge (merge = diverge)."""
    p1, p2 = _powers(powers)
    if p1 > p2:
        raise ValueError(f"closed form assumes p1 <= p2, got ({p1}, {p2})")
    return (
        (6 - SQRT2) * p2 + 8 * p1 - 8 * math.sqrt(2 * p1 * p2)
        + min(0.0, 4 * p1 + 2 * math.sqrt(p1 * p2) * (SQRT2 - 2))
    )


@dataclass(frozen=True)
class DistanceReport:
    d_parallel_sq: float
    d_dm_sq: float
    d_free_sq: float
    argmin_event: str  # "parallel" or "diverge-merge"


def d_free_sq(powers) -> DistanceReport:
    """Closed-form free distance; ties are attributed to the parallel event."""
    dp, dm = d_parallel_sq(powers), d_dm_sq(powers)
    event = "parallel" if dp <= dm else "diverge-merge"
    return DistanceReport(dp, dm, min(dp, dm), event)


@dataclass(frozen=True)
class SearchEvent:
    """Result of the exhaustive search.

    ``dm_sq`` is ``inf`` when no diverge/merge event closes within
    ``max_len`` steps; ``paths`` then is None.
    """

    d_free_sq: float
    parallel_sq: float
    dm_sq: float
    dm_length: int | None
    paths: tuple[tuple[int, ...], tuple[int, ...]] | None

    @property
    def found_dm(self) -> bool:
        return math.isfinite(self.dm_sq)


def _branch_pair_weights(pt: ProductTrellis) -> np.ndarray:
    """``W[s, b, s', b']`` = min over label choices of ``|l - l'|^2``."""
    lab = pt.labels
    S, B, M = lab.shape
    diff = lab[:, :, :, None, None, None] - lab[None, None, None, :, :, :]
    d = diff.real**2 + diff.imag**2  # [s,b,m,s',b',m']
    return d.min(axis=(2, 5))


def _parallel_sq(pt: ProductTrellis) -> float:
    lab = pt.labels
    M = lab.shape[2]
    if M < 2:
        return math.inf
    diff = lab[:, :, :, None] - lab[:, :, None, :]
    d = diff.real**2 + diff.imag**2
    iu = np.triu_indices(M, 1)
    return float(d[:, :, iu[0], iu[1]].min())


def free_distance_event(pt: ProductTrellis, max_len: int = 12) -> SearchEvent:
    """Exhaustive free-distance search on the ordered state-pair graph.

    Parallel event: two distinct labels on one product branch. Diverge/merge
    event: two paths leave a common state on different branches and first
    meet again after at most ``max_len`` steps; branch pairs are weighted
    by their closest label pair.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    S, B = pt.next_state.shape
    ns = pt.next_state.astype(np.int64)
    W = _branch_pair_weights(pt)
    par = _parallel_sq(pt)

    # step 1: diverge from a common state on distinct branches
    s_i = np.arange(S)[:, None, None]
    b_i = np.arange(B)[None, :, None]
    c_i = np.arange(B)[None, None, :]
    w1 = W[s_i, b_i, s_i, c_i] + np.zeros((S, B, B))
    w1[:, np.arange(B), np.arange(B)] = np.inf
    tp = np.broadcast_to(ns[:, :, None], (S, B, B))
    tq = np.broadcast_to(ns[:, None, :], (S, B, B))

    best, best_k, best_end = math.inf, None, None
    merged = tp == tq
    if merged.any():
        v = float(w1[merged].min())
        if v < best:
            best, best_k, best_end = v, 1, None
    D = np.full((S, S), np.inf)
    open_ = ~merged
    np.minimum.at(D, (tp[open_], tq[open_]), w1[open_])
    history = [D]

    # [p, b, q, c] transitions between unmerged pairs
    np_ = np.broadcast_to(ns[:, :, None, None], (S, B, S, B))
    nq_ = np.broadcast_to(ns[None, None, :, :], (S, B, S, B))
    merge_mask = np_ == nq_
    for k in range(2, max_len + 1):
        prev = history[-1]
        cand = prev[:, None, :, None] + W  # [p,b,q,c]
        if merge_mask.any():
            v = float(cand[merge_mask].min())
            if v < best:
                best, best_k = v, k
        D = np.full((S, S), np.inf)
        keep = ~merge_mask
        np.minimum.at(D, (np_[keep], nq_[keep]), cand[keep])
        history.append(D)
        # every continuation costs >= 0, so nothing below best is left
        if not np.isfinite(D).any() or D.min() >= best:
            break

    paths = _trace(pt, W, history, best, best_k) if best_k is not None else None
    return SearchEvent(min(par, best), par, best, best_k, paths)


def _trace(pt, W, history, value, k):
    """Recover one pair of state sequences attaining ``value`` in ``k`` steps."""
    S, B = pt.next_state.shape
    ns = pt.next_state
    if k == 1:
        for s in range(S):
            for b in range(B):
                for c in range(B):
                    if b != c and ns[s, b] == ns[s, c] and W[s, b, s, c] == value:
                        return (s, int(ns[s, b])), (s, int(ns[s, c]))
        return None
    prev = history[k - 2]
    for p in range(S):
        for q in range(S):
            if not np.isfinite(prev[p, q]):
                continue
            for b in range(B):
                for c in range(B):
                    if ns[p, b] == ns[q, c] and prev[p, q] + W[p, b, q, c] == value:
                        head = _trace_open(pt, W, history, k - 1, p, q, prev[p, q])
                        m = int(ns[p, b])
                        return head[0] + (m,), head[1] + (m,)
    return None


def _trace_open(pt, W, history, k, p, q, value):
    S, B = pt.next_state.shape
    ns = pt.next_state
    if k == 1:
        for s in range(S):
            for b in range(B):
                for c in range(B):
                    if b != c and ns[s, b] == p and ns[s, c] == q and W[s, b, s, c] == value:
                        return (s, p), (s, q)
        raise RuntimeError("inconsistent search history")
    prev = history[k - 2]
    for a in range(S):
        for d in range(S):
            if a == d or not np.isfinite(prev[a, d]):
                continue
            for b in range(B):
                for c in range(B):
                    if ns[a, b] == p and ns[d, c] == q and prev[a, d] + W[a, b, d, c] == value:
                        head = _trace_open(pt, W, history, k - 1, a, d, prev[a, d])
                        return head[0] + (p,), head[1] + (q,)
    raise RuntimeError("inconsistent search history")


def d_free_search(pt: ProductTrellis, max_len: int = 12) -> float:
    """Squared free distance found by exhaustive search (see :func:`free_distance_event`)."""
    return free_distance_event(pt, max_len).d_free_sq
