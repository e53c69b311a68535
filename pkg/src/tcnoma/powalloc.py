"""Power allocation maximising the squared free distance under a sum budget."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .freedist import d_free_search, d_free_sq
from .product import PowerPair, tensor_product
from .trellis import Constellation, Trellis, build_ungerboeck_4state, psk8

__all__ = [
    "OPTIMAL_RATIO",
    "PowerSolution",
    "closed_form_evaluator",
    "optimal_powers_closed_form",
    "optimal_powers_grid",
    "ratio_sweep",
    "search_evaluator",
]

#: P1/P2 at which the parallel and diverge/merge distances of the 4-state code coincide.
OPTIMAL_RATIO = ((2 * math.sqrt(2) - math.sqrt(2 + math.sqrt(2))) / 2) ** 2


@dataclass(frozen=True)
class PowerSolution:
    p1_star: float
    p2_star: float
    ratio: float
    d_free_sq_at_opt: float


def optimal_powers_closed_form(budget: float = 1.0) -> PowerSolution:
    if not budget > 0:
        raise ValueError(f"budget must be positive, got {budget}")
    p1 = OPTIMAL_RATIO / (1 + OPTIMAL_RATIO) * budget
    p2 = budget - p1
    return PowerSolution(p1, p2, p1 / p2, d_free_sq((p1, p2)).d_free_sq)


def closed_form_evaluator(powers: PowerPair) -> float:
    return d_free_sq(powers).d_free_sq


def search_evaluator(t1: Trellis | None = None, t2: Trellis | None = None,
                     c1: Constellation | None = None, c2: Constellation | None = None,
                     max_len: int = 12) -> Callable[[PowerPair], float]:
    """Evaluator running the exhaustive search on ``t1 (x) t2``."""
    t1 = t1 or build_ungerboeck_4state()
    t2 = t2 or t1
    c1, c2 = c1 or psk8(), c2 or psk8()

    def evaluate(powers: PowerPair) -> float:
        return d_free_search(tensor_product(t1, t2, powers, c1, c2), max_len)

    return evaluate


def _evaluator(evaluator) -> Callable[[PowerPair], float]:
    if callable(evaluator):
        return evaluator
    if evaluator in ("closed-form", "closed_form"):
        return closed_form_evaluator
    if evaluator in ("search", "search-oracle"):
        return search_evaluator()
    raise ValueError(f"unknown evaluator {evaluator!r}")


def _grid(step: float) -> np.ndarray:
    n = int(math.floor((1 - 1e-12) / step))
    return np.arange(1, n + 1) * step


def ratio_sweep(budget: float, ratios, evaluator="closed-form") -> list[tuple[float, float]]:
    """``(ratio, d_free_sq)`` for each ratio with ``p1 + p2 = budget``."""
    ev = _evaluator(evaluator)
    return [(float(r), ev(PowerPair.from_ratio(float(r), budget))) for r in ratios]


def optimal_powers_grid(budget: float = 1.0, step: float = 0.001, evaluator="closed-form") -> PowerSolution:
    """Grid argmax of the free distance over P1/P2 in (0, 1), full budget spent.

    ``evaluator`` is ``"closed-form"``, ``"search-oracle"`` or a callable
    taking a :class:`PowerPair`. Ties go to the smaller ratio.
    """
    if not 0 < step < 1:
        raise ValueError(f"step must be in (0, 1), got {step}")
    if not budget > 0:
        raise ValueError(f"budget must be positive, got {budget}")
    best = None
    for r, d in ratio_sweep(budget, _grid(step), evaluator):
        if best is None or d > best[1]:
            best = (r, d)
    r, d = best
    pp = PowerPair.from_ratio(r, budget)
    return PowerSolution(pp.p1, pp.p2, r, d)
