import math

import numpy as np
import pytest

from tcnoma.freedist import d_dm_sq, d_free_sq
from tcnoma.powalloc import (OPTIMAL_RATIO, optimal_powers_closed_form, optimal_powers_grid, ratio_sweep,
                             search_evaluator)
from tcnoma.product import PowerPair


def _equalizing_ratio():
    """Independent root of 4*p1 = d_dm(p1, 1 - p1) by bisection on the ratio."""
    def g(r):
        pp = PowerPair.from_ratio(r)
        return 4 * pp.p1 - d_dm_sq(pp)
    lo, hi = 0.1, 0.4
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(lo) * g(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_constant_matches_bisection():
    assert abs(OPTIMAL_RATIO - _equalizing_ratio()) < 1e-12
    assert abs(OPTIMAL_RATIO - 0.24042) < 1e-5


def test_closed_form_unit_budget():
    sol = optimal_powers_closed_form(1.0)
    assert abs(sol.ratio - 0.24042) < 1e-4
    assert abs(sol.p1_star - 0.1938) < 1e-3
    assert abs(sol.p2_star - 0.8062) < 1e-3
    assert math.isclose(sol.p1_star + sol.p2_star, 1.0)


def test_budget_scales_linearly():
    a, b = optimal_powers_closed_form(1.0), optimal_powers_closed_form(2.0)
    assert math.isclose(b.p1_star, 2 * a.p1_star) and math.isclose(b.ratio, a.ratio)
    assert math.isclose(b.d_free_sq_at_opt, 2 * a.d_free_sq_at_opt)


def test_equalization_at_optimum():
    sol = optimal_powers_closed_form(1.0)
    assert abs(4 * sol.p1_star - d_dm_sq((sol.p1_star, sol.p2_star))) <= 1e-6


def test_grid_lands_within_one_step():
    sol = optimal_powers_grid(1.0, step=0.001)
    assert abs(sol.ratio - OPTIMAL_RATIO) <= 0.001
    assert sol.d_free_sq_at_opt <= optimal_powers_closed_form().d_free_sq_at_opt + 1e-12


def test_closed_form_curve_is_unimodal():
    values = [d for _, d in ratio_sweep(1.0, np.arange(1, 100) * 0.01)]
    peak = int(np.argmax(values))
    assert all(np.diff(values[: peak + 1]) >= -1e-12)
    assert all(np.diff(values[peak:]) <= 1e-12)


def test_custom_evaluator_and_ties_prefer_smaller_ratio():
    sol = optimal_powers_grid(1.0, step=0.1, evaluator=lambda pp: 1.0)
    assert math.isclose(sol.ratio, 0.1)


@pytest.mark.parametrize("kwargs", [dict(budget=0.0), dict(step=0.0), dict(step=1.5), dict(evaluator="nope")])
def test_rejects_bad_arguments(kwargs):
    with pytest.raises(ValueError):
        optimal_powers_grid(**kwargs)


def test_search_evaluator_agrees_away_from_middle_band():
    ev = search_evaluator()
    for r in (0.1, 0.6):
        pp = PowerPair.from_ratio(r)
        assert abs(ev(pp) - d_free_sq(pp).d_free_sq) <= 1e-9


@pytest.mark.xfail(strict=True, reason="exhaustive search finds 5-step events below the closed form "
                                       "for ratios near 0.2-0.48; its argmax sits near 0.19")
def test_search_oracle_argmax_near_closed_form_optimum():
    sol = optimal_powers_grid(1.0, step=0.01, evaluator="search-oracle")
    assert abs(sol.ratio - OPTIMAL_RATIO) <= 0.01
