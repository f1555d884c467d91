import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from upaquant.analysis import (FeedbackAllocation, allocate_feedback, allocation_scenarios,
                               allocation_table, analytic_report, combining_gain,
                               complexity_budget, cross_tone_correlation, expected_gain,
                               gamma_sq, gbc_closed, gbc_lattice, gbq_lower,
                               mean_expected_gain, order_stat_gain)
from upaquant.channel import PathSet, UpaGeometry, WidebandGrid, sample_paths, wideband_channel
from upaquant.codebooks import combiner_codebook
from upaquant.errors import InfeasibleBudgetError, InvalidInputError
from upaquant.oracles import mc_gamma_sq, mc_gbc, mc_gbc_argmax, mc_order_stat

BUDGET_ROWS = [
    ("proposed", (5, 4, 2), (21, 3072)),
    ("proposed", (5, 3, 2), (19, 1536)),
    ("proposed", (4, 3, 2), (17, 768)),
    ("enhanced_kp", (5, 5), (22, 2176)),
    ("enhanced_kp", (5, 4), (20, 1120)),
    ("kp", (11,), (22, 4096)),
]


def test_gamma_sq_examples():
    assert gamma_sq(1, 3) == 1.0
    assert abs(gamma_sq(8, 20) - 1) < 1e-6
    assert abs(gamma_sq(4, 2) - 0.7843) < 5e-4


def test_gamma_sq_matches_monte_carlo():
    assert abs(mc_gamma_sq(4, 2, 200_000, rng=3) - gamma_sq(4, 2)) < 0.005


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 32), st.integers(0, 10))
def test_gamma_sq_increasing_and_bounded(m_a, b):
    lo, hi = gamma_sq(m_a, b), gamma_sq(m_a, b + 1)
    assert 0 < lo < hi <= 1


def test_order_stat_gain_examples():
    assert order_stat_gain(1, 1) == 1
    assert math.isclose(order_stat_gain(3, 1), 11 / 6)
    assert math.isclose(order_stat_gain(5, 2), 77 / 60)
    assert abs(mc_order_stat(5, 100_000, rng=4)[1] - 77 / 60) < 0.01
    with pytest.raises(InvalidInputError):
        order_stat_gain(3, 4)


def test_gbq_lower_examples():
    geom = UpaGeometry(4, 4)
    for b in (2, 4):
        assert math.isclose(gbq_lower(geom, 1, [b]), gamma_sq(4, b) ** 2)
    assert abs(gbq_lower(geom, 3, [4]) - 1.8485) < 1e-4


def test_gbq_lower_non_increasing_in_m():
    vals = [gbq_lower(UpaGeometry(m, m), 4, [5, 4]) for m in range(4, 21)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_gbc_closed_examples():
    assert math.isclose(gbc_closed(1), 0.5, abs_tol=1e-15)
    assert abs(gbc_closed(2 ** 20) - 1) < 1e-10
    assert abs(gbc_closed(4) - 0.9502) < 1e-4
    assert abs(mc_gbc(4, 10_000, rng=5) - gbc_closed(4)) < 0.01


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4096))
def test_gbc_closed_increasing_and_bounded(u):
    assert 0.5 <= gbc_closed(u) < gbc_closed(u + 1) <= 1


def test_operational_selector_not_worse_than_nearest_phase():
    for b in (1, 2, 3):
        cb = combiner_codebook(np.eye(2), 2, b)
        assert mc_gbc_argmax(cb, 20_000, rng=6) >= gbc_closed(2 ** b) - 0.01


def test_combining_gain_cases():
    assert combining_gain(1, 3) == 1.0
    assert combining_gain(2, 2) == gbc_closed(4)
    # three beams: midpoint quadrature against a Monte Carlo draw with the same seeds
    for b in (1, 2, 3):
        cb = combiner_codebook(np.eye(3), 3, b)
        assert abs(combining_gain(3, b) - mc_gbc_argmax(cb, 200_000, rng=7)) < 0.005
    assert math.isclose(combining_gain(3, 0), 1 / 3, rel_tol=1e-9)
    # beyond the numeric limit the cell approximation takes over and stays monotone
    assert combining_gain(3, 4) < combining_gain(3, 5) == gbc_lattice(3, 32) < 1


def test_expected_gain_definitions():
    geom = UpaGeometry(4, 4)
    one = FeedbackAllocation((4,), 0)
    assert expected_gain(geom, 3, one) == gbq_lower(geom, 3, [4])
    two = FeedbackAllocation((4, 3), 2)
    assert expected_gain(geom, 3, two) == gbq_lower(geom, 3, [4, 3]) * gbc_closed(4)
    assert math.isclose(expected_gain(geom, 1, FeedbackAllocation((3,), 0)),
                        gamma_sq(4, 3) ** 2)


def test_allocation_validation():
    with pytest.raises(InvalidInputError):
        FeedbackAllocation((), 0)
    with pytest.raises(InvalidInputError):
        FeedbackAllocation((5, 4), 2, b_refine=4)
    a = FeedbackAllocation((5, 4), 2, b_refine=5)
    assert a.total == 20 and a.vector == (5, 4, 2)


def test_allocation_scenarios_exhaust_budget():
    scen = list(allocation_scenarios(6))
    assert all(a.total == 6 for a in scen)
    assert scen[0] == FeedbackAllocation((0,), 6)
    assert len({a.vector for a in scen}) == len(scen)
    assert max(a.n_beams for a in scen) == 3


def test_allocate_smallest_budget():
    alloc, val = allocate_feedback(UpaGeometry(4, 4), 2)
    assert alloc.vector == (1, 0)
    assert math.isclose(val, mean_expected_gain(UpaGeometry(4, 4), (3, 4, 5), alloc))
    with pytest.raises(InfeasibleBudgetError):
        allocate_feedback(UpaGeometry(4, 4), 1)


@pytest.mark.parametrize("m,b_total,expected", [
    (4, 16, (4, 3, 2)), (4, 20, (4, 4, 4)), (8, 20, (5, 4, 2)),
    (12, 16, (8, 0)), (20, 20, (10, 0)),
])
def test_allocate_frozen_choices(m, b_total, expected):
    alloc, val = allocate_feedback(UpaGeometry(m, m), b_total)
    assert alloc.vector == expected
    table = allocation_table(UpaGeometry(m, m), b_total)
    assert math.isclose(val, max(row["objective"] for row in table))


def test_complexity_budget_rows():
    for scheme, bits, expected in BUDGET_ROWS:
        assert complexity_budget(scheme, *bits) == expected
    with pytest.raises(InvalidInputError):
        complexity_budget("rvq", 4)


def test_cross_tone_correlation_basics():
    geom = UpaGeometry(4, 4)
    grid = WidebandGrid(32)
    hw = wideband_channel(geom, sample_paths(4, rng_seed=8), grid)
    lags, gh, gc = cross_tone_correlation(hw, geom, 4)
    assert lags[0] == 0 and math.isclose(gh[0], 1) and math.isclose(gc[0], 1)
    with pytest.raises(InvalidInputError):
        cross_tone_correlation(hw[:, :1], geom, 4)


def test_cross_tone_correlation_single_path_static_beam():
    geom = UpaGeometry(8, 8)
    hw = wideband_channel(geom, PathSet.single(0.21, -0.37), WidebandGrid(600))
    _, _, gc = cross_tone_correlation(hw, geom, 5, max_lag=50)
    assert gc.mean() > 0.99


def test_cross_tone_correlation_ordering():
    geom = UpaGeometry(8, 8)
    grid = WidebandGrid(600)
    rng = np.random.default_rng(9)
    gh, gc = [], []
    for _ in range(10):
        hw = wideband_channel(geom, sample_paths(4, rng=rng), grid)
        _, a, b = cross_tone_correlation(hw, geom, 4, max_lag=300)
        gh.append(a)
        gc.append(b)
    gh, gc = np.mean(gh, axis=0), np.mean(gc, axis=0)
    assert gh[1] > gh[100] and gh[1] > gh[300]
    assert gc.mean() > gh.mean()


def test_analytic_report_flags():
    rep = analytic_report(UpaGeometry(8, 8), 4, FeedbackAllocation((5, 4), 2))
    assert math.isclose(rep.g_total, rep.g_bq * rep.g_bc)
    assert 0.5 <= rep.g_bc <= 1 and all(0 < g <= 1 for g in rep.gamma_v)
    with pytest.warns(RuntimeWarning):
        rep = analytic_report(UpaGeometry(8, 8, d_v=0.8), 4, FeedbackAllocation((5, 4), 2))
    assert rep.notes
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = analytic_report(UpaGeometry(4, 4), 3, FeedbackAllocation((4, 3, 2), 2))
    assert any("numerically" in n for n in rep.notes)
