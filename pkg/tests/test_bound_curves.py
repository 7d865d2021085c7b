import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bound_curves import (
    AM_BREAK_1,
    AM_BREAK_2,
    KAPPA_HI,
    KAPPA_LO,
    N_BREAK_1,
    N_BREAK_2,
    BoundKind,
    bound_domain,
    compare_bounds,
    curve_sweep,
    eval_am,
    eval_kmm,
    eval_ms,
    eval_new,
    evaluate,
    kmm_chain_bound,
)
from core_math import C_CRIT, C_KMM, C_MS, C_STAR, PI, DomainError

AM_DOUBLE = math.asin(4.0 * PI / (PI**2 + 4.0))


def test_curves_start_at_zero(constants):
    assert eval_kmm(0.0) == 0.0
    assert eval_ms(0.0) == 0.0
    assert eval_am(0.0) == 0.0
    assert eval_new(0.0, constants.kappa) == 0.0


def test_open_domains_reject_their_limit():
    with pytest.raises(DomainError):
        eval_kmm(C_KMM)
    with pytest.raises(DomainError):
        eval_ms(C_MS)
    with pytest.raises(DomainError):
        eval_am(C_STAR + 1e-6)


def test_closed_domains_reach_pi_over_2(constants):
    assert eval_am(C_STAR) == pytest.approx(PI / 2.0, abs=1e-7)
    assert eval_new(C_CRIT, constants.kappa) == pytest.approx(PI / 2.0, abs=1e-7)


@pytest.mark.parametrize("x", [AM_BREAK_1, AM_BREAK_2])
def test_am_is_continuous_at_breakpoints(x):
    assert eval_am(x) == pytest.approx(eval_am(x + 1e-13), abs=1e-9)
    assert eval_am(x) == pytest.approx(eval_am(x - 1e-13), abs=1e-9)


def test_am_breakpoint_values():
    assert eval_am(AM_BREAK_1) == pytest.approx(AM_DOUBLE / 2.0, abs=1e-14)
    assert eval_am(AM_BREAK_2) == pytest.approx(AM_DOUBLE, abs=1e-12)


def test_new_is_continuous_at_breakpoints(constants):
    kappa = constants.kappa
    for x in (N_BREAK_1, N_BREAK_2, kappa):
        assert eval_new(x, kappa) == pytest.approx(eval_new(x + 1e-13, kappa), abs=1e-9)
        assert eval_new(x, kappa) == pytest.approx(eval_new(x - 1e-13, kappa), abs=1e-9)
    assert eval_new(N_BREAK_2, kappa) == pytest.approx(math.asin(2.0 / PI), abs=1e-12)


def test_new_is_increasing(constants):
    xs = np.linspace(0.0, C_CRIT, 2001)
    values = [eval_new(float(x), constants.kappa) for x in xs]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_new_improves_every_other_curve(constants):
    for x in np.linspace(0.0, 0.5, 1001)[1:]:
        x = float(x)
        new = evaluate(BoundKind.NEW, x, constants.kappa)
        if new is None:
            continue
        for kind in (BoundKind.KMM, BoundKind.MS, BoundKind.AM):
            other = evaluate(kind, x, constants.kappa)
            if other is not None:
                assert new <= other + 1e-12, (kind, x)


def _one_sided_slopes(f, x, h=1e-7):
    return (f(x) - f(x - h)) / h, (f(x + h) - f(x)) / h


def test_new_is_smooth_at_branch_changes_but_kinks_at_kappa(constants):
    kappa = constants.kappa

    def new(x):
        return eval_new(x, kappa)

    for x in (N_BREAK_1, N_BREAK_2):
        left, right = _one_sided_slopes(new, x)
        assert abs(left - right) <= 1e-4 * abs(left)
    left, right = _one_sided_slopes(new, kappa)
    assert abs(left - right) > 1e-3 * abs(left)


def test_new_matches_am_on_first_branch(constants):
    for x in np.linspace(0.0, AM_BREAK_1, 1000):
        assert eval_new(float(x), constants.kappa) == pytest.approx(eval_am(float(x)), abs=1e-10)


def test_new_three_step_branch_uses_real_cube_root(constants):
    # 1 - 2x = 1/8 here.
    assert eval_new(0.4375, constants.kappa) == pytest.approx(1.5 * math.asin(PI / 4.0), abs=1e-15)


def test_new_is_strictly_better_than_am_past_first_branch(constants):
    for x in np.linspace(AM_BREAK_1 + 1e-3, C_STAR, 200):
        assert eval_new(float(x), constants.kappa) < eval_am(float(x))


@given(shift=st.floats(min_value=-0.0035, max_value=0.0035).filter(lambda s: abs(s) > 1e-6))
def test_replacement_kappa_never_beats_solved_kappa(constants, shift):
    alt = constants.kappa + shift
    if not (KAPPA_LO < alt < KAPPA_HI):
        return
    for x in np.linspace(N_BREAK_2, C_CRIT, 101):
        assert eval_new(float(x), alt) >= eval_new(float(x), constants.kappa) - 1e-12


def test_eval_new_rejects_kappa_outside_interval():
    with pytest.raises(DomainError):
        eval_new(0.1, KAPPA_LO)
    with pytest.raises(DomainError):
        eval_new(0.1, KAPPA_HI)


def test_evaluate_returns_none_outside_domain(constants):
    assert evaluate(BoundKind.KMM, 0.4, constants.kappa) is None
    assert evaluate(BoundKind.MS, 0.44, constants.kappa) is None
    assert evaluate(BoundKind.AM, 0.4545, constants.kappa) is None
    assert evaluate(BoundKind.NEW, 0.46, constants.kappa) is None
    assert evaluate("NEW", 0.2, constants.kappa) == eval_new(0.2, constants.kappa)


def test_bound_domain():
    assert bound_domain(BoundKind.AM).closed
    assert not bound_domain(BoundKind.KMM).closed
    assert bound_domain(BoundKind.NEW).contains(C_CRIT)
    assert not bound_domain(BoundKind.MS).contains(C_MS)


def test_compare_bounds(constants):
    sample = compare_bounds(0.44, constants.kappa)
    assert set(sample.values) == {BoundKind.AM, BoundKind.NEW}
    assert sample.minimum is BoundKind.NEW

    past_star = compare_bounds(0.4545, constants.kappa)
    assert set(past_star.values) == {BoundKind.NEW}

    beyond = compare_bounds(0.49, constants.kappa)
    assert beyond.values == {}
    assert beyond.minimum is None


def test_curve_sweep(constants):
    samples = curve_sweep(0.0, 0.5, 11, constants.kappa)
    assert len(samples) == 11
    assert samples[0].x == 0.0
    assert samples[-1].x == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(DomainError):
        curve_sweep(0.3, 0.2, 10, constants.kappa)
    with pytest.raises(DomainError):
        curve_sweep(0.0, 0.5, 1, constants.kappa)


def test_kmm_chain_bound_decreases_to_ms():
    x = 0.3
    previous = kmm_chain_bound(x, 1)
    assert previous == pytest.approx(PI / 2.0, abs=1e-15)
    for pieces in (2, 4, 16, 64, 256):
        current = kmm_chain_bound(x, pieces)
        assert current < previous
        assert current > eval_ms(x)
        previous = current
    assert kmm_chain_bound(x, 10**4) == pytest.approx(eval_ms(x), abs=1e-3)


def test_kmm_chain_bound_arguments():
    with pytest.raises(DomainError):
        kmm_chain_bound(0.3, 0)
    with pytest.raises(DomainError):
        kmm_chain_bound(0.5, 4)
