import math

import pytest

from appendix_checks import (
    A1_VARIANTS,
    A3_CRITICAL_X,
    LEMMAS,
    check_A1,
    check_A2,
    check_A3,
    check_A4,
    check_lemma,
    lemA3_parametrization,
    run_all,
)
from constants_roots import THETA_TWO_EQUAL
from core_math import CONSTRAINT_PEAK_X, CONSTRAINT_UNIT_X, PI, DomainError, constraint_map

AM_DOUBLE = math.asin(4.0 * PI / (PI**2 + 4.0))


def test_run_all_passes(constants):
    reports = run_all(10**4, constants.vartheta)
    assert [r.lemma for r in reports] == list(LEMMAS)
    failed = [r.as_dict() for r in reports if not r.passed]
    assert failed == []


@pytest.mark.slow
def test_run_all_passes_on_fine_grid(constants):
    assert all(r.passed for r in run_all(10**6, constants.vartheta))


@pytest.mark.parametrize("variant", A1_VARIANTS)
def test_check_A1_variants(variant):
    report = check_A1(variant, 5000)
    assert report.passed
    assert report.min_margin > 0.0
    assert report.details["equality_residual"] < 1e-10


def test_check_A1_equality_points_of_variant_d():
    report = check_A1("d", 2000)
    assert report.details["equality_residual"] < 1e-10


def test_check_A1_rejects_bad_arguments():
    with pytest.raises(DomainError):
        check_A1("z", 5000)
    with pytest.raises(DomainError):
        check_A1("a", 10)


def test_check_A2(constants):
    report = check_A2(5000, constants.vartheta)
    assert report.passed
    assert report.grid_size == 5000
    with pytest.raises(DomainError):
        check_A2(5000, 0.5)


def test_check_A2_fails_for_a_wrong_root(constants):
    assert not check_A2(5000, constants.vartheta + 1e-3).passed


def test_lemA3_parametrization_limits():
    alpha, y, theta = lemA3_parametrization(CONSTRAINT_PEAK_X + 1e-9)
    assert y == pytest.approx(CONSTRAINT_PEAK_X, abs=1e-6)
    assert theta == pytest.approx(1.5 * THETA_TWO_EQUAL, abs=1e-6)

    alpha, y, theta = lemA3_parametrization(CONSTRAINT_UNIT_X - 1e-9)
    assert alpha == pytest.approx(1.0, abs=1e-6)
    assert y == pytest.approx(0.0, abs=1e-6)
    assert theta == pytest.approx(AM_DOUBLE, abs=1e-6)


def test_lemA3_parametrization_shares_the_constraint_value():
    for x in (0.21, 0.24, A3_CRITICAL_X, 0.27):
        alpha, y, _ = lemA3_parametrization(x)
        assert constraint_map(y) == pytest.approx(alpha, abs=1e-10)
    _, y, _ = lemA3_parametrization(A3_CRITICAL_X)
    assert y == pytest.approx((12.0 - PI**2) / (4.0 * PI**2), abs=1e-12)


@pytest.mark.parametrize("x", [0.1, 0.3, CONSTRAINT_PEAK_X, float("nan")])
def test_lemA3_parametrization_domain(x):
    with pytest.raises(DomainError):
        lemA3_parametrization(x)


def test_check_A3_details():
    report = check_A3(5000)
    assert report.passed
    assert report.details["derivative_error"] <= 1e-5
    assert report.details["theta_prime_sign_changes"] == 1.0
    assert report.details["w_at_unit_x"] > 0.0
    assert report.details["theta_upper_margin"] >= -1e-12


def test_check_A4():
    report = check_A4(5000)
    assert report.passed
    assert report.worst_point > 0.0


def test_check_lemma_dispatch(constants):
    assert check_lemma("A1B", 1000, constants.vartheta).lemma == "a1b"
    assert check_lemma("a4", 1000, constants.vartheta).lemma == "a4"
    with pytest.raises(DomainError):
        check_lemma("a5", 1000, constants.vartheta)
