import math

import pytest

from bound_curves import AM_BREAK_2, KAPPA_HI, KAPPA_LO
from constants_roots import (
    THETA_AM_DOUBLE,
    THETA_SINGLE,
    THETA_TWO_EQUAL,
    SolvedConstants,
    closed_form_breakpoints,
    compute_constants,
    cross_check_kappa_vartheta,
    kappa_equation,
    scan_vartheta,
    solve_kappa,
    solve_vartheta,
    vartheta_equation,
    vartheta_sign_function,
    vartheta_sign_violations,
)
from core_math import C_CRIT, PI, DomainError


def test_vartheta_value():
    vartheta = solve_vartheta()
    assert vartheta == pytest.approx(1.1286942, abs=1e-7)
    assert THETA_TWO_EQUAL < vartheta < THETA_AM_DOUBLE
    assert abs(vartheta_equation(vartheta)) < 1e-12


def test_kappa_value():
    kappa = solve_kappa()
    assert kappa == pytest.approx(0.4098623, abs=1e-7)
    assert KAPPA_LO < kappa < AM_BREAK_2 < KAPPA_HI
    assert abs(kappa_equation(kappa)) < 1e-12


def test_loose_tolerance_still_meets_residual_limit():
    assert abs(vartheta_equation(solve_vartheta(1e-6))) < 1e-12
    assert abs(kappa_equation(solve_kappa(1e-6))) < 1e-12


def test_solvers_reject_non_positive_tol():
    with pytest.raises(DomainError):
        solve_vartheta(0.0)
    with pytest.raises(DomainError):
        solve_kappa(-1.0)


def test_kappa_is_the_optimum_at_vartheta(constants):
    assert cross_check_kappa_vartheta(constants.kappa, constants.vartheta) < 1e-10
    assert cross_check_kappa_vartheta(constants.kappa + 0.01, constants.vartheta) > 1e-3


def test_grid_scan_agrees_with_root_finder(constants):
    assert scan_vartheta() == pytest.approx(constants.vartheta, abs=1e-6)


def test_scan_needs_points():
    with pytest.raises(DomainError):
        scan_vartheta(2)


def test_sign_function_switches_at_vartheta(constants):
    assert vartheta_sign_violations(constants.vartheta) == 0
    assert vartheta_sign_function(constants.vartheta) == pytest.approx(0.0, abs=1e-12)
    assert vartheta_sign_function(1.0) < 0.0
    assert vartheta_sign_function(PI / 2.0) > 0.0
    assert vartheta_sign_violations(1.0) > 0


def test_closed_form_breakpoints():
    points = closed_form_breakpoints()
    assert set(points) == {
        "n_branch_1",
        "n_branch_2",
        "am_branch_2",
        "two_step_limit",
        "theta_single",
        "theta_two_equal",
        "theta_am_double",
    }
    assert points["theta_single"] == pytest.approx(math.atan(2.0 / PI), abs=1e-15)
    assert points["theta_am_double"] == pytest.approx(2.0 * THETA_SINGLE, abs=1e-12)
    assert points["n_branch_1"] < points["n_branch_2"] < points["am_branch_2"] < points["two_step_limit"]


def test_compute_constants(constants):
    assert isinstance(constants, SolvedConstants)
    assert constants.c_crit == C_CRIT
    data = constants.as_dict()
    assert set(data) == {"kappa", "vartheta", "c_crit", "c_star", "c_kmm", "c_ms", "breakpoints"}
    assert data["kappa"] == constants.kappa
    assert data["breakpoints"]["theta_two_equal"] == THETA_TWO_EQUAL


def test_compute_constants_is_stable_across_tolerances(constants):
    loose = compute_constants(1e-10)
    assert loose.kappa == pytest.approx(constants.kappa, abs=1e-12)
    assert loose.vartheta == pytest.approx(constants.vartheta, abs=1e-12)
