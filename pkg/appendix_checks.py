# appendix_checks.py

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from constants_roots import THETA_SINGLE, THETA_TWO_EQUAL
from core_math import CONSTRAINT_PEAK_X, CONSTRAINT_UNIT_X, PI, DomainError, Ratio, constraint_map

logger = logging.getLogger(__name__)

MIN_GRID = 1000
OPEN_END_LAYER = 1e-9
EQUALITY_LIMIT = 1e-10
A3_DERIVATIVE_STEP = 1e-6
A3_DERIVATIVE_RTOL = 1e-5
A3_THETA_UPPER_SLACK = 1e-12

A1A_LEFT = math.asin(1.0 / (PI - 1.0))
A1D_SPLIT = 2.0 * math.atan(1.0 / PI)
A3_CRITICAL_X = (12.0 + PI**2) / (8.0 * PI**2)
A3_THETA_LOWER = 1.5 * THETA_TWO_EQUAL
A3_THETA_UPPER = math.asin((12.0 + PI**2) / (8.0 * PI)) + 0.5 * math.asin((12.0 - PI**2) / (4.0 * PI))

A1_VARIANTS = ("a", "b", "c", "d", "e")
LEMMAS = ("a1a", "a1b", "a1c", "a1d", "a1e", "a2", "a3", "a4")


@dataclass(frozen=True)
class GridReport:
    lemma: str
    grid_size: int
    min_margin: float
    worst_point: float
    passed: bool
    details: Dict[str, float] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, object]:
        return {
            "lemma": self.lemma,
            "grid_size": self.grid_size,
            "min_margin": self.min_margin,
            "worst_point": self.worst_point,
            "passed": self.passed,
            "details": dict(self.details),
        }


def _require_grid(grid: int) -> None:
    if grid < MIN_GRID:
        raise DomainError(f"grid must be >= {MIN_GRID}, got {grid}")


def _sample(lo: float, hi: float, grid: int, left_layer: float, right_layer: float) -> np.ndarray:
    return np.linspace(lo + left_layer, hi - right_layer, grid)


def _report(
    lemma: str,
    points: np.ndarray,
    margin: np.ndarray,
    equality_residual: float,
    details: Optional[Dict[str, float]] = None,
    extra_ok: bool = True,
) -> GridReport:
    i = int(np.argmin(margin))
    min_margin = float(margin[i])
    info = {"equality_residual": equality_residual}
    info.update(details or {})
    passed = bool(min_margin > 0.0 and equality_residual < EQUALITY_LIMIT and extra_ok)
    if not passed:
        logger.warning("%s: check failed, min_margin=%r at %r", lemma, min_margin, float(points[i]))
    return GridReport(
        lemma=lemma,
        grid_size=int(points.size),
        min_margin=min_margin,
        worst_point=float(points[i]),
        passed=passed,
        details=info,
    )


# Both sides of each A.1 variant, vectorized over theta.

def _two_equal_side(t):
    s = np.sin(t)
    return 2.0 / PI * (1.0 - s / PI) * s


def _two_block_side(t):
    return 2.0 / PI**2 + (PI**2 - 4.0) / (2.0 * PI**2) * np.sin(t) ** 2


def _a1a_lhs(t):
    return 2.0 / PI**2 + (2.0 * PI - 4.0) / PI**2 * np.sin(t) ** 2


def _single_side(t):
    return np.sin(2.0 * t) / PI


def _a1_margin(variant: str) -> Callable[[np.ndarray], np.ndarray]:
    if variant == "a":
        return lambda t: _two_equal_side(t) - _a1a_lhs(t)
    if variant == "b":
        return lambda t: _two_block_side(t) - _single_side(t)
    if variant == "c":
        return lambda t: _two_block_side(t) - _two_equal_side(t)
    if variant == "d":
        return lambda t: _single_side(t) - _two_equal_side(t)
    if variant == "e":
        return lambda t: _two_equal_side(t) - _single_side(t)
    raise DomainError(f"unknown A.1 variant {variant!r}; expected one of {A1_VARIANTS}")


# (lo, hi, left layer, right layer, equality points)
_A1_DOMAINS: Dict[str, Tuple[float, float, float, float, Tuple[float, ...]]] = {
    "a": (A1A_LEFT, PI / 2.0, OPEN_END_LAYER, 1e-5, (A1A_LEFT, PI / 2.0)),
    "b": (THETA_SINGLE, PI / 4.0, 1e-6, 0.0, (THETA_SINGLE,)),
    "c": (0.0, PI, OPEN_END_LAYER, OPEN_END_LAYER, (THETA_TWO_EQUAL, PI - THETA_TWO_EQUAL)),
    "d": (0.0, A1D_SPLIT, 1e-6, OPEN_END_LAYER, (0.0, A1D_SPLIT)),
    "e": (A1D_SPLIT, PI, OPEN_END_LAYER, OPEN_END_LAYER, (A1D_SPLIT, PI)),
}
A1C_EXCLUSION = 1e-5


def check_A1(variant: str, grid: int) -> GridReport:
    _require_grid(grid)
    margin_fn = _a1_margin(variant)
    lo, hi, left, right, equalities = _A1_DOMAINS[variant]
    points = _sample(lo, hi, grid, left, right)
    if variant == "c":
        keep = np.ones(points.size, dtype=bool)
        for p in equalities:
            keep &= np.abs(points - p) > A1C_EXCLUSION
        points = points[keep]
    margin = margin_fn(points)
    residual = float(np.max(np.abs(margin_fn(np.array(equalities)))))
    return _report(f"a1{variant}", points, margin, residual, {"left_layer": left, "right_layer": right})


def _a2_terms(t):
    return (1.0 - 2.0 / PI * np.sin(t)) ** 2, (1.0 - 2.0 / PI * np.sin(2.0 * t / 3.0)) ** 3


A2_LEFT_LAYER = 1e-5
A2_ROOT_LAYER = 1e-7


def check_A2(grid: int, vartheta: float) -> GridReport:
    """Sign switch of (1 - 2/pi sin t)^2 - (1 - 2/pi sin(2t/3))^3 at vartheta."""
    _require_grid(grid)
    if not (THETA_TWO_EQUAL < vartheta < PI / 2.0):
        raise DomainError(f"vartheta={vartheta!r} outside (arcsin(2/pi), pi/2)")
    half = grid // 2
    below = _sample(0.0, vartheta, half, A2_LEFT_LAYER, A2_ROOT_LAYER)
    above = _sample(vartheta, PI / 2.0, grid - half, A2_ROOT_LAYER, 0.0)
    two_below, three_below = _a2_terms(below)
    two_above, three_above = _a2_terms(above)
    points = np.concatenate([below, above])
    margin = np.concatenate([three_below - two_below, two_above - three_above])
    two_v, three_v = _a2_terms(np.array([vartheta]))
    residual = float(abs(two_v[0] - three_v[0]))
    return _report("a2", points, margin, residual, {"left_layer": A2_LEFT_LAYER, "root_layer": A2_ROOT_LAYER})


def _a3_y(x):
    return (4.0 - (PI**2 + 4.0) * x) / (PI**2 + 4.0 - 4.0 * PI**2 * x)


def _a3_theta(x):
    return np.arcsin(PI * x) + 0.5 * np.arcsin(PI * _a3_y(x))


def _a3_theta_prime(x):
    return PI / (2.0 * np.sqrt(1.0 - PI**2 * x**2)) * (12.0 + PI**2 - 8.0 * PI**2 * x) / (PI**2 + 4.0 - 4.0 * PI**2 * x)


def _a3_w(x):
    theta = _a3_theta(x)
    return (1.0 - 2.0 * x) ** 2 * (1.0 - 2.0 * _a3_y(x)) - (1.0 - 2.0 / PI * np.sin(2.0 * theta / 3.0)) ** 3


def lemA3_parametrization(x: Ratio) -> Tuple[float, Ratio, float]:
    """
    (alpha, y, theta) for 2/pi^2 < x < 4/(pi^2+4).

    y is the second preimage of alpha = constraint_map(x); theta is the
    angle spent by the triple (x, x, y).
    """
    if not math.isfinite(x) or not (CONSTRAINT_PEAK_X < x < CONSTRAINT_UNIT_X):
        raise DomainError(f"x={x!r} outside ({CONSTRAINT_PEAK_X!r}, {CONSTRAINT_UNIT_X!r})")
    alpha = constraint_map(x)
    y = float(_a3_y(x))
    theta = math.asin(PI * x) + 0.5 * math.asin(PI * y)
    return alpha, y, theta


A3_LEFT_LAYER = 1e-4


def check_A3(grid: int) -> GridReport:
    """
    Two-sided bound on theta(x) and the cubic estimate on (2/pi^2, 4/(pi^2+4)).

    Also checks the closed-form theta' against central differences and that
    theta' changes sign once, at (12+pi^2)/(8 pi^2).
    """
    _require_grid(grid)
    x = _sample(CONSTRAINT_PEAK_X, CONSTRAINT_UNIT_X, grid, A3_LEFT_LAYER, OPEN_END_LAYER)
    theta = _a3_theta(x)
    y = _a3_y(x)

    lower_margin = theta - A3_THETA_LOWER
    upper_margin = float(np.min(A3_THETA_UPPER - theta))
    w = _a3_w(x)
    margin = np.minimum(w, lower_margin)

    h = A3_DERIVATIVE_STEP
    fd = (_a3_theta(x + h) - _a3_theta(x - h)) / (2.0 * h)
    exact = _a3_theta_prime(x)
    derivative_error = float(np.max(np.abs(fd - exact) / np.maximum(np.abs(exact), 1.0)))

    signs = np.sign(exact)
    flips = np.flatnonzero(signs[1:] != signs[:-1])
    spacing = float(x[1] - x[0])
    sign_ok = flips.size == 1 and abs(float(x[flips[0]]) - A3_CRITICAL_X) <= 2.0 * spacing

    alpha = np.sqrt(1.0 - PI**2 * x**2) / (1.0 - 2.0 * x)
    round_trip = float(np.max(np.abs(np.sqrt(1.0 - PI**2 * y**2) / (1.0 - 2.0 * y) - alpha)))
    identity = float(
        np.max(np.abs((1.0 - 2.0 * y) - (PI**2 - 4.0) / (PI**2 + 4.0 - 4.0 * PI**2 * x) * (1.0 - 2.0 * x)))
    )
    w_right = float(_a3_w(np.array([CONSTRAINT_UNIT_X]))[0])
    w_left = float(_a3_w(np.array([CONSTRAINT_PEAK_X]))[0])

    extra_ok = (
        upper_margin >= -A3_THETA_UPPER_SLACK
        and derivative_error <= A3_DERIVATIVE_RTOL
        and sign_ok
        and w_right > 0.0
        and round_trip < EQUALITY_LIMIT
        and identity < 1e-12
    )
    details = {
        "left_layer": A3_LEFT_LAYER,
        "theta_upper_margin": upper_margin,
        "derivative_error": derivative_error,
        "theta_prime_sign_changes": float(flips.size),
        "w_at_unit_x": w_right,
        "preimage_round_trip": round_trip,
        "y_identity_error": identity,
    }
    return _report("a3", x, margin, abs(w_left), details, extra_ok)


A4_LEFT_LAYER = 1e-5


def check_A4(grid: int) -> GridReport:
    _require_grid(grid)
    t = _sample(0.0, PI / 2.0, grid, A4_LEFT_LAYER, 0.0)

    def margin_fn(v):
        return (1.0 - 2.0 / PI * np.sin(v / 2.0)) ** 4 - (1.0 - 2.0 / PI * np.sin(2.0 * v / 3.0)) ** 3

    residual = float(abs(margin_fn(np.array([0.0]))[0]))
    return _report("a4", t, margin_fn(t), residual, {"left_layer": A4_LEFT_LAYER})


def check_lemma(lemma: str, grid: int, vartheta: float) -> GridReport:
    lemma = lemma.lower()
    if lemma.startswith("a1") and len(lemma) == 3:
        return check_A1(lemma[2], grid)
    if lemma == "a2":
        return check_A2(grid, vartheta)
    if lemma == "a3":
        return check_A3(grid)
    if lemma == "a4":
        return check_A4(grid)
    raise DomainError(f"unknown lemma {lemma!r}; expected one of {LEMMAS}")


def run_all(grid: int, vartheta: float) -> List[GridReport]:
    reports = [check_lemma(name, grid, vartheta) for name in LEMMAS]
    logger.info("run_all: %d/%d checks passed at grid=%d", sum(r.passed for r in reports), len(reports), grid)
    return reports

