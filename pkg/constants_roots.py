# constants_roots.py

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from bound_curves import AM_BREAK_2, KAPPA_HI, KAPPA_LO, N_BREAK_1, N_BREAK_2
from core_math import (
    C_CRIT,
    C_KMM,
    C_MS,
    C_STAR,
    PI,
    DomainError,
    NumericalFailure,
    find_root,
    safe_arcsin,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-14
RESIDUAL_LIMIT = 1e-12
CROSS_CHECK_LIMIT = 1e-10

THETA_SINGLE = math.atan(2.0 / PI)
THETA_TWO_EQUAL = math.asin(2.0 / PI)
THETA_AM_DOUBLE = math.asin(4.0 * PI / (PI**2 + 4.0))

VARTHETA_BRACKET = (THETA_TWO_EQUAL, PI / 2.0)
KAPPA_BRACKET = (KAPPA_LO, KAPPA_HI)

# Points used to confirm a single sign change inside each bracket.
UNIQUENESS_SAMPLES = 1000


def vartheta_equation(theta: float) -> float:
    """(1 - 2/pi sin t)^2 - (1 - 2/pi sin(2t/3))^3; negative left of the root."""
    return (1.0 - 2.0 / PI * math.sin(theta)) ** 2 - (1.0 - 2.0 / PI * math.sin(2.0 * theta / 3.0)) ** 3


def kappa_equation(kappa: float) -> float:
    """Two-equal branch of N minus its three-equal branch, as a function of x."""
    u = 1.0 - 2.0 * kappa
    two = safe_arcsin(PI / 2.0 * (1.0 - math.sqrt(u)))
    three = 1.5 * safe_arcsin(PI / 2.0 * (1.0 - float(np.cbrt(u))))
    return two - three


def vartheta_sign_function(theta: float) -> float:
    """
    w(t) = sin(2t/3) - (pi/2 - pi/2 (1 - 2/pi sin t)^(2/3)).

    Vanishes exactly where vartheta_equation does; negative on (0, vartheta),
    positive on (vartheta, pi/2].
    """
    return math.sin(2.0 * theta / 3.0) - (PI / 2.0 - PI / 2.0 * (1.0 - 2.0 / PI * math.sin(theta)) ** (2.0 / 3.0))


def _count_sign_changes(values: np.ndarray) -> int:
    signs = np.sign(values)
    signs = signs[signs != 0.0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _require_single_crossing(name: str, f, lo: float, hi: float) -> None:
    grid = np.linspace(lo, hi, UNIQUENESS_SAMPLES)
    values = np.array([f(float(x)) for x in grid])
    changes = _count_sign_changes(values)
    if changes != 1:
        raise NumericalFailure(f"{name}: expected one sign change on [{lo!r}, {hi!r}], found {changes}")


def solve_vartheta(tol: float = DEFAULT_TOL) -> float:
    """Root of vartheta_equation on (arcsin(2/pi), pi/2), bracketed down to min(tol, DEFAULT_TOL)."""
    lo, hi = VARTHETA_BRACKET
    _require_single_crossing("solve_vartheta", vartheta_equation, lo, hi)
    root = find_root(vartheta_equation, lo, hi, min(tol, DEFAULT_TOL))
    residual = abs(vartheta_equation(root))
    if residual >= RESIDUAL_LIMIT:
        raise NumericalFailure(f"solve_vartheta: residual {residual!r} at {root!r}")
    return root


def solve_kappa(tol: float = DEFAULT_TOL) -> float:
    lo, hi = KAPPA_BRACKET
    _require_single_crossing("solve_kappa", kappa_equation, lo, hi)
    root = find_root(kappa_equation, lo, hi, min(tol, DEFAULT_TOL))
    residual = abs(kappa_equation(root))
    if residual >= RESIDUAL_LIMIT:
        raise NumericalFailure(f"solve_kappa: residual {residual!r} at {root!r}")
    return root


def cross_check_kappa_vartheta(kappa: float, vartheta: float) -> float:
    """|kappa - T(vartheta)| with T evaluated on its two-equal branch."""
    return abs(kappa - (0.5 - 0.5 * (1.0 - 2.0 / PI * math.sin(vartheta)) ** 2))


def scan_vartheta(points: int = 10**6) -> float:
    """
    Grid-scan estimate of vartheta, independent of the root finder.

    Locates the sign change of vartheta_equation on a uniform grid of the
    bracket and interpolates linearly inside the crossing cell.
    """
    if points < 3:
        raise DomainError("points must be >= 3")
    lo, hi = VARTHETA_BRACKET
    theta = np.linspace(lo, hi, points)
    h = (1.0 - 2.0 / PI * np.sin(theta)) ** 2 - (1.0 - 2.0 / PI * np.sin(2.0 * theta / 3.0)) ** 3
    crossing = np.flatnonzero((h[:-1] < 0.0) & (h[1:] >= 0.0))
    if crossing.size != 1:
        raise NumericalFailure(f"scan_vartheta: {crossing.size} crossings on the grid")
    i = int(crossing[0])
    return float(theta[i] - h[i] * (theta[i + 1] - theta[i]) / (h[i + 1] - h[i]))


def vartheta_sign_violations(vartheta: float, samples: int = 10**4, exclusion: float = 1e-9) -> int:
    """
    Number of grid points of (0, pi/2] where w has the wrong sign.

    Points within `exclusion` of vartheta are skipped.
    """
    theta = np.linspace(0.0, PI / 2.0, samples + 1)[1:]
    w = np.sin(2.0 * theta / 3.0) - (PI / 2.0 - PI / 2.0 * (1.0 - 2.0 / PI * np.sin(theta)) ** (2.0 / 3.0))
    left = theta < vartheta - exclusion
    right = theta > vartheta + exclusion
    return int(np.count_nonzero(left & (w >= 0.0)) + np.count_nonzero(right & (w <= 0.0)))


def closed_form_breakpoints() -> Dict[str, float]:
    return {
        "n_branch_1": N_BREAK_1,
        "n_branch_2": N_BREAK_2,
        "am_branch_2": AM_BREAK_2,
        "two_step_limit": KAPPA_HI,
        "theta_single": THETA_SINGLE,
        "theta_two_equal": THETA_TWO_EQUAL,
        "theta_am_double": THETA_AM_DOUBLE,
    }


@dataclass(frozen=True)
class SolvedConstants:
    kappa: float
    vartheta: float
    c_crit: float = C_CRIT
    c_star: float = C_STAR
    c_kmm: float = C_KMM
    c_ms: float = C_MS
    breakpoints: Dict[str, float] = field(default_factory=closed_form_breakpoints)

    def as_dict(self) -> Dict[str, object]:
        return {
            "kappa": self.kappa,
            "vartheta": self.vartheta,
            "c_crit": self.c_crit,
            "c_star": self.c_star,
            "c_kmm": self.c_kmm,
            "c_ms": self.c_ms,
            "breakpoints": dict(self.breakpoints),
        }


def compute_constants(tol: float = DEFAULT_TOL) -> SolvedConstants:
    """
    Solve for vartheta and kappa and bundle them with the closed-form constants.

    Raises NumericalFailure when a documented invariant does not hold.
    """
    vartheta = solve_vartheta(tol)
    kappa = solve_kappa(tol)

    if not (KAPPA_LO < kappa < KAPPA_HI):
        raise NumericalFailure(f"kappa={kappa!r} left its bracket")
    if not (VARTHETA_BRACKET[0] < vartheta < VARTHETA_BRACKET[1]):
        raise NumericalFailure(f"vartheta={vartheta!r} left its bracket")
    mismatch = cross_check_kappa_vartheta(kappa, vartheta)
    if mismatch >= CROSS_CHECK_LIMIT:
        raise NumericalFailure(f"kappa and vartheta disagree by {mismatch!r}")

    logger.info("compute_constants: kappa=%.15g vartheta=%.15g mismatch=%.3g", kappa, vartheta, mismatch)
    return SolvedConstants(kappa=kappa, vartheta=vartheta)
