# core_math.py

from __future__ import annotations

import logging
import math
from typing import Callable, Optional, Tuple

from scipy.optimize import brentq

logger = logging.getLogger(__name__)

Angle = float
Ratio = float

PI = math.pi

# Slack on closed intervals; absorbs round-off at the endpoints.
DOMAIN_SLACK = 1e-12

LAMBDA_MAX = 1.0 / PI
ANGLE_MAX = PI / 2.0
STEP_ANGLE_MAX = PI / 4.0

CONSTRAINT_PEAK_X = 2.0 / PI**2
CONSTRAINT_UNIT_X = 4.0 / (PI**2 + 4.0)
CONSTRAINT_PEAK = 1.0 / math.sqrt(1.0 - 4.0 / PI**2)

C_KMM = 2.0 / (2.0 + PI)
C_MS = math.sinh(1.0) / math.e
C_STAR = 16.0 * (PI**6 - 2.0 * PI**4 + 32.0 * PI**2 - 32.0) / (PI**2 + 4.0) ** 4
C_CRIT = (1.0 - (1.0 - math.sqrt(3.0) / PI) ** 3) / 2.0

ROOT_MAXITER = 200
DOUBLE_ROOT_WINDOW = 1e-12


class SubspaceLabError(Exception):
    code = "subspace_lab_error"

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        self.message = message
        if code:
            self.code = code


class DomainError(SubspaceLabError, ValueError):
    code = "domain_error"


class BoundaryEigenvalueError(DomainError):
    code = "boundary_eigenvalue"


class NotAProjectorError(DomainError):
    code = "not_a_projector"


class NumericalFailure(SubspaceLabError, RuntimeError):
    code = "numerical_failure"


class NoSignChangeError(NumericalFailure):
    code = "no_sign_change"


class NonFiniteEvaluationError(NumericalFailure):
    code = "non_finite_evaluation"


class RootFindingError(NumericalFailure):
    code = "root_not_converged"


class EigenConvergenceError(NumericalFailure):
    code = "eigen_not_converged"


def require_in_range(name: str, value: float, lo: float, hi: float, slack: float = DOMAIN_SLACK) -> float:
    """
    Validate lo <= value <= hi (with slack) and return value clamped into [lo, hi].
    """
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if value < lo - slack or value > hi + slack:
        raise DomainError(f"{name}={value!r} outside [{lo!r}, {hi!r}]")
    return min(max(value, lo), hi)


def safe_arcsin(v: float) -> float:
    # Arguments are mathematically in [-1, 1]; clip round-off only.
    return math.asin(min(1.0, max(-1.0, v)))


def step_cost(x: Ratio) -> Angle:
    """Per-step angle cost M(x) = 1/2 arcsin(pi x) on [0, 1/pi]."""
    x = require_in_range("x", x, 0.0, LAMBDA_MAX)
    return 0.5 * safe_arcsin(PI * x)


def inverse_step_cost(phi: Angle) -> Ratio:
    """Inverse of step_cost: the step parameter whose cost is phi."""
    phi = require_in_range("phi", phi, 0.0, STEP_ANGLE_MAX)
    return math.sin(2.0 * phi) / PI


def constraint_map(x: Ratio) -> float:
    """
    sqrt(1 - pi^2 x^2) / (1 - 2x) on [0, 1/pi].

    Equals 1 at 0 and at 4/(pi^2+4), 0 at 1/pi, and peaks at 2/pi^2.
    """
    x = require_in_range("x", x, 0.0, LAMBDA_MAX)
    return math.sqrt(max(0.0, 1.0 - (PI * x) ** 2)) / (1.0 - 2.0 * x)


def _preimage_pair(alpha: float) -> Tuple[Ratio, Ratio]:
    denom = PI**2 + 4.0 * alpha**2
    total = 4.0 * alpha**2 / denom
    product = (alpha**2 - 1.0) / denom
    disc = max(0.0, 0.25 * total**2 - product)
    large = 0.5 * total + math.sqrt(disc)
    small = product / large if large > 0.0 else 0.0
    return small, large


def constraint_preimages(alpha: float) -> Tuple[Ratio, Ratio]:
    """
    The two solutions of constraint_map(x) = alpha for 1 < alpha < m.

    Returns (small, large) with 0 < small < 2/pi^2 < large < 4/(pi^2+4).
    """
    if not math.isfinite(alpha) or alpha <= 1.0 or alpha >= CONSTRAINT_PEAK + DOUBLE_ROOT_WINDOW:
        raise DomainError(f"alpha={alpha!r} outside (1, {CONSTRAINT_PEAK!r})")
    if alpha > CONSTRAINT_PEAK - DOUBLE_ROOT_WINDOW:
        logger.debug("constraint_preimages: alpha=%r collapses to the double root 2/pi^2", alpha)
        return CONSTRAINT_PEAK_X, CONSTRAINT_PEAK_X
    return _preimage_pair(alpha)


def equal_step_value(theta: Angle, parts: int) -> float:
    """
    max W for `parts` equal step parameters sharing the angle budget theta.
    Returns 0 when the budget cannot be spread (theta > parts * pi/4).
    """
    if parts < 1:
        raise DomainError("parts must be >= 1")
    share = theta / parts
    if share > STEP_ANGLE_MAX + DOMAIN_SLACK:
        return 0.0
    s = math.sin(2.0 * min(share, STEP_ANGLE_MAX))
    return 0.5 - 0.5 * (1.0 - 2.0 / PI * s) ** parts


def find_root(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """
    Bracketed root of a continuous scalar function.

    Brent's method with a fixed iteration cap; raises instead of looping.
    """
    if not tol > 0.0:
        raise DomainError("tol must be > 0")
    if not lo < hi:
        raise DomainError(f"empty bracket [{lo!r}, {hi!r}]")

    def checked(x: float) -> float:
        v = f(x)
        if not math.isfinite(v):
            raise NonFiniteEvaluationError(f"f({x!r}) is not finite ({v!r})")
        return v

    f_lo = checked(lo)
    f_hi = checked(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise NoSignChangeError(f"no sign change on [{lo!r}, {hi!r}]: f(lo)={f_lo!r}, f(hi)={f_hi!r}")

    root, info = brentq(checked, lo, hi, xtol=tol, maxiter=ROOT_MAXITER, full_output=True, disp=False)
    if not info.converged:
        raise RootFindingError(f"root finder stopped after {info.iterations} iterations: {info.flag}")
    logger.debug("find_root: root=%r iterations=%s calls=%s", root, info.iterations, info.function_calls)
    return float(root)
