# bound_curves.py

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from core_math import (
    C_CRIT,
    C_KMM,
    C_MS,
    C_STAR,
    CONSTRAINT_UNIT_X,
    DOMAIN_SLACK,
    PI,
    Angle,
    DomainError,
    Ratio,
    require_in_range,
    safe_arcsin,
)

# Breakpoints of M_* and N.
AM_BREAK_1 = CONSTRAINT_UNIT_X
AM_BREAK_2 = 8.0 * PI**2 / (PI**2 + 4.0) ** 2
N_BREAK_1 = CONSTRAINT_UNIT_X
N_BREAK_2 = 4.0 * (PI**2 - 2.0) / PI**4

# Admissible interval for a replacement of kappa (open).
KAPPA_LO = N_BREAK_2
KAPPA_HI = 2.0 * (PI - 1.0) / PI**2

_AM_DOUBLE = math.asin(4.0 * PI / (PI**2 + 4.0))


class BoundKind(str, Enum):
    KMM = "KMM"
    MS = "MS"
    AM = "AM"
    NEW = "NEW"


# CSV column names, in sweep order.
CURVE_COLUMNS: Dict[BoundKind, str] = {
    BoundKind.KMM: "f_KMM",
    BoundKind.MS: "f_MS",
    BoundKind.AM: "M_star",
    BoundKind.NEW: "N",
}


@dataclass(frozen=True)
class BoundDomain:
    kind: BoundKind
    limit: float
    closed: bool

    def contains(self, x: float) -> bool:
        if x < 0.0:
            return False
        if self.closed:
            return x <= self.limit + DOMAIN_SLACK
        return x < self.limit


@dataclass(frozen=True)
class CurveSample:
    x: Ratio
    values: Dict[BoundKind, Angle] = field(default_factory=dict)
    minimum: Optional[BoundKind] = None


_DOMAINS: Dict[BoundKind, BoundDomain] = {
    BoundKind.KMM: BoundDomain(BoundKind.KMM, C_KMM, closed=False),
    BoundKind.MS: BoundDomain(BoundKind.MS, C_MS, closed=False),
    BoundKind.AM: BoundDomain(BoundKind.AM, C_STAR, closed=True),
    BoundKind.NEW: BoundDomain(BoundKind.NEW, C_CRIT, closed=True),
}


def bound_domain(kind: BoundKind) -> BoundDomain:
    return _DOMAINS[BoundKind(kind)]


def _require_open(name: str, x: float, limit: float) -> None:
    if not math.isfinite(x) or x < 0.0 or x >= limit:
        raise DomainError(f"{name}: x={x!r} outside [0, {limit!r})")


def eval_kmm(x: Ratio) -> Angle:
    _require_open("eval_kmm", x, C_KMM)
    return safe_arcsin(PI / 2.0 * x / (1.0 - x))


def eval_ms(x: Ratio) -> Angle:
    _require_open("eval_ms", x, C_MS)
    return PI / 4.0 * -math.log1p(-2.0 * x)


def eval_am(x: Ratio) -> Angle:
    """Three-branch estimating function M_* on [0, c_*]."""
    x = require_in_range("x", x, 0.0, C_STAR)
    if x <= AM_BREAK_1:
        return 0.5 * safe_arcsin(PI * x)
    if x <= AM_BREAK_2:
        arg = PI * ((PI**2 + 4.0) * x - 4.0) / (PI**2 - 4.0)
        return 0.5 * _AM_DOUBLE + 0.5 * safe_arcsin(arg)
    arg = PI * ((PI**2 + 4.0) ** 2 * x - 8.0 * PI**2) / (PI**2 - 4.0) ** 2
    return _AM_DOUBLE + 0.5 * safe_arcsin(arg)


def _check_kappa(kappa: float) -> None:
    if not (KAPPA_LO < kappa < KAPPA_HI):
        raise DomainError(f"kappa={kappa!r} outside ({KAPPA_LO!r}, {KAPPA_HI!r})")


def eval_new(x: Ratio, kappa: float) -> Angle:
    """
    Four-branch estimating function N on [0, c_crit].

    kappa is the solved switching constant; any other value inside
    (4(pi^2-2)/pi^4, 2(pi-1)/pi^2) yields a valid but larger estimate.
    """
    _check_kappa(kappa)
    x = require_in_range("x", x, 0.0, C_CRIT)
    if x <= N_BREAK_1:
        return 0.5 * safe_arcsin(PI * x)
    if x < N_BREAK_2:
        return safe_arcsin(math.sqrt((2.0 * PI**2 * x - 4.0) / (PI**2 - 4.0)))
    if x <= kappa:
        return safe_arcsin(PI / 2.0 * (1.0 - math.sqrt(1.0 - 2.0 * x)))
    return 1.5 * safe_arcsin(PI / 2.0 * (1.0 - float(np.cbrt(1.0 - 2.0 * x))))


def evaluate(kind: BoundKind, x: Ratio, kappa: float) -> Optional[Angle]:
    """Evaluate one curve, or None when x lies outside its domain."""
    kind = BoundKind(kind)
    if not bound_domain(kind).contains(x):
        return None
    if kind is BoundKind.KMM:
        return eval_kmm(x)
    if kind is BoundKind.MS:
        return eval_ms(x)
    if kind is BoundKind.AM:
        return eval_am(x)
    return eval_new(x, kappa)


def compare_bounds(x: Ratio, kappa: float) -> CurveSample:
    x = require_in_range("x", x, 0.0, 0.5)
    values: Dict[BoundKind, Angle] = {}
    for kind in BoundKind:
        v = evaluate(kind, x, kappa)
        if v is not None:
            values[kind] = v
    minimum = min(values, key=lambda k: values[k]) if values else None
    return CurveSample(x=x, values=values, minimum=minimum)


def curve_sweep(x_from: float, x_to: float, points: int, kappa: float) -> List[CurveSample]:
    if points < 2:
        raise DomainError("points must be >= 2")
    if not (0.0 <= x_from < x_to <= 0.5):
        raise DomainError(f"sweep range [{x_from!r}, {x_to!r}] must satisfy 0 <= from < to <= 1/2")
    step = (x_to - x_from) / (points - 1)
    return [compare_bounds(min(x_from + i * step, x_to), kappa) for i in range(points)]


def kmm_chain_bound(x: Ratio, pieces: int) -> Angle:
    """
    Chain the local KMM estimate along a uniform partition of [0, x].

    Every summand is arcsin(min(1, pi/2 (t_{j+1} - t_j) / (1 - 2 t_{j+1}))).
    The sum decreases towards eval_ms(x) as pieces grows.
    """
    if pieces < 1:
        raise DomainError("pieces must be >= 1")
    _require_open("kmm_chain_bound", x, 0.5)
    total = 0.0
    for j in range(pieces):
        t0 = x * j / pieces
        t1 = x * (j + 1) / pieces
        total += safe_arcsin(min(1.0, PI / 2.0 * (t1 - t0) / (1.0 - 2.0 * t1)))
    return total
