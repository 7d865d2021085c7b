# optimizer.py

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from bound_curves import AM_BREAK_1, eval_am, eval_new
from constants_roots import THETA_AM_DOUBLE, THETA_SINGLE, THETA_TWO_EQUAL, SolvedConstants
from core_math import (
    ANGLE_MAX,
    C_STAR,
    DOMAIN_SLACK,
    LAMBDA_MAX,
    PI,
    STEP_ANGLE_MAX,
    Angle,
    DomainError,
    Ratio,
    constraint_preimages,
    equal_step_value,
    require_in_range,
    step_cost,
)

logger = logging.getLogger(__name__)

MAX_BRUTE_N = 4
MIN_BRUTE_STEPS = 100
DEFAULT_BRUTE_STEPS = 1500
TRUNCATION_TOLERANCE = 1e-5
REFINE_XATOL = 1e-13
LATTICE_BLOCK_CELLS = 1 << 21


class Branch(str, Enum):
    SINGLE = "SINGLE"
    TWO_BLOCK = "TWO_BLOCK"
    TWO_EQUAL = "TWO_EQUAL"
    THREE_EQUAL = "THREE_EQUAL"


@dataclass(frozen=True)
class ParamSeq:
    """Step parameters lambda_0..lambda_n, each in [0, 1/pi]."""

    params: Tuple[Ratio, ...]

    def __post_init__(self):
        if len(self.params) == 0:
            raise DomainError("ParamSeq needs at least one parameter")
        clamped = tuple(require_in_range(f"lambda[{j}]", float(v), 0.0, LAMBDA_MAX) for j, v in enumerate(self.params))
        object.__setattr__(self, "params", clamped)

    @classmethod
    def of(cls, *values: float) -> "ParamSeq":
        return cls(tuple(values))

    @property
    def n(self) -> int:
        return len(self.params) - 1

    def angle(self) -> Angle:
        return sum(step_cost(v) for v in self.params)


@dataclass(frozen=True)
class Partition:
    ts: Tuple[float, ...]

    def __post_init__(self):
        ts = tuple(float(t) for t in self.ts)
        if not ts or ts[0] != 0.0:
            raise DomainError("partition must start at 0")
        for a, b in zip(ts, ts[1:]):
            if b < a:
                raise DomainError(f"partition not increasing: {a!r} > {b!r}")
        if ts[-1] >= 0.5:
            raise DomainError(f"partition reaches {ts[-1]!r} >= 1/2")
        object.__setattr__(self, "ts", ts)

    @property
    def end(self) -> float:
        return self.ts[-1]


@dataclass(frozen=True)
class OptResult:
    theta: Angle
    value: float
    argmax: ParamSeq
    branch: Branch


@dataclass(frozen=True)
class BruteForceResult:
    theta: Angle
    n: int
    steps: int
    value: float
    argmax: Optional[ParamSeq]
    lattice_step: float


@dataclass(frozen=True)
class TruncationEntry:
    k: int
    theta: Angle
    value: float
    oracle: float
    slack: float


@dataclass(frozen=True)
class TruncationReport:
    entries: List[TruncationEntry] = field(default_factory=list)
    worst_slack: float = 0.0
    tolerance: float = TRUNCATION_TOLERANCE
    skipped: List[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.skipped and self.worst_slack >= -self.tolerance


def apply_W(lam: ParamSeq) -> Partition:
    ts = [0.0]
    for x in lam.params:
        t = ts[-1]
        ts.append(t + x * (1.0 - 2.0 * t))
    return Partition(tuple(ts))


def max_W(lam: ParamSeq) -> float:
    """Last point of apply_W(lam): 1/2 (1 - prod(1 - 2 lambda_j))."""
    return 0.5 * (1.0 - math.prod(1.0 - 2.0 * x for x in lam.params))


def _require_theta(theta: Angle) -> Angle:
    return require_in_range("theta", theta, 0.0, ANGLE_MAX)


def T0_closed(theta: Angle) -> float:
    theta = _require_theta(theta)
    if theta > STEP_ANGLE_MAX + DOMAIN_SLACK:
        return 0.0
    return math.sin(2.0 * min(theta, STEP_ANGLE_MAX)) / PI


def _two_block_value(theta: Angle) -> float:
    return 2.0 / PI**2 + (PI**2 - 4.0) / (2.0 * PI**2) * math.sin(theta) ** 2


def T1_closed(theta: Angle) -> float:
    theta = _require_theta(theta)
    if theta <= THETA_SINGLE:
        return T0_closed(theta)
    if theta < THETA_TWO_EQUAL:
        return _two_block_value(theta)
    return equal_step_value(theta, 2)


def T2_closed(theta: Angle, vartheta: float) -> float:
    theta = _require_theta(theta)
    if theta <= vartheta:
        return T1_closed(theta)
    return equal_step_value(theta, 3)


def Tn_closed(theta: Angle, n: int, vartheta: float) -> float:
    """Optimal value with n + 1 parameters; nothing improves beyond n = 2."""
    if n < 0:
        raise DomainError("n must be >= 0")
    if n == 0:
        return T0_closed(theta)
    if n == 1:
        return T1_closed(theta)
    return T2_closed(theta, vartheta)


def T_closed(theta: Angle, vartheta: float) -> OptResult:
    """
    Optimal value T(theta) together with a maximizing parameter sequence.

    The regime boundaries are arctan(2/pi), arcsin(2/pi) and vartheta.
    """
    theta = _require_theta(theta)
    if theta <= THETA_SINGLE:
        argmax = ParamSeq.of(math.sin(2.0 * theta) / PI)
        branch = Branch.SINGLE
    elif theta < THETA_TWO_EQUAL:
        alpha = max(PI / 2.0 * math.tan(theta), math.nextafter(1.0, 2.0))
        small, large = constraint_preimages(alpha)
        argmax = ParamSeq.of(large, small)
        branch = Branch.TWO_BLOCK
    elif theta <= vartheta:
        lam = math.sin(theta) / PI
        argmax = ParamSeq.of(lam, lam)
        branch = Branch.TWO_EQUAL
    else:
        lam = math.sin(2.0 * theta / 3.0) / PI
        argmax = ParamSeq.of(lam, lam, lam)
        branch = Branch.THREE_EQUAL
    return OptResult(theta=theta, value=T2_closed(theta, vartheta), argmax=argmax, branch=branch)


def _params_from_angles(angles: Sequence[float]) -> ParamSeq:
    lam = sorted((math.sin(2.0 * min(max(a, 0.0), STEP_ANGLE_MAX)) / PI for a in angles), reverse=True)
    return ParamSeq(tuple(lam))


def _value_from_angles(angles: Sequence[float]) -> float:
    return 0.5 * (1.0 - math.prod(1.0 - 2.0 / PI * math.sin(2.0 * a) for a in angles))


def _min_plus_level(best: np.ndarray, cost: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """out[s] = min over k <= s of best[s - k] + cost[k], with the minimizing k."""
    size = best.size
    k = np.arange(size)
    out = np.empty(size)
    pick = np.empty(size, dtype=np.intp)
    # Blocks of s rows; peak memory is O(LATTICE_BLOCK_CELLS).
    rows = max(1, LATTICE_BLOCK_CELLS // size)
    for start in range(0, size, rows):
        s = np.arange(start, min(start + rows, size))
        diff = s[:, None] - k[None, :]
        valid = diff >= 0
        table = np.where(valid, best[np.where(valid, diff, 0)] + cost[None, :], np.inf)
        block_pick = np.argmin(table, axis=1)
        pick[s] = block_pick
        out[s] = table[np.arange(s.size), block_pick]
    return out, pick


def _lattice_search(theta: Angle, n: int, steps: int) -> Optional[List[float]]:
    """
    Best angle split on the lattice k * theta / steps, sum of k = steps.

    Minimizes sum log(1 - 2 lambda_j) level by level (min-plus convolution).
    Returns None when the lattice admits no feasible split.
    """
    h = theta / steps
    k = np.arange(steps + 1)
    phi = k * h
    cost = np.full(steps + 1, np.inf)
    feasible = phi <= STEP_ANGLE_MAX + DOMAIN_SLACK
    cost[feasible] = np.log1p(-2.0 / PI * np.sin(2.0 * np.minimum(phi[feasible], STEP_ANGLE_MAX)))

    best = cost.copy()
    choices: List[np.ndarray] = []
    for _ in range(n):
        best, pick = _min_plus_level(best, cost)
        choices.append(pick)

    if not np.isfinite(best[steps]):
        return None

    ks: List[int] = []
    s = steps
    for pick in reversed(choices):
        kj = int(pick[s])
        ks.append(kj)
        s -= kj
    ks.append(s)
    return [kj * h for kj in ks]


def _refine(angles: List[float], h: float) -> List[float]:
    """Exchange up to one lattice cell of angle between each coordinate and the last."""
    angles = list(angles)
    last = len(angles) - 1
    for i in range(last):
        lo = max(-h, -angles[i], angles[last] - STEP_ANGLE_MAX)
        hi = min(h, STEP_ANGLE_MAX - angles[i], angles[last])
        if not lo < hi:
            continue

        def objective(delta: float, i: int = i) -> float:
            trial = list(angles)
            trial[i] += delta
            trial[last] -= delta
            return -_value_from_angles(trial)

        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": REFINE_XATOL})
        if res.success and -res.fun > _value_from_angles(angles):
            angles[i] += float(res.x)
            angles[last] -= float(res.x)
    return angles


def brute_force_search(theta: Angle, n: int, steps: int = DEFAULT_BRUTE_STEPS) -> BruteForceResult:
    """
    Independent lower estimate of T_n(theta) by exhaustive lattice search.

    Every candidate satisfies the angle constraint exactly, so the value never
    exceeds the true optimum; it converges to it as steps grows.
    """
    theta = _require_theta(theta)
    if not (0 <= n <= MAX_BRUTE_N):
        raise DomainError(f"n must be in [0, {MAX_BRUTE_N}], got {n}")
    if steps < MIN_BRUTE_STEPS:
        raise DomainError(f"steps must be >= {MIN_BRUTE_STEPS}, got {steps}")

    parts = n + 1
    limit = parts * STEP_ANGLE_MAX
    h = theta / steps
    if theta > limit + DOMAIN_SLACK:
        return BruteForceResult(theta, n, steps, 0.0, None, h)
    if theta == 0.0:
        return BruteForceResult(theta, n, steps, 0.0, ParamSeq(tuple([0.0] * parts)), h)
    if theta >= limit - DOMAIN_SLACK:
        # Only the all-equal split is feasible.
        angles = [theta / parts] * parts
    else:
        angles = _lattice_search(theta, n, steps)
        if angles is None:
            logger.debug("brute_force_search: empty lattice at theta=%r n=%s steps=%s", theta, n, steps)
            angles = [theta / parts] * parts
        elif n > 0:
            angles = _refine(angles, h)

    value = _value_from_angles(angles)
    return BruteForceResult(theta, n, steps, value, _params_from_angles(angles), h)


def brute_force_Tn(theta: Angle, n: int, steps: int = DEFAULT_BRUTE_STEPS) -> float:
    return brute_force_search(theta, n, steps).value


def truncation_check(
    lam: ParamSeq, steps: int = DEFAULT_BRUTE_STEPS, tolerance: float = TRUNCATION_TOLERANCE
) -> TruncationReport:
    """
    Compare every prefix of lam with the oracle optimum for its own angle.

    Prefixes the oracle cannot judge (more than MAX_BRUTE_N + 1 entries, or
    an angle past pi/2) are listed in `skipped`, and the report then fails.
    """
    entries: List[TruncationEntry] = []
    skipped: List[int] = []
    theta = 0.0
    for k, x in enumerate(lam.params):
        theta += step_cost(x)
        if k > MAX_BRUTE_N or theta > ANGLE_MAX + DOMAIN_SLACK:
            skipped.append(k)
            continue
        value = max_W(ParamSeq(lam.params[: k + 1]))
        oracle = brute_force_Tn(min(theta, ANGLE_MAX), k, steps)
        entries.append(TruncationEntry(k=k, theta=theta, value=value, oracle=oracle, slack=value - oracle))
    if skipped:
        logger.warning("truncation_check: prefixes %s are outside the oracle's range", skipped)
    worst = min(e.slack for e in entries)
    return TruncationReport(entries=entries, worst_slack=worst, tolerance=tolerance, skipped=skipped)


def am_comparison_points(x: Ratio) -> Tuple[ParamSeq, float]:
    """
    A parameter sequence with angle M_*(x) whose max W equals x.

    Built from copies of 4/(pi^2+4) plus one remainder step, so that
    x < T(M_*(x)) exhibits the gap between M_* and N.
    """
    if not (AM_BREAK_1 < x <= C_STAR + DOMAIN_SLACK):
        raise DomainError(f"x={x!r} outside ({AM_BREAK_1!r}, {C_STAR!r}]")
    theta = eval_am(min(x, C_STAR))
    if theta <= THETA_AM_DOUBLE:
        lam = ParamSeq.of(AM_BREAK_1, math.sin(2.0 * theta - THETA_AM_DOUBLE) / PI)
    else:
        rest = min(2.0 * theta - 2.0 * THETA_AM_DOUBLE, ANGLE_MAX)
        lam = ParamSeq.of(AM_BREAK_1, AM_BREAK_1, math.sin(rest) / PI)
    return lam, max_W(lam)


def optimal_partition(x: Ratio, constants: SolvedConstants) -> Partition:
    """Partition of [0, x] generated by a maximizer for the angle N(x)."""
    theta = eval_new(x, constants.kappa)
    result = T_closed(min(theta, ANGLE_MAX), constants.vartheta)
    return apply_W(result.argmax)
