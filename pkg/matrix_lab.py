# matrix_lab.py

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from bound_curves import eval_new
from constants_roots import SolvedConstants
from core_math import (
    C_CRIT,
    LAMBDA_MAX,
    PI,
    Angle,
    BoundaryEigenvalueError,
    DomainError,
    EigenConvergenceError,
    NotAProjectorError,
    NumericalFailure,
    safe_arcsin,
)
from utils.seeding import MAX_ATTEMPTS, haar_orthogonal, substream, trial_seeds

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
BOUNDARY_TOL = 1e-10
PROJECTOR_TOL = 1e-10
VIOLATION_TOL = 1e-9
ACUTE_MARGIN = 1e-6
SPREAD_FACTOR = 3.0

Matrix = np.ndarray


def _require_symmetric(mat: Matrix, tol: float = SYMMETRY_TOL) -> Matrix:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise DomainError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(mat)))) if mat.size else 1.0
    if np.max(np.abs(mat - mat.T), initial=0.0) > tol * scale:
        raise DomainError("matrix is not symmetric")
    return mat


def symmetric_eigen(mat: Matrix) -> Tuple[np.ndarray, Matrix]:
    """Eigenvalues in ascending order and orthonormal eigenvectors (columns)."""
    mat = _require_symmetric(mat)
    try:
        values, vectors = np.linalg.eigh(0.5 * (mat + mat.T))
    except np.linalg.LinAlgError as exc:
        raise EigenConvergenceError(f"eigensolver did not converge: {exc}") from exc
    return values, vectors


def operator_norm(mat: Matrix) -> float:
    """Spectral norm of a symmetric matrix: largest |eigenvalue|."""
    values, _ = symmetric_eigen(mat)
    return float(np.max(np.abs(values), initial=0.0))


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of disjoint open intervals; endpoints may be infinite."""

    intervals: Tuple[Tuple[float, float], ...] = ()

    @classmethod
    def real_line(cls) -> "IntervalSet":
        return cls(((-math.inf, math.inf),))

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def neighbourhood(cls, points: Iterable[float], radius: float) -> "IntervalSet":
        if radius <= 0.0:
            raise DomainError("radius must be > 0")
        spans = sorted((p - radius, p + radius) for p in points)
        merged: List[Tuple[float, float]] = []
        for lo, hi in spans:
            if merged and lo < merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        return cls(tuple(merged))

    def contains(self, value: float) -> bool:
        return any(lo < value < hi for lo, hi in self.intervals)

    def boundary_distance(self, value: float) -> float:
        ends = [e for span in self.intervals for e in span if math.isfinite(e)]
        return min((abs(value - e) for e in ends), default=math.inf)


def spectral_projection(mat: Matrix, interval_set: IntervalSet) -> Matrix:
    values, vectors = symmetric_eigen(mat)
    inside = []
    for i, v in enumerate(values):
        if interval_set.boundary_distance(v) < BOUNDARY_TOL:
            raise BoundaryEigenvalueError(f"eigenvalue {v!r} lies on the boundary of {interval_set.intervals}")
        if interval_set.contains(v):
            inside.append(i)
    q = vectors[:, inside]
    return q @ q.T


def _require_projector(p: Matrix, name: str) -> Matrix:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise NotAProjectorError(f"{name} is not square")
    if np.max(np.abs(p - p.T), initial=0.0) > PROJECTOR_TOL:
        raise NotAProjectorError(f"{name} is not symmetric")
    if np.max(np.abs(p @ p - p), initial=0.0) > PROJECTOR_TOL:
        raise NotAProjectorError(f"{name} is not idempotent")
    return p


def maximal_angle(p: Matrix, q: Matrix) -> Angle:
    """arcsin of the operator norm of p - q for orthogonal projectors p, q."""
    p = _require_projector(p, "P")
    q = _require_projector(q, "Q")
    if p.shape != q.shape:
        raise NotAProjectorError(f"shape mismatch {p.shape} vs {q.shape}")
    diff = p - q
    return safe_arcsin(operator_norm(0.5 * (diff + diff.T)))


@dataclass(frozen=True)
class SpectralProblem:
    dim: int
    a_matrix: Matrix
    sigma_values: Tuple[float, ...]
    rest_values: Tuple[float, ...]
    gap: float
    v_matrix: Matrix
    v_norm: float
    seed: Optional[int] = None

    @property
    def sigma_set(self) -> Tuple[int, ...]:
        """Indices of the sigma eigenvalues in ascending order of A's spectrum."""
        order = np.argsort(np.array(self.sigma_values + self.rest_values), kind="stable")
        k = len(self.sigma_values)
        return tuple(int(pos) for pos, idx in enumerate(order) if idx < k)

    def sigma_region(self) -> IntervalSet:
        return IntervalSet.neighbourhood(self.sigma_values, self.gap / 2.0)


@dataclass(frozen=True)
class AngleRecord:
    seed: Optional[int]
    dim: int
    ratio: float
    measured: Angle
    bound: Angle
    slack: float
    inclusion_excess: float = 0.0

    @property
    def violated(self) -> bool:
        return self.slack < -VIOLATION_TOL

    @property
    def acute(self) -> bool:
        return self.measured < PI / 2.0 - ACUTE_MARGIN

    @property
    def tightness(self) -> float:
        return self.measured / self.bound if self.bound > 0.0 else 0.0

    def as_dict(self):
        return {
            "seed": self.seed,
            "dim": self.dim,
            "ratio": self.ratio,
            "measured": self.measured,
            "bound": self.bound,
            "slack": self.slack,
        }


@dataclass(frozen=True)
class ExperimentSummary:
    seed: int
    trials: int
    records: List[AngleRecord] = field(default_factory=list)
    violations: int = 0
    worst_slack: float = math.inf
    inclusion_failures: int = 0
    acute_failures: int = 0

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.inclusion_failures == 0 and self.acute_failures == 0


def _random_values(rng: np.random.Generator, lo: float, hi: float, count: int) -> List[float]:
    return [float(v) for v in rng.uniform(lo, hi, count)] if count > 0 else []


def build_problem(
    rng: np.random.Generator, dim: int, gap: float, ratio: float, split_sigma: bool = False, seed: Optional[int] = None
) -> SpectralProblem:
    """
    Random A with spec(A) = sigma u Sigma, dist(sigma, Sigma) = gap, and a
    random symmetric V with ||V|| = ratio * gap.

    sigma sits in [-s, 0] and Sigma in [gap, gap + s]. With split_sigma (and
    dim >= 3) part of Sigma moves below sigma, so sigma is not subordinated.
    """
    if dim < 2:
        raise DomainError("dim must be >= 2")
    if not gap > 0.0:
        raise DomainError("gap must be > 0")
    if not (0.0 <= ratio < 0.5):
        raise DomainError(f"ratio={ratio!r} outside [0, 1/2)")

    split = split_sigma and dim >= 3
    k = int(rng.integers(1, dim - 1 if split else dim))
    spread = float(rng.uniform(0.0, SPREAD_FACTOR * gap))
    sigma_values = [0.0] + _random_values(rng, -spread, 0.0, k - 1)

    m = dim - k
    rest_values = [gap] + _random_values(rng, gap, gap + spread, m - 1)
    if split:
        moved = int(rng.integers(1, m))
        below_spread = float(rng.uniform(0.0, SPREAD_FACTOR * gap))
        top = -spread - gap
        for i in range(1, moved + 1):
            rest_values[i] = float(rng.uniform(top - below_spread, top))
        rest_values[1] = top

    eigenvalues = np.array(sigma_values + rest_values)
    q = haar_orthogonal(rng, dim)
    a = (q * eigenvalues) @ q.T
    a = 0.5 * (a + a.T)

    g = rng.standard_normal((dim, dim))
    v = 0.5 * (g + g.T)
    norm = operator_norm(v)
    v = v * (ratio * gap / norm) if norm > 0.0 else np.zeros_like(v)

    return SpectralProblem(
        dim=dim,
        a_matrix=a,
        sigma_values=tuple(sigma_values),
        rest_values=tuple(rest_values),
        gap=gap,
        v_matrix=v,
        v_norm=operator_norm(v),
        seed=seed,
    )


def _inclusion_excess(a_values: np.ndarray, b_values: np.ndarray, v_norm: float) -> float:
    """Largest distance from an eigenvalue of A+V to spec(A), minus ||V||."""
    dist = np.min(np.abs(b_values[:, None] - a_values[None, :]), axis=1)
    return float(np.max(dist) - v_norm)


def measure(problem: SpectralProblem, kappa: float, ratio: float) -> AngleRecord:
    region = problem.sigma_region()
    p0 = spectral_projection(problem.a_matrix, region)
    b = problem.a_matrix + problem.v_matrix
    p1 = spectral_projection(b, region)
    measured = maximal_angle(p0, p1)
    bound = eval_new(ratio, kappa)
    a_values, _ = symmetric_eigen(problem.a_matrix)
    b_values, _ = symmetric_eigen(b)
    return AngleRecord(
        seed=problem.seed,
        dim=problem.dim,
        ratio=ratio,
        measured=measured,
        bound=bound,
        slack=bound - measured,
        inclusion_excess=_inclusion_excess(a_values, b_values, problem.v_norm),
    )


def _check_trial_args(dim: int, gap: float, ratio: float) -> None:
    if dim < 2:
        raise DomainError("dim must be >= 2")
    if not gap > 0.0:
        raise DomainError("gap must be > 0")
    if not (0.0 < ratio < C_CRIT):
        raise DomainError(f"ratio={ratio!r} outside (0, {C_CRIT!r})")


def _problem_for_seed(seed: int, dim: int, gap: float, ratio: float, split_sigma: bool, measure_fn):
    for attempt in range(MAX_ATTEMPTS):
        rng = substream(seed, attempt)
        problem = build_problem(rng, dim, gap, ratio, split_sigma, seed=seed)
        try:
            return problem, measure_fn(problem)
        except BoundaryEigenvalueError as exc:
            logger.warning("seed %s attempt %s: %s; resampling", seed, attempt, exc.message)
    raise NumericalFailure(f"seed {seed}: no admissible construction after {MAX_ATTEMPTS} attempts")


def run_trial(
    seed: int,
    dim: int,
    gap: float,
    ratio: float,
    constants: SolvedConstants,
    split_sigma: bool = False,
    strict: bool = True,
) -> AngleRecord:
    """
    One randomized trial of the main estimate.

    With strict=True a violated bound raises NumericalFailure; sweeps pass
    strict=False and count violations instead.
    """
    _check_trial_args(dim, gap, ratio)
    _, record = _problem_for_seed(seed, dim, gap, ratio, split_sigma, lambda p: measure(p, constants.kappa, ratio))
    if record.violated:
        logger.error("seed %s: bound violated, measured=%r bound=%r", seed, record.measured, record.bound)
        if strict:
            raise NumericalFailure(f"seed {seed}: measured angle {record.measured!r} exceeds bound {record.bound!r}")
    return record


def analytic_trial(gap: float, v: float, constants: SolvedConstants) -> AngleRecord:
    """
    2x2 case A = diag(-gap/2, gap/2), V = v * [[0, 1], [1, 0]].

    The measured angle is 1/2 arctan(2v/gap).
    """
    if not gap > 0.0:
        raise DomainError("gap must be > 0")
    ratio = abs(v) / gap
    _check_trial_args(2, gap, ratio)
    a = np.diag([-gap / 2.0, gap / 2.0])
    vm = np.array([[0.0, v], [v, 0.0]])
    problem = SpectralProblem(
        dim=2,
        a_matrix=a,
        sigma_values=(-gap / 2.0,),
        rest_values=(gap / 2.0,),
        gap=gap,
        v_matrix=vm,
        v_norm=abs(v),
    )
    return measure(problem, constants.kappa, ratio)


def run_experiment(
    seed: int,
    trials: int,
    dims: Sequence[int],
    ratio: Optional[float],
    constants: SolvedConstants,
    gap: float = 1.0,
    split_sigma: bool = False,
    workers: int = 1,
) -> ExperimentSummary:
    """
    Monte-Carlo sweep; trial i uses seed + i and dims[i % len(dims)].

    ratio=None draws each trial's ratio uniformly from (0, c_crit) using the
    trial's own seed. Records come back in seed order for any worker count.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not dims:
        raise DomainError("dims must not be empty")
    if workers < 1:
        raise DomainError("workers must be >= 1")
    seeds = trial_seeds(seed, trials)

    def one(i: int) -> AngleRecord:
        trial_ratio = ratio
        if trial_ratio is None:
            # Stream index past the resample attempts, so ratios never reuse a trial stream.
            trial_ratio = float(np.random.default_rng([seeds[i], MAX_ATTEMPTS]).uniform(0.0, C_CRIT))
            trial_ratio = max(trial_ratio, 1e-9)
        return run_trial(seeds[i], dims[i % len(dims)], gap, trial_ratio, constants, split_sigma, strict=False)

    if workers == 1:
        records = [one(i) for i in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(one, range(trials)))

    summary = ExperimentSummary(
        seed=seed,
        trials=trials,
        records=records,
        violations=sum(r.violated for r in records),
        worst_slack=min(r.slack for r in records),
        inclusion_failures=sum(r.inclusion_excess > VIOLATION_TOL for r in records),
        acute_failures=sum(not r.acute for r in records),
    )
    logger.info(
        "run_experiment: seed=%s trials=%s violations=%s worst_slack=%.3g",
        seed,
        trials,
        summary.violations,
        summary.worst_slack,
    )
    return summary


def sharpness_search(
    seeds: int,
    dim: int,
    ratio: float,
    constants: SolvedConstants,
    seed: int = 0,
    gap: float = 1.0,
    split_sigma: bool = False,
) -> AngleRecord:
    """Record with the largest measured/bound over the analytic case and a seed sweep."""
    _check_trial_args(dim, gap, ratio)
    if seeds < 0:
        raise DomainError("seeds must be >= 0")
    best = analytic_trial(gap, ratio * gap, constants)
    for s in trial_seeds(seed, seeds):
        record = run_trial(s, dim, gap, ratio, constants, split_sigma, strict=False)
        if record.tightness > best.tightness:
            best = record
    return best


@dataclass(frozen=True)
class PathStep:
    t_from: float
    t_to: float
    lam: float
    norm: float
    angle: Angle
    local_bound: float
    rotation_bound: Optional[Angle]


@dataclass(frozen=True)
class GapCheck:
    t: float
    delta: float
    required: float


@dataclass(frozen=True)
class PathReport:
    seed: int
    dim: int
    ratio: float
    partition: Tuple[float, ...]
    steps: List[PathStep]
    gaps: List[GapCheck]
    total_angle: Angle
    chain_sum: Angle
    gap_ok: bool
    triangle_ok: bool
    local_ok: bool
    rotation_ok: bool

    @property
    def passed(self) -> bool:
        return self.gap_ok and self.triangle_ok and self.local_ok and self.rotation_ok

    def as_dict(self):
        return {
            "seed": self.seed,
            "dim": self.dim,
            "ratio": self.ratio,
            "partition": list(self.partition),
            "total_angle": self.total_angle,
            "chain_sum": self.chain_sum,
            "gap_ok": self.gap_ok,
            "triangle_ok": self.triangle_ok,
            "local_ok": self.local_ok,
            "rotation_ok": self.rotation_ok,
            "passed": self.passed,
            "steps": [
                {
                    "t_from": s.t_from,
                    "t_to": s.t_to,
                    "lambda": s.lam,
                    "angle": s.angle,
                    "local_bound": s.local_bound,
                    "rotation_bound": s.rotation_bound,
                }
                for s in self.steps
            ],
            "gaps": [{"t": g.t, "delta": g.delta, "required": g.required} for g in self.gaps],
        }


def _check_partition(partition: Sequence[float], ratio: float) -> Tuple[float, ...]:
    ts = tuple(float(t) for t in partition)
    if len(ts) < 2 or ts[0] != 0.0:
        raise DomainError("partition must start at 0 and contain at least two points")
    if any(b < a for a, b in zip(ts, ts[1:])):
        raise DomainError("partition must be increasing")
    if abs(ts[-1] - ratio) > 1e-12:
        raise DomainError(f"partition must end at ratio={ratio!r}, got {ts[-1]!r}")
    if ts[-1] >= 0.5:
        raise DomainError("partition must stay below 1/2")
    return ts


def uniform_partition(ratio: float, pieces: int) -> Tuple[float, ...]:
    if pieces < 1:
        raise DomainError("pieces must be >= 1")
    return tuple([ratio * j / pieces for j in range(pieces)] + [ratio])


def _separation(values: np.ndarray, region: IntervalSet) -> float:
    inside = np.array([v for v in values if region.contains(v)])
    outside = np.array([v for v in values if not region.contains(v)])
    if inside.size == 0 or outside.size == 0:
        return math.inf
    return float(np.min(np.abs(inside[:, None] - outside[None, :])))


def path_experiment(
    seed: int,
    dim: int,
    gap: float,
    ratio: float,
    partition: Sequence[float],
    split_sigma: bool = False,
) -> PathReport:
    """
    Follow P_t along B_t = A + t * gap * V/||V|| over the given partition.

    Checks the spectral gap bound delta_t >= (1 - 2t) gap, the triangle
    inequality for the maximal angle, the local KMM bound per step and the
    rotation bound 1/2 arcsin(pi lambda_j) on steps with lambda_j <= 1/pi.
    """
    if dim < 2:
        raise DomainError("dim must be >= 2")
    if not gap > 0.0:
        raise DomainError("gap must be > 0")
    if not (0.0 < ratio < 0.5):
        raise DomainError(f"ratio={ratio!r} outside (0, 1/2)")
    ts = _check_partition(partition, ratio)

    def projectors(problem: SpectralProblem):
        region = problem.sigma_region()
        direction = problem.v_matrix / problem.v_norm
        out = []
        for t in ts:
            b = problem.a_matrix + t * problem.gap * direction
            values, _ = symmetric_eigen(b)
            out.append((spectral_projection(b, region), _separation(values, region)))
        return out

    problem, results = _problem_for_seed(seed, dim, gap, ratio, split_sigma, projectors)

    gaps = [GapCheck(t=t, delta=delta, required=(1.0 - 2.0 * t) * gap) for t, (_, delta) in zip(ts, results)]
    steps: List[PathStep] = []
    for j in range(len(ts) - 1):
        t0, t1 = ts[j], ts[j + 1]
        p, q = results[j][0], results[j + 1][0]
        angle = maximal_angle(p, q)
        lam = (t1 - t0) / (1.0 - 2.0 * t0)
        steps.append(
            PathStep(
                t_from=t0,
                t_to=t1,
                lam=lam,
                norm=math.sin(angle),
                angle=angle,
                local_bound=min(1.0, PI / 2.0 * (t1 - t0) / (1.0 - 2.0 * t1)),
                rotation_bound=0.5 * safe_arcsin(PI * lam) if lam <= LAMBDA_MAX else None,
            )
        )

    total = maximal_angle(results[0][0], results[-1][0])
    chain = sum(s.angle for s in steps)
    report = PathReport(
        seed=seed,
        dim=dim,
        ratio=ratio,
        partition=ts,
        steps=steps,
        gaps=gaps,
        total_angle=total,
        chain_sum=chain,
        gap_ok=all(g.delta >= g.required - VIOLATION_TOL for g in gaps),
        triangle_ok=total <= chain + VIOLATION_TOL,
        local_ok=all(s.norm <= s.local_bound + VIOLATION_TOL for s in steps),
        rotation_ok=all(s.rotation_bound is None or s.angle <= s.rotation_bound + VIOLATION_TOL for s in steps),
    )
    if not report.passed:
        logger.warning("path_experiment: seed=%s failed checks %s", seed, report.as_dict())
    return report
