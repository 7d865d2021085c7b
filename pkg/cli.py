# cli.py

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import click

try:
    from dotenv import load_dotenv
    load_dotenv()
except Exception:
    pass

from appendix_checks import LEMMAS, MIN_GRID, check_lemma, run_all
from bound_curves import AM_BREAK_1, KAPPA_HI, KAPPA_LO, curve_sweep
from constants_roots import compute_constants
from core_math import ANGLE_MAX, C_CRIT, C_STAR, DomainError, NumericalFailure
from helpers import parse_float_list
from matrix_lab import path_experiment, run_experiment, sharpness_search, uniform_partition
from optimizer import (
    MAX_BRUTE_N,
    MIN_BRUTE_STEPS,
    T_closed,
    Tn_closed,
    am_comparison_points,
    brute_force_search,
    optimal_partition,
    truncation_check,
)
from services.config import configure_logging, get_lab_config
from services.export import emit_curve_csv, emit_experiment_csv, error_envelope, to_json
from version import APP_VERSION

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_NUMERICAL = 2

DEFAULT_TOL = 1e-12
DEFAULT_GRID = 10**4
DEFAULT_TRIALS = 10**3
DEFAULT_STEPS = 1500


class Subcommand(str, Enum):
    CONSTANTS = "constants"
    CURVE = "curve"
    OPTIMIZE = "optimize"
    BRUTE = "brute"
    VERIFY_APPENDIX = "verify-appendix"
    VERIFY_REMARK_AM = "verify-remark-am"
    EXPERIMENT = "experiment"
    PATH = "path"
    SHARPNESS = "sharpness"


@dataclass(frozen=True)
class RunConfig:
    subcommand: Subcommand
    theta: Optional[float] = None
    x: Optional[float] = None
    n: Optional[int] = None
    steps: int = DEFAULT_STEPS
    grid: int = DEFAULT_GRID
    dims: Tuple[int, ...] = ()
    ratio: Optional[float] = None
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    tol: float = DEFAULT_TOL
    output: Optional[str] = None
    fmt: str = "json"
    x_from: float = 0.0
    x_to: float = 0.5
    points: int = 500
    kappa: Optional[float] = None
    lemma: Optional[str] = None
    gap: float = 1.0
    split_sigma: bool = False
    csv_path: Optional[str] = None
    partition: Optional[str] = None
    pieces: Optional[int] = None
    optimal: bool = False
    check_truncation: bool = False
    seeds: int = 100
    workers: int = 1


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DomainError(message)


def _require_finite(name: str, value: Optional[float]) -> float:
    _require(value is not None, f"--{name} is required")
    _require(math.isfinite(value), f"--{name} must be finite")
    return value


def validate_config(config: RunConfig) -> None:
    """Check flags against the preconditions of the target operation."""
    sub = config.subcommand
    _require(config.tol > 0.0, "--tol must be > 0")
    _require(config.seed >= 0, "--seed must be >= 0")
    _require(config.fmt in ("json", "csv"), "--format must be json or csv")

    if sub is Subcommand.CURVE:
        _require(0.0 <= config.x_from < config.x_to <= 0.5, "need 0 <= --from < --to <= 0.5")
        _require(config.points >= 2, "--points must be >= 2")
        if config.kappa is not None:
            _require(KAPPA_LO < config.kappa < KAPPA_HI, f"--kappa must lie in ({KAPPA_LO}, {KAPPA_HI})")
    elif sub is Subcommand.OPTIMIZE:
        theta = _require_finite("theta", config.theta)
        _require(0.0 <= theta <= ANGLE_MAX, "--theta must lie in [0, pi/2]")
        _require(config.steps >= MIN_BRUTE_STEPS, f"--steps must be >= {MIN_BRUTE_STEPS}")
    elif sub is Subcommand.BRUTE:
        theta = _require_finite("theta", config.theta)
        _require(0.0 <= theta <= ANGLE_MAX, "--theta must lie in [0, pi/2]")
        _require(config.n is not None and 0 <= config.n <= MAX_BRUTE_N, f"--n must lie in [0, {MAX_BRUTE_N}]")
        _require(config.steps >= MIN_BRUTE_STEPS, f"--steps must be >= {MIN_BRUTE_STEPS}")
    elif sub is Subcommand.VERIFY_APPENDIX:
        _require(config.grid >= MIN_GRID, f"--grid must be >= {MIN_GRID}")
        _require(config.lemma is None or config.lemma.lower() in LEMMAS, f"--lemma must be one of {', '.join(LEMMAS)}")
    elif sub is Subcommand.VERIFY_REMARK_AM:
        x = _require_finite("x", config.x)
        _require(AM_BREAK_1 < x <= C_STAR, f"--x must lie in ({AM_BREAK_1}, {C_STAR}]")
    elif sub is Subcommand.EXPERIMENT:
        _require(len(config.dims) > 0 and all(d >= 2 for d in config.dims), "--dim must be >= 2")
        _require(config.ratio is None or 0.0 < config.ratio < C_CRIT, f"--ratio must lie in (0, {C_CRIT})")
        _require(config.trials >= 1, "--trials must be >= 1")
        _require(config.gap > 0.0, "--gap must be > 0")
    elif sub is Subcommand.PATH:
        _require(len(config.dims) == 1 and config.dims[0] >= 2, "--dim must be a single value >= 2")
        ratio = _require_finite("ratio", config.ratio)
        chosen = sum([config.partition is not None, config.pieces is not None, config.optimal])
        _require(chosen <= 1, "use only one of --partition, --pieces, --optimal")
        limit = C_CRIT if config.optimal else 0.5
        _require(0.0 < ratio < limit, f"--ratio must lie in (0, {limit})")
        _require(config.pieces is None or config.pieces >= 1, "--pieces must be >= 1")
        if config.partition is not None:
            try:
                parse_float_list(config.partition)
            except ValueError as e:
                raise DomainError(f"--partition: {e}")
    elif sub is Subcommand.SHARPNESS:
        _require(len(config.dims) == 1 and config.dims[0] >= 2, "--dim must be a single value >= 2")
        ratio = _require_finite("ratio", config.ratio)
        _require(0.0 < ratio < C_CRIT, f"--ratio must lie in (0, {C_CRIT})")
        _require(config.seeds >= 0, "--seeds must be >= 0")


def _ok(data) -> str:
    return to_json({"ok": True, "data": data})


def _run_constants(config: RunConfig) -> Tuple[str, bool]:
    return _ok(compute_constants(config.tol).as_dict()), True


def _run_curve(config: RunConfig) -> Tuple[str, bool]:
    kappa = config.kappa if config.kappa is not None else compute_constants(config.tol).kappa
    samples = curve_sweep(config.x_from, config.x_to, config.points, kappa)
    if config.fmt == "csv":
        return emit_curve_csv(samples), True
    rows = [
        {
            "x": s.x,
            "values": {k.value: v for k, v in s.values.items()},
            "minimum": s.minimum.value if s.minimum else None,
        }
        for s in samples
    ]
    return _ok({"kappa": kappa, "samples": rows}), True


def _run_optimize(config: RunConfig) -> Tuple[str, bool]:
    constants = compute_constants(config.tol)
    result = T_closed(config.theta, constants.vartheta)
    data = {
        "theta": result.theta,
        "value": result.value,
        "branch": result.branch.value,
        "argmax": list(result.argmax.params),
        "angle_spent": result.argmax.angle(),
    }
    ok = True
    if config.check_truncation:
        report = truncation_check(result.argmax, steps=config.steps)
        data["truncation"] = {
            "passed": report.passed,
            "worst_slack": report.worst_slack,
            "skipped": report.skipped,
            "prefixes": [
                {"k": e.k, "theta": e.theta, "value": e.value, "oracle": e.oracle, "slack": e.slack}
                for e in report.entries
            ],
        }
        ok = report.passed
    return _ok(data), ok


def _run_brute(config: RunConfig) -> Tuple[str, bool]:
    constants = compute_constants(config.tol)
    found = brute_force_search(config.theta, config.n, config.steps)
    closed = Tn_closed(config.theta, config.n, constants.vartheta)
    data = {
        "theta": found.theta,
        "n": found.n,
        "steps": found.steps,
        "value": found.value,
        "argmax": list(found.argmax.params) if found.argmax else None,
        "closed_form": closed,
        "difference": closed - found.value,
    }
    return _ok(data), True


def _run_verify_appendix(config: RunConfig) -> Tuple[str, bool]:
    vartheta = compute_constants(config.tol).vartheta
    if config.lemma:
        reports = [check_lemma(config.lemma, config.grid, vartheta)]
    else:
        reports = run_all(config.grid, vartheta)
    return _ok({"reports": [r.as_dict() for r in reports]}), all(r.passed for r in reports)


def _run_verify_remark_am(config: RunConfig) -> Tuple[str, bool]:
    constants = compute_constants(config.tol)
    lam, value = am_comparison_points(config.x)
    theta = lam.angle()
    optimum = T_closed(min(theta, ANGLE_MAX), constants.vartheta).value
    data = {
        "x": config.x,
        "theta": theta,
        "lambda": list(lam.params),
        "max_w": value,
        "optimum": optimum,
        "improvement": optimum - config.x,
    }
    return _ok(data), optimum > config.x


def _write_file(path: str, text: str) -> None:
    with click.open_file(path, "w") as fh:
        fh.write(text)


def _run_experiment(config: RunConfig) -> Tuple[str, bool]:
    constants = compute_constants(config.tol)
    summary = run_experiment(
        seed=config.seed,
        trials=config.trials,
        dims=config.dims,
        ratio=config.ratio,
        constants=constants,
        gap=config.gap,
        split_sigma=config.split_sigma,
        workers=config.workers,
    )
    if config.csv_path:
        _write_file(config.csv_path, emit_experiment_csv(r.as_dict() for r in summary.records))
    data = {
        "seed": summary.seed,
        "trials": summary.trials,
        "dims": list(config.dims),
        "ratio": config.ratio,
        "split_sigma": config.split_sigma,
        "violations": summary.violations,
        "worst_slack": summary.worst_slack,
        "inclusion_failures": summary.inclusion_failures,
        "acute_failures": summary.acute_failures,
        "passed": summary.passed,
    }
    return _ok(data), summary.passed


def _run_path(config: RunConfig) -> Tuple[str, bool]:
    ratio = config.ratio
    if config.partition is not None:
        ts: Sequence[float] = parse_float_list(config.partition)
    elif config.optimal:
        ts = list(optimal_partition(ratio, compute_constants(config.tol)).ts)
        # The generated end point reproduces ratio up to round-off.
        ts[-1] = ratio
    else:
        ts = uniform_partition(ratio, config.pieces or 4)
    report = path_experiment(config.seed, config.dims[0], config.gap, ratio, ts, config.split_sigma)
    return _ok(report.as_dict()), report.passed


def _run_sharpness(config: RunConfig) -> Tuple[str, bool]:
    constants = compute_constants(config.tol)
    record = sharpness_search(
        config.seeds, config.dims[0], config.ratio, constants, seed=config.seed, gap=config.gap
    )
    data = dict(record.as_dict())
    data["tightness"] = record.tightness
    data["base_seed"] = config.seed
    data["seeds"] = config.seeds
    return _ok(data), not record.violated


_RUNNERS = {
    Subcommand.CONSTANTS: _run_constants,
    Subcommand.CURVE: _run_curve,
    Subcommand.OPTIMIZE: _run_optimize,
    Subcommand.BRUTE: _run_brute,
    Subcommand.VERIFY_APPENDIX: _run_verify_appendix,
    Subcommand.VERIFY_REMARK_AM: _run_verify_remark_am,
    Subcommand.EXPERIMENT: _run_experiment,
    Subcommand.PATH: _run_path,
    Subcommand.SHARPNESS: _run_sharpness,
}


def _emit_error(code: str, message: str) -> None:
    click.echo(to_json(error_envelope(code, message)), err=True)


def dispatch(config: RunConfig) -> int:
    """
    Run one subcommand and write its output.

    Exit status: 0 ok, 1 domain or validation error, 2 numerical failure
    (including a check that ran but did not pass).
    """
    try:
        validate_config(config)
        text, ok = _RUNNERS[config.subcommand](config)
    except DomainError as e:
        _emit_error(e.code, e.message)
        return EXIT_DOMAIN
    except NumericalFailure as e:
        _emit_error(e.code, e.message)
        return EXIT_NUMERICAL
    except Exception:
        logging.exception("command failed (subcommand=%s)", config.subcommand.value)
        _emit_error("internal_error", "Command failed.")
        return EXIT_NUMERICAL

    if config.output:
        _write_file(config.output, text)
    else:
        click.echo(text, nl=not text.endswith("\n"))
    if not ok:
        logger.warning("%s: checks did not pass", config.subcommand.value)
        return EXIT_NUMERICAL
    return EXIT_OK


def _finish(config: RunConfig) -> None:
    click.get_current_context().exit(dispatch(config))


tol_option = click.option("--tol", type=float, default=DEFAULT_TOL, show_default=True, help="Root-finder tolerance.")
output_option = click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="Write to a file.")
seed_option = click.option("--seed", type=int, default=0, show_default=True)
gap_option = click.option("--gap", type=float, default=1.0, show_default=True, help="Spectral gap d.")


@click.group()
@click.version_option(APP_VERSION, prog_name="subspace-lab")
def cli():
    """Estimates for the rotation of spectral subspaces under perturbation."""


@cli.command("constants")
@tol_option
@output_option
def constants_cmd(tol, output):
    """Solve for kappa and vartheta and print every named constant."""
    _finish(RunConfig(Subcommand.CONSTANTS, tol=tol, output=output))


@cli.command("curve")
@click.option("--from", "x_from", type=float, default=0.0, show_default=True)
@click.option("--to", "x_to", type=float, default=0.5, show_default=True)
@click.option("--points", type=int, default=500, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv", show_default=True)
@click.option("--kappa", type=float, default=None, help="Replacement switching constant.")
@tol_option
@output_option
def curve_cmd(x_from, x_to, points, fmt, kappa, tol, output):
    """Sweep the four estimating functions over [from, to]."""
    _finish(
        RunConfig(
            Subcommand.CURVE, x_from=x_from, x_to=x_to, points=points, fmt=fmt, kappa=kappa, tol=tol, output=output
        )
    )


@cli.command("optimize")
@click.option("--theta", type=float, required=True)
@click.option("--check-truncation", is_flag=True, default=False)
@click.option("--steps", type=int, default=DEFAULT_STEPS, show_default=True)
@tol_option
@output_option
def optimize_cmd(theta, check_truncation, steps, tol, output):
    """Closed-form optimum T(theta) with a maximizer."""
    _finish(
        RunConfig(
            Subcommand.OPTIMIZE, theta=theta, check_truncation=check_truncation, steps=steps, tol=tol, output=output
        )
    )


@cli.command("brute")
@click.option("--theta", type=float, required=True)
@click.option("--n", "n", type=int, required=True)
@click.option("--steps", type=int, default=DEFAULT_STEPS, show_default=True)
@tol_option
@output_option
def brute_cmd(theta, n, steps, tol, output):
    """Lattice search for T_n(theta), compared with the closed form."""
    _finish(RunConfig(Subcommand.BRUTE, theta=theta, n=n, steps=steps, tol=tol, output=output))


@cli.command("verify-appendix")
@click.option("--lemma", type=click.Choice(list(LEMMAS), case_sensitive=False), default=None)
@click.option("--grid", type=int, default=DEFAULT_GRID, show_default=True)
@tol_option
@output_option
def verify_appendix_cmd(lemma, grid, tol, output):
    """Grid checks of the auxiliary inequalities."""
    _finish(RunConfig(Subcommand.VERIFY_APPENDIX, lemma=lemma, grid=grid, tol=tol, output=output))


@cli.command("verify-remark-am")
@click.option("--x", "x", type=float, required=True)
@tol_option
@output_option
def verify_remark_am_cmd(x, tol, output):
    """Show x < T(M_*(x)) with an explicit parameter sequence."""
    _finish(RunConfig(Subcommand.VERIFY_REMARK_AM, x=x, tol=tol, output=output))


@cli.command("experiment")
@click.option("--dim", "dims", type=int, multiple=True, default=(8,), show_default=True)
@click.option("--ratio", type=float, default=None, help="Fixed ||V||/d; random in (0, c_crit) when omitted.")
@click.option("--trials", type=int, default=DEFAULT_TRIALS, show_default=True)
@seed_option
@gap_option
@click.option("--split-sigma", is_flag=True, default=False)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None, help="Per-trial CSV.")
@tol_option
@output_option
def experiment_cmd(dims, ratio, trials, seed, gap, split_sigma, csv_path, tol, output):
    """Monte-Carlo check of the main estimate on random symmetric matrices."""
    config = get_lab_config()
    _finish(
        RunConfig(
            Subcommand.EXPERIMENT,
            dims=tuple(dims),
            ratio=ratio,
            trials=trials,
            seed=seed,
            gap=gap,
            split_sigma=split_sigma,
            csv_path=csv_path,
            tol=tol,
            output=output,
            workers=config.workers,
        )
    )


@cli.command("path")
@click.option("--dim", type=int, default=8, show_default=True)
@click.option("--ratio", type=float, required=True)
@seed_option
@gap_option
@click.option("--partition", default=None, help='Comma separated "0,t1,...,ratio".')
@click.option("--pieces", type=int, default=None, help="Uniform partition with this many steps.")
@click.option("--optimal", is_flag=True, default=False, help="Partition generated by the optimizer.")
@click.option("--split-sigma", is_flag=True, default=False)
@tol_option
@output_option
def path_cmd(dim, ratio, seed, gap, partition, pieces, optimal, split_sigma, tol, output):
    """Follow the spectral projection along A + t d V/||V||."""
    _finish(
        RunConfig(
            Subcommand.PATH,
            dims=(dim,),
            ratio=ratio,
            seed=seed,
            gap=gap,
            partition=partition,
            pieces=pieces,
            optimal=optimal,
            split_sigma=split_sigma,
            tol=tol,
            output=output,
        )
    )


@cli.command("sharpness")
@click.option("--dim", type=int, default=2, show_default=True)
@click.option("--ratio", type=float, required=True)
@click.option("--seeds", type=int, default=100, show_default=True)
@seed_option
@gap_option
@tol_option
@output_option
def sharpness_cmd(dim, ratio, seeds, seed, gap, tol, output):
    """Search for the trial closest to the bound."""
    _finish(RunConfig(Subcommand.SHARPNESS, dims=(dim,), ratio=ratio, seeds=seeds, seed=seed, gap=gap, tol=tol, output=output))


def main(argv: Optional[List[str]] = None) -> int:
    try:
        lab = get_lab_config()
    except RuntimeError as e:
        _emit_error("config_error", str(e))
        return EXIT_DOMAIN
    configure_logging(lab)

    try:
        rv = cli.main(args=argv, prog_name="subspace-lab", standalone_mode=False)
    except click.ClickException as e:
        _emit_error("usage_error", e.format_message())
        return EXIT_DOMAIN
    except click.Abort:
        _emit_error("aborted", "Aborted.")
        return EXIT_DOMAIN
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
