import logging
import os
from dataclasses import dataclass

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


@dataclass(frozen=True)
class LabConfig:
    log_level: str
    workers: int
    env: str


def get_lab_config() -> LabConfig:
    log_level = (os.getenv("SUBSPACE_LOG_LEVEL") or "WARNING").strip().upper()
    if log_level not in LOG_LEVELS:
        raise RuntimeError(f"SUBSPACE_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {log_level!r}")

    raw_workers = (os.getenv("SUBSPACE_WORKERS") or "1").strip()
    try:
        workers = int(raw_workers)
    except ValueError:
        raise RuntimeError(f"SUBSPACE_WORKERS must be an integer, got {raw_workers!r}")
    if workers < 1:
        raise RuntimeError("SUBSPACE_WORKERS must be >= 1")

    env = (os.getenv("SUBSPACE_ENV") or "LOCAL").strip().upper()

    return LabConfig(log_level=log_level, workers=workers, env=env)


def configure_logging(config: LabConfig) -> None:
    # Diagnostics go to stderr; stdout carries data only.
    logging.basicConfig(
        level=getattr(logging, config.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logger.info("subspace-lab env=%s log_level=%s workers=%s", config.env, config.log_level, config.workers)
