from typing import List

import numpy as np

MAX_ATTEMPTS = 8


def trial_seeds(base_seed: int, count: int) -> List[int]:
    """
    Seeds for `count` independent trials: base_seed, base_seed + 1, ...
    """
    if base_seed < 0:
        raise ValueError("seed must be >= 0")
    return [base_seed + i for i in range(count)]


def substream(seed: int, attempt: int = 0) -> np.random.Generator:
    """
    Generator for one trial. Attempt 0 is the plain seed; a resample
    (attempt >= 1) gets its own stream derived from (seed, attempt).
    """
    if seed < 0:
        raise ValueError("seed must be >= 0")
    if attempt == 0:
        return np.random.default_rng(seed)
    return np.random.default_rng([seed, attempt])


def haar_orthogonal(rng: np.random.Generator, dim: int) -> np.ndarray:
    """
    Random orthogonal matrix from the QR factorization of a standard normal
    matrix, with the column signs fixed so the distribution is uniform.
    """
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs
