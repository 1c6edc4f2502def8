"""Small statistics helpers shared by the experiments."""

from __future__ import annotations

import hashlib
import math

import numpy as np


def hoeffding(n: int, alpha: float) -> float:
    """``2 exp(-alpha^2 n / 2)``; the bound is vacuous (2) at ``alpha = 0``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= alpha <= 2:
        raise ValueError(f"alpha must lie in [0, 2], got {alpha}")
    return 2.0 * math.exp(-alpha * alpha * n / 2.0)


def wilson_interval(successes: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    from statsmodels.stats.proportion import proportion_confint

    if trials < 1:
        raise ValueError("need at least one trial")
    lo, hi = proportion_confint(successes, trials, alpha=1 - level, method="wilson")
    rate = successes / trials
    # float round-off can push the bounds just past the rate or out of [0, 1]
    return float(max(0.0, min(lo, rate))), float(min(1.0, max(hi, rate)))


def trial_seed(master: int, index: int) -> int:
    """Per-trial seed from a keyed hash of ``(master, index)``."""
    h = hashlib.blake2b(int(index).to_bytes(8, "big"), digest_size=8,
                        key=int(master).to_bytes(16, "big", signed=True))
    return int.from_bytes(h.digest(), "big") >> 1


def trial_rng(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(trial_seed(master, index))
