"""Fingerprinting attack against natural mechanisms.

The sampler always picks the uniform distribution over ``[c*n]``.  The
analyst runs an interactive fingerprinting code (IFPC): each round draws a
bias ``p ~ U[0, 1]`` and asks a random ``{-1, +1}`` table with ``P(+1) = p``
on every element it has not yet accused (accused elements get 0).  Each
answer ``y`` updates a correlation score per element,

    score[j] += (q(j) - mu) * (y - mu),      mu = 2p - 1,

which has mean zero for ``j`` outside the sample and mean ``4p(1-p)/n`` for
a sample point when the mechanism answers close to the empirical mean.  For
a non-sample element the conditional variance of the increment is exactly
``4p(1-p)(y - mu)^2``; summing it gives ``V`` and an element is accused once
``score[j] > tau * sqrt(V)``.  The last round asks ``sigma`` on unaccused
elements and 0 on accused ones, which a natural mechanism holding only
accused points cannot answer well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import DomainSpec, FiniteDistribution, TableQuery, run_game
from .stats import trial_seed

# Recommended (tau, rounds) per (n, c), frozen from ``calibrate``; see
# ``recommended_config`` for the fallback used off this grid.
CALIBRATED: dict[tuple[int, int], tuple[float, int]] = {
    (20, 20): (3.5, 512),
    (50, 20): (3.5, 1364),
    (200, 20): (3.5, 6131),
}

DEFAULT_TAU = 3.5


@dataclass
class AttackConfig:
    """Parameters of the IFPC attack.

    Attributes
    ----------
    c : int
        Domain multiplier, ``m = c * n``.
    rounds : int or None
        Total analyst budget ``ell~`` including the final query.  ``None``
        uses the calibrated value.
    tau : float or None
        Accusation z-score.  ``None`` uses the calibrated value.
    cap_factor : int
        Accusation cap is ``cap_factor * n``.
    burn_in : int or None
        No accusations before this many rounds (``None``: ``n``).
    """

    c: int = 2000
    rounds: int | None = None
    tau: float | None = None
    cap_factor: int = 2
    burn_in: int | None = None

    def __post_init__(self):
        if self.c < 4:
            raise ValueError(f"c must be >= 4 so that c*n >= 4n, got {self.c}")
        if self.rounds is not None and self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")

    def resolve(self, n: int) -> AttackConfig:
        """A copy with every ``None`` field filled in for sample size ``n``."""
        tau, rounds = recommended_config(n, self.c)
        return AttackConfig(self.c, self.rounds if self.rounds is not None else rounds,
                            self.tau if self.tau is not None else tau, self.cap_factor,
                            self.burn_in if self.burn_in is not None else n)


def recommended_config(n: int, c: int) -> tuple[float, int]:
    """``(tau, rounds)`` from the calibration table, else the scaling fit."""
    if (n, c) in CALIBRATED:
        return CALIBRATED[(n, c)]
    return DEFAULT_TAU, rounds_formula(n, DEFAULT_TAU)


def rounds_formula(n: int, tau: float) -> int:
    """Budget fitted to calibration runs against the empirical mean.

    Reconstruction time grows like ``tau^2 * n`` with a slowly growing
    factor for the slowest of the ``n`` sample points.
    """
    return int(math.ceil(n * tau * tau * (1.63 + 0.18 * math.log(n)))) + 1


def tilde_sampler(n: int, c: int = 2000) -> FiniteDistribution:
    """Uniform distribution over ``[c*n]``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return FiniteDistribution.uniform(DomainSpec.index(c * n))


@dataclass
class IfpcState:
    m: int
    n: int
    cap: int
    tau: float
    burn_in: int
    rng: np.random.Generator
    scores: np.ndarray = None
    accused: np.ndarray = None
    accused_at: np.ndarray = None
    variance: float = 0.0
    round: int = 0
    history: list = field(default_factory=list)
    pending: tuple | None = None

    def __post_init__(self):
        self.scores = np.zeros(self.m)
        self.accused = np.zeros(self.m, dtype=bool)
        self.accused_at = np.full(self.m, -1, dtype=np.int64)

    @property
    def accused_set(self) -> np.ndarray:
        return np.flatnonzero(self.accused)


def next_query(state: IfpcState, domain: DomainSpec) -> TableQuery:
    """Random biased ``{-1, +1}`` table with accused entries zeroed."""
    p = float(state.rng.random())
    values = np.where(state.rng.random(state.m) < p, 1.0, -1.0)
    values[state.accused] = 0.0
    state.pending = (p, values)
    return TableQuery(values, domain)


def process_answer(state: IfpcState, y: float) -> np.ndarray:
    """Update scores with answer ``y``; returns the newly accused indices."""
    if state.pending is None:
        raise RuntimeError("no query is pending")
    p, values = state.pending
    state.pending = None
    mu = 2 * p - 1
    # accused sample points answer 0; centre on what the rest should give
    d = y - mu * (1 - min(1.0, state.accused.sum() / state.n))
    live = ~state.accused
    state.scores[live] += (values[live] - mu) * d
    state.variance += 4 * p * (1 - p) * d * d
    state.history.append((p, y))
    state.round += 1
    if state.round < state.burn_in:
        return np.empty(0, dtype=np.int64)
    room = state.cap - int(state.accused.sum())
    if room <= 0:
        return np.empty(0, dtype=np.int64)
    over = np.flatnonzero(live & (state.scores > state.tau * math.sqrt(state.variance)))
    if over.size > room:
        over = over[np.argsort(-state.scores[over], kind="stable")[:room]]
    state.accused[over] = True
    state.accused_at[over] = state.round
    return over


def final_query(state: IfpcState, domain: DomainSpec) -> tuple[TableQuery, int]:
    """``sigma`` off the accused set and 0 on it, for a uniform random sign."""
    sigma = 1 if state.rng.random() < 0.5 else -1
    values = np.full(state.m, float(sigma))
    values[state.accused] = 0.0
    return TableQuery(values, domain), sigma


class IfpcAnalyst:
    """``rounds - 1`` IFPC rounds followed by the final query."""

    def __init__(self, n: int, rounds: int, domain: DomainSpec, config: AttackConfig,
                 rng: np.random.Generator):
        cfg = config.resolve(n)
        self.n = n
        self.rounds = rounds
        self.domain = domain
        self.state = IfpcState(domain.m, n, cfg.cap_factor * n, cfg.tau, cfg.burn_in, rng)
        self.asked = 0
        self.sigma = None
        self.last_query: TableQuery | None = None

    def next_query(self) -> TableQuery:
        if self.asked < self.rounds - 1:
            q = next_query(self.state, self.domain)
        else:
            q, self.sigma = final_query(self.state, self.domain)
        self.asked += 1
        self.last_query = q
        return q

    def absorb(self, y: float) -> None:
        if self.state.pending is not None:
            process_answer(self.state, y)

    def summary(self) -> dict:
        return {"accused": int(self.state.accused.sum()), "sigma": self.sigma}


class NaturalAdversary:
    """Sampler ``uniform over [c*n]`` plus the IFPC analyst.

    The game's ``ell`` is the analyst budget; ``config.rounds`` is only used
    by helpers that pick ``ell`` for the caller.
    """

    def __init__(self, config: AttackConfig | None = None):
        self.config = config or AttackConfig()
        # diagnostics for the harness; the analyst never reads these
        self.last_sample = None
        self.last_analyst = None

    def sample(self, n, ell, domain, rng):
        dist = tilde_sampler(n, self.config.c)
        if dist.domain != domain:
            raise ValueError(f"attack needs {dist.domain.describe()}, game runs on {domain.describe()}")
        self.last_sample = dist.sample(n, rng)
        return dist, self.last_sample

    def analyst(self, n, ell, domain, rng):
        self.last_analyst = IfpcAnalyst(n, ell, domain, self.config, rng)
        return self.last_analyst

    def reconstruction_round(self) -> int | None:
        """Round by which every sample point was accused in the last game."""
        at = self.last_analyst.state.accused_at[self.last_sample]
        return None if np.any(at < 0) else int(at.max())


def natural_attack_game(mech, n: int, config: AttackConfig, seed: int, *,
                        referee_assist: bool = False):
    cfg = config.resolve(n)
    adv = NaturalAdversary(cfg)
    result, transcript = run_game(mech, adv, n, cfg.rounds, DomainSpec.index(cfg.c * n), seed,
                                  referee_assist=referee_assist)
    result.info["reconstruction_round"] = adv.reconstruction_round()
    return result, transcript


def attack_success_probability(mech_factory, n: int, c: int = 2000, rounds: int | None = None,
                               trials: int = 100, seed: int = 0, tau: float | None = None,
                               referee_assist: bool = False) -> float:
    """Fraction of ``trials`` games with outcome 1.

    ``mech_factory`` is called once per trial so no state leaks between games.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = AttackConfig(c=c, rounds=rounds, tau=tau)
    wins = 0
    for i in range(trials):
        result, _ = natural_attack_game(mech_factory(), n, cfg, trial_seed(seed, i),
                                        referee_assist=referee_assist)
        wins += result.outcome
    return wins / trials


# -- calibration --------------------------------------------------------------------


@dataclass
class CalibrationTrial:
    """One IFPC run against the empirical mean with ``S`` known to the observer."""

    full_round: int | None
    half_round: int | None
    false_accusations: int
    max_nonmember_z: float


def simulate_ifpc(n: int, c: int, tau: float, rounds: int, seed: int,
                  burn_in: int | None = None, cap_factor: int = 2) -> CalibrationTrial:
    """Drive the IFPC directly against the empirical mean (no referee overhead)."""
    ss = np.random.SeedSequence(seed)
    sampler_rng, analyst_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    m = c * n
    sample = sampler_rng.integers(m, size=n)
    members = np.zeros(m, dtype=bool)
    members[sample] = True
    state = IfpcState(m, n, cap_factor * n, tau, n if burn_in is None else burn_in, analyst_rng)
    domain = DomainSpec.index(m)
    distinct = int(members.sum())
    full = half = None
    max_z = 0.0
    for _ in range(rounds):
        q = next_query(state, domain)
        process_answer(state, float(q.values[sample].sum() / n))
        if state.round >= state.burn_in and state.variance > 0:
            outside = ~members & ~state.accused
            max_z = max(max_z, float(state.scores[outside].max()) / math.sqrt(state.variance))
        hit = int((state.accused & members).sum())
        if half is None and 2 * hit >= distinct:
            half = state.round
        if hit == distinct:
            full = state.round
            break
    return CalibrationTrial(full, half, int((state.accused & ~members).sum()), max_z)


def calibrate(n: int, c: int, taus=(3.5, 4.0, 4.5, 5.0), trials: int = 50, seed: int = 0,
              max_rounds: int | None = None, coverage: float = 0.9,
              false_budget: float = 0.25) -> dict:
    """Pick ``tau`` and ``rounds`` for ``(n, c)``.

    For each ``tau`` the IFPC runs against the empirical mean until every
    sample point is accused.  The recommended ``tau`` is the smallest one
    whose mean number of false accusations stays under ``false_budget * n``;
    the recommended budget is the ``coverage`` quantile of the full
    reconstruction round, plus 20% and one round for the final query.
    """
    max_rounds = max_rounds or 10 * rounds_formula(n, max(taus))
    table = {}
    for tau in taus:
        runs = [simulate_ifpc(n, c, tau, max_rounds, trial_seed(seed, i)) for i in range(trials)]
        full = np.array([r.full_round if r.full_round is not None else np.inf for r in runs])
        table[tau] = {
            "full_quantile": float(np.quantile(full, coverage)),
            "full_median": float(np.median(full)),
            "false_mean": float(np.mean([r.false_accusations for r in runs])),
            "max_nonmember_z": float(np.median([r.max_nonmember_z for r in runs])),
        }
    ok = [t for t in taus if table[t]["false_mean"] <= false_budget * n and np.isfinite(table[t]["full_quantile"])]
    tau = min(ok) if ok else max(taus)
    rounds = int(math.ceil(1.2 * table[tau]["full_quantile"])) + 1 if np.isfinite(table[tau]["full_quantile"]) else None
    return {"n": n, "c": c, "tau": tau, "rounds": rounds, "table": table}
