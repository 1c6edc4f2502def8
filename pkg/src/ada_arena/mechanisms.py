"""Mechanisms: empirical mean, Gaussian-noise baseline, a referee-assisted
true-mean oracle, and an adapter that builds natural mechanisms.

Every mechanism follows the same two-call protocol used by the referee:
``bind(samples, rng, context)`` once, then ``answer(query)`` per round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .game import GameContext, Query, true_answer


class ConfigError(ValueError):
    pass


def empirical_answer(samples, q: Query) -> float:
    """Mean of ``q`` over the sample multiset."""
    values = q.evaluate_many(samples)
    if len(values) == 0:
        raise ValueError("empty sample set")
    return float(values.sum() / len(values))


def default_sigma(n: int, ell: int) -> float:
    """``sqrt(ell) * ln(n) / n``."""
    return math.sqrt(ell) * math.log(n) / n


@dataclass
class NoiseSchedule:
    sigma: float | list[float]
    clip: bool = True

    def __post_init__(self):
        sigmas = self.sigma if isinstance(self.sigma, list) else [self.sigma]
        if any(s < 0 or not math.isfinite(s) for s in sigmas):
            raise ConfigError(f"sigma must be finite and non-negative, got {self.sigma!r}")

    def at(self, round_index: int) -> float:
        if isinstance(self.sigma, list):
            return self.sigma[min(round_index, len(self.sigma) - 1)]
        return self.sigma


def gaussian_answer(samples, q: Query, sched: NoiseSchedule, rng: np.random.Generator,
                    round_index: int = 0) -> tuple[float, float]:
    """Noisy empirical mean; returns ``(answer, pre_clip)``.

    One normal draw is consumed per call even when sigma is 0, so the
    random stream does not depend on the schedule.
    """
    raw = empirical_answer(samples, q) + sched.at(round_index) * float(rng.standard_normal())
    return (min(1.0, max(-1.0, raw)) if sched.clip else raw), raw


class EmpiricalMean:
    name = "empirical"
    needs_distribution = False

    def bind(self, samples, rng, context: GameContext):
        self.samples = samples

    def answer(self, q: Query) -> float:
        return empirical_answer(self.samples, q)


class GaussianMechanism:
    """Empirical mean plus independent Gaussian noise per round.

    ``sigma=None`` uses :func:`default_sigma` for the game's ``(n, ell)``.
    The unclipped answers are kept in ``pre_clip``.
    """

    name = "gaussian"
    needs_distribution = False

    def __init__(self, sigma: float | list[float] | None = None, clip: bool = True):
        self.sigma = sigma
        self.clip = clip

    def bind(self, samples, rng, context: GameContext):
        self.samples = samples
        self.rng = rng
        sigma = default_sigma(context.n, context.ell) if self.sigma is None else self.sigma
        self.schedule = NoiseSchedule(sigma, self.clip)
        self.round = 0
        self.pre_clip: list[float] = []

    def answer(self, q: Query) -> float:
        y, raw = gaussian_answer(self.samples, q, self.schedule, self.rng, self.round)
        self.pre_clip.append(raw)
        self.round += 1
        return y


class TrueMeanOracle:
    """Answers ``q(D)`` exactly. Only for referee-assisted test runs."""

    name = "oracle"
    needs_distribution = True

    def bind(self, samples, rng, context: GameContext):
        if context.distribution is None:
            raise ConfigError("the true-mean oracle needs the referee to hand it D")
        self.dist = context.distribution

    def answer(self, q: Query) -> float:
        return true_answer(q, self.dist)


class ConstantMechanism:
    name = "constant"
    needs_distribution = False

    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def bind(self, samples, rng, context):
        pass

    def answer(self, q):
        return self.value


# -- natural mechanisms ----------------------------------------------------------


@dataclass(frozen=True)
class NaturalView:
    evals: np.ndarray

    def __post_init__(self):
        if not np.all(np.abs(self.evals) <= 1.0):
            raise ValueError("natural view entries must lie in [-1, 1]")


@dataclass
class InnerState:
    rng: np.random.Generator
    n: int
    ell: int
    round: int = 0
    memory: dict = field(default_factory=dict)


Inner = Callable[[NaturalView, InnerState], float]


class NaturalMechanism:
    """Answers through ``inner(NaturalView, state)``; the query object never reaches ``inner``."""

    needs_distribution = False

    def __init__(self, inner: Inner, name: str = "natural"):
        self.inner = inner
        self.name = name

    def bind(self, samples, rng, context: GameContext):
        self.samples = samples
        self.state = InnerState(rng, context.n, context.ell)

    def view(self, q: Query) -> NaturalView:
        return NaturalView(np.asarray(q.evaluate_many(self.samples), dtype=np.float64))

    def answer(self, q: Query) -> float:
        y = self.inner(self.view(q), self.state)
        self.state.round += 1
        return float(y)


def natural_adapt(inner: Inner, name: str = "natural") -> NaturalMechanism:
    return NaturalMechanism(inner, name)


def inner_mean(view: NaturalView, state: InnerState) -> float:
    return float(view.evals.sum() / len(view.evals))


def inner_zero(view: NaturalView, state: InnerState) -> float:
    return 0.0


def inner_median(view: NaturalView, state: InnerState) -> float:
    return float(np.median(view.evals))


def inner_gaussian(view: NaturalView, state: InnerState) -> float:
    """The Gaussian baseline written as a natural inner function."""
    y = inner_mean(view, state) + default_sigma(state.n, state.ell) * float(state.rng.standard_normal())
    return min(1.0, max(-1.0, y))


INNERS: dict[str, Inner] = {
    "mean": inner_mean,
    "zero": inner_zero,
    "median": inner_median,
    "gaussian": inner_gaussian,
}

MECHANISM_NAMES = ("empirical", "gaussian", "oracle", "zero") + tuple(f"natural:{k}" for k in INNERS)


def make_mechanism(spec: str, sigma: float | None = None, allow_oracle: bool = True):
    """Build a mechanism from a CLI-style name such as ``natural:mean``."""
    if spec == "empirical":
        return EmpiricalMean()
    if spec == "gaussian":
        return GaussianMechanism(sigma)
    if spec == "oracle":
        if not allow_oracle:
            raise ConfigError("the true-mean oracle is excluded from adversarial experiments")
        return TrueMeanOracle()
    if spec == "zero":
        return ConstantMechanism(0.0)
    if spec.startswith("natural:"):
        key = spec.split(":", 1)[1]
        if key not in INNERS:
            raise ConfigError(f"unknown natural inner {key!r}; choose from {sorted(INNERS)}")
        return natural_adapt(INNERS[key], spec)
    raise ConfigError(f"unknown mechanism {spec!r}; choose from {MECHANISM_NAMES}")
