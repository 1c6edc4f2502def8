"""Key agreement from a balanced adversary.

Approximate agreement: party P1 plays the sampler and answers every query
with the empirical mean over its first ``n`` samples ``S``; party P2 runs
the analyst.  P1 outputs the last query's mean over a second sample ``S'``,
P2 outputs the last inner query's mean over ``[m]`` (its extractor ``F``).

Weak key agreement: both parties shift their value by a shared random offset
``v``, round to a grid of spacing ``gamma`` and output the inner product of
the grid index with a shared random string ``r``.  :func:`gl_decode` turns a
good predictor of that bit back into the grid index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .balanced import BalancedAttack, balanced_domain
from .bits import BitString
from .fingerprint import AttackConfig
from .game import RoundRecord, Transcript, game_streams, true_answer
from .ibe import IbeScheme, make_scheme
from .mechanisms import ConfigError, empirical_answer


class ExtractionError(Exception):
    pass


def agreement_radius(n: int) -> float:
    """``2 n^(-1/10)``."""
    return 2.0 * n ** -0.1


# -- approximate agreement ------------------------------------------------------------


@dataclass
class ApproxAgreementRun:
    transcript: Transcript
    o1: float
    o2: float
    hidden: float | None = None

    @property
    def gap(self) -> float:
        return abs(self.o1 - self.o2)


def extractor_F(view) -> float:
    """Mean over ``[m]`` of the last inner query in a completed analyst view."""
    tq = getattr(view, "last_inner_query", None)
    if tq is None:
        tq = getattr(view, "last_query", None)
    if tq is None:
        raise ExtractionError("the analyst view holds no final query")
    return float(tq.values.sum() / len(tq.values))


class Channel:
    """In-memory link between the two parties; records every message."""

    def __init__(self, transcript: Transcript):
        self.transcript = transcript
        self.round = 0

    def exchange(self, query, p1, audit: bool = True) -> float:
        y = p1.respond(query)
        truth = p1.audit(query) if audit else math.nan
        self.transcript.rounds.append(RoundRecord(self.round, query.digest(), y, truth, abs(y - truth)))
        self.round += 1
        return y


class Party1:
    """Sampler side: holds ``D``, ``S`` and ``S'``; answers with means over ``S``."""

    def __init__(self, adversary, n, ell, domain, rng, same_sample=False):
        self.dist, self.S = adversary.sample(n, ell, domain, rng)
        self.S2 = self.S if same_sample else self.dist.sample(n, rng)
        self.last = None

    def respond(self, query) -> float:
        self.last = query
        return min(1.0, max(-1.0, empirical_answer(self.S, query)))

    def audit(self, query) -> float:
        # referee-style bookkeeping so the transcript format matches a game
        return true_answer(query, self.dist)

    def output(self) -> float:
        return empirical_answer(self.S2, self.last)


def run_approx_agreement(adversary, n: int, ell: int, domain, seed: int, F=extractor_F,
                         same_sample: bool = False, audit: bool = True) -> ApproxAgreementRun:
    """Run the two-party protocol with the game's random streams.

    P2's analyst and P1's sampler draw from exactly the streams
    :func:`~ada_arena.game.run_game` would give them, so the transcript
    equals the game transcript against the empirical mean.  With
    ``audit=False`` true answers are only computed for the last round.
    """
    streams = game_streams(seed)
    analyst = adversary.analyst(n, ell, domain, streams.analyst)
    p1 = Party1(adversary, n, ell, domain, streams.sampler, same_sample)
    channel = Channel(Transcript(n, ell, domain))
    for i in range(ell):
        analyst.absorb(channel.exchange(analyst.next_query(), p1, audit or i == ell - 1))
    hidden = channel.transcript.rounds[-1].true_answer
    return ApproxAgreementRun(channel.transcript, p1.output(), F(analyst), hidden)


def balanced_agreement(n: int, seed: int, lam: int = 16, c: int = 20, rounds: int | None = None,
                       scheme: str | IbeScheme = "compact", same_sample: bool = False,
                       config: AttackConfig | None = None, audit: bool = True) -> ApproxAgreementRun:
    ibe = make_scheme(scheme) if isinstance(scheme, str) else scheme
    cfg = (config or AttackConfig(c=c)).resolve(n)
    domain = balanced_domain(ibe, n, lam, cfg.c)
    ell = (rounds if rounds is not None else cfg.rounds) + domain.key_bits
    return run_approx_agreement(BalancedAttack(ibe, lam, cfg), n, ell, domain, seed,
                                same_sample=same_sample, audit=audit)


# -- eavesdroppers ----------------------------------------------------------------


class LastAnswerEcho:
    name = "last-answer"
    out_of_band = False

    def predict(self, messages) -> float:
        return messages[-1][1]


class MeanOfAnswers:
    name = "mean-of-answers"
    out_of_band = False

    def predict(self, messages) -> float:
        return float(np.mean([y for _, y in messages]))


class HiddenValueOracle:
    """Handed the hidden ``q_ell(D)``; a sanity check of the scoring."""

    name = "oracle"
    out_of_band = True

    def predict(self, messages, hidden) -> float:
        return hidden


BUILTIN_EAVESDROPPERS = (LastAnswerEcho(), MeanOfAnswers())


@dataclass
class GapReport:
    agreement_rate: float
    hit_rate: float
    hit_rate_wide: float


def eavesdropper_gap(runs, G, radius: float = 1 / 20, wide_radius: float = 1 / 10,
                     target: str = "o1") -> GapReport:
    """Agreement rate at ``2 n^(-1/10)`` and ``G``'s hit rates around ``target``.

    ``target`` is ``"o1"`` (P1's output) or ``"hidden"`` (``q_ell(D)``).
    """
    runs = list(runs)
    if not runs:
        raise ValueError("no runs")
    agree = hits = wide = 0
    for run in runs:
        messages = run.transcript.messages()
        guess = G.predict(messages, run.hidden) if G.out_of_band else G.predict(messages)
        goal = run.o1 if target == "o1" else run.hidden
        agree += run.gap <= agreement_radius(run.transcript.n)
        hits += abs(guess - goal) <= radius
        wide += abs(guess - goal) <= wide_radius
    k = len(runs)
    return GapReport(agree / k, hits / k, wide / k)


# -- bucketing ----------------------------------------------------------------------

_GAMMA_BITS = 40


@dataclass(frozen=True)
class Bucketing:
    """Grid ``{-1 + k*gamma : k = 0..K}`` with ``gamma ~ sqrt(alpha*beta)``.

    ``gamma`` is rounded down to a multiple of ``2^-40`` so every grid point
    is an exact float and consecutive points differ by exactly ``gamma``.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError("alpha and beta must be positive")
        if self.gamma_exact == 0:
            raise ConfigError(f"gamma = sqrt(alpha*beta) is below 2^-{_GAMMA_BITS}")
        if not self.gamma_exact < 2:
            raise ConfigError(f"gamma = sqrt(alpha*beta) = {self.gamma:.4g} >= 2 collapses the bucket set")

    @property
    def gamma_exact(self) -> Fraction:
        g = math.sqrt(self.alpha * self.beta)
        return Fraction(math.floor(g * 2**_GAMMA_BITS), 2**_GAMMA_BITS)

    @property
    def gamma(self) -> float:
        return float(self.gamma_exact)

    @property
    def top(self) -> int:
        """Largest grid index ``K = floor(2/gamma)``."""
        return math.floor(2 / self.gamma_exact)

    @property
    def width(self) -> int:
        """``ceil(log2(2/gamma))`` bits, widened if ``K+1`` indices need more."""
        base = math.ceil(math.log2(2 / math.sqrt(self.alpha * self.beta)))
        return max(base, (self.top).bit_length())

    def bucket(self, k: int) -> float:
        return float(-1 + k * self.gamma_exact)

    def buckets(self) -> np.ndarray:
        return np.array([self.bucket(k) for k in range(self.top + 1)])

    def index_of(self, x: float) -> int:
        """Nearest grid index to ``x``; ties go to the lower point."""
        t = (Fraction(x) + 1) / self.gamma_exact
        lo = math.floor(t)
        k = lo + 1 if t - lo > Fraction(1, 2) else lo
        return min(max(k, 0), self.top)


def bucketize(o: float, v: float, B: Bucketing) -> tuple[float, BitString]:
    """Bucket of ``o + v`` and its index as a ``B.width``-bit string."""
    k = B.index_of(o + v)
    return B.bucket(k), BitString(k, B.width)


def inner_product(s: int, r: int) -> int:
    return (int(s) & int(r)).bit_count() & 1


# -- weak key agreement -------------------------------------------------------------------


@dataclass
class WeakKaRun:
    bit1: int
    bit2: int
    v: float
    r: BitString
    b1: float
    b2: float
    approx: ApproxAgreementRun | None = None
    o1: float = 0.0
    o2: float = 0.0

    @property
    def agree(self) -> bool:
        return self.bit1 == self.bit2


def check_ka_params(alpha: float, beta: float, n: int) -> Bucketing:
    B = Bucketing(alpha, beta)
    if alpha * beta < 2.0 ** -n:
        raise ConfigError(f"alpha*beta = {alpha * beta:.3g} is below 2^-n")
    return B


def run_weak_ka(approx, alpha: float, beta: float, n: int, seed: int) -> WeakKaRun:
    """Bucket both outputs of ``approx(n, seed)`` and output inner-product bits.

    ``approx`` returns an :class:`ApproxAgreementRun` or a plain ``(o1, o2)``.
    """
    B = check_ka_params(alpha, beta, n)
    ss = np.random.SeedSequence(seed)
    inner_seed, ka_seed = ss.spawn(2)
    out = approx(n, int(inner_seed.generate_state(1, np.uint64)[0] >> np.uint64(1)))
    run = out if isinstance(out, ApproxAgreementRun) else None
    o1, o2 = (out.o1, out.o2) if run else out
    rng = np.random.default_rng(ka_seed)
    v = float(rng.random()) * B.gamma
    r = BitString.random(B.width, rng)
    b1, s1 = bucketize(o1, v, B)
    b2, s2 = bucketize(o2, v, B)
    return WeakKaRun(inner_product(s1.value, r.value), inner_product(s2.value, r.value),
                     v, r, b1, b2, run, o1, o2)


def forced_approx(alpha: float, exact: bool = False):
    """Test protocol: ``o1 ~ U[-1, 1]`` and ``o2`` within ``alpha`` of it."""

    def approx(n, seed):
        rng = np.random.default_rng(seed)
        o1 = float(rng.uniform(-1, 1))
        if exact:
            return o1, o1
        o2 = o1 + alpha if o1 + alpha <= 1 else o1 - alpha
        return o1, o2

    return approx


def bucket_agreement_rate(o1: float, o2: float, B: Bucketing, draws: int, rng) -> float:
    """Monte-Carlo ``P_v[bucket(o1+v) == bucket(o2+v)]`` over ``v ~ U[0, gamma]``."""
    vs = rng.random(draws) * B.gamma
    return float(np.mean([B.index_of(o1 + v) == B.index_of(o2 + v) for v in vs]))


# -- Goldreich-Levin -------------------------------------------------------------------


class GlOracle:
    """Vectorised predictor ``r -> bit`` for ``r`` given as uint64 words."""

    error_rate: float | None = None

    def __call__(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def parity(x: int, r: np.ndarray) -> np.ndarray:
    return (np.bitwise_count(np.uint64(x) & r) & np.uint8(1)).astype(np.uint8)


@dataclass
class ExactOracle(GlOracle):
    x: int
    error_rate: float = 0.0

    def __call__(self, r):
        return parity(self.x, r)


@dataclass
class NoisyOracle(GlOracle):
    """Correct parity flipped independently with probability ``error_rate``."""

    x: int
    error_rate: float
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    def __call__(self, r):
        flips = (self.rng.random(r.shape) < self.error_rate).astype(np.uint8)
        return parity(self.x, r) ^ flips


@dataclass
class CoinOracle(GlOracle):
    rng: np.random.Generator
    error_rate: float = 0.5

    def __call__(self, r):
        return self.rng.integers(0, 2, size=r.shape, dtype=np.uint8)


@dataclass
class ConstantOracle(GlOracle):
    bit: int = 0

    def __call__(self, r):
        return np.full(r.shape, self.bit, dtype=np.uint8)


def gl_decode(A, n: int, m_b: int, rng: np.random.Generator) -> BitString:
    """Majority vote of ``A(r) xor A(r xor e_i)`` over ``n`` fresh ``r`` per bit."""
    if not 1 <= m_b <= min(n, 63):
        raise ValueError(f"need 1 <= m_b <= min(n, 63), got m_b={m_b}, n={n}")
    bits = []
    for i in range(m_b):
        r = rng.integers(0, 1 << m_b, size=n, dtype=np.uint64)
        e = np.uint64(1 << (m_b - 1 - i))
        votes = int(np.sum(np.asarray(A(r), dtype=np.uint8) ^ np.asarray(A(r ^ e), dtype=np.uint8)))
        bits.append(1 if 2 * votes > n else 0)
    return BitString.from_bits(bits)


def gl_attack_ka(transcript, guesser, B: Bucketing, n: int, rng: np.random.Generator):
    """Predict a bucket from the transcript alone, using a bit guesser.

    A fresh offset ``v`` is sampled and ``guesser(transcript, v, r)`` is
    queried through :func:`gl_decode`.  Returns ``(v, bucket or None)``;
    ``None`` means the decoded index is off the grid.
    """
    v = float(rng.random()) * B.gamma

    def oracle(rs):
        return np.array([guesser(transcript, v, int(r)) for r in rs], dtype=np.uint8)

    s = gl_decode(oracle, n, B.width, rng)
    return v, (B.bucket(s.value) if s.value <= B.top else None)


def cheating_guesser(o1: float, B: Bucketing):
    """P1's own output bit for offset ``v`` and string ``r``."""

    def guess(transcript, v, r):
        _, s = bucketize(o1, v, B)
        return inner_product(s.value, r)

    return guess


def coin_guesser(rng: np.random.Generator):
    def guess(transcript, v, r):
        return int(rng.integers(0, 2))

    return guess


def coin_decode_probability(index: int, width: int, n: int) -> float:
    """Exact chance that decoding with a fair-coin oracle returns ``index``."""
    from scipy.stats import binom

    p1 = float(binom.sf(n // 2, n, 0.5))  # P(votes > n/2)
    ones = int(index).bit_count()
    return p1**ones * (1 - p1) ** (width - ones)
