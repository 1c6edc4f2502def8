"""Domains, distributions, statistical queries and the referee for the ADA game.

The referee runs one game between a mechanism and a balanced adversary
``(sampler, analyst)``:

1. the analyst is built from the public inputs ``(n, ell, domain)`` and its
   own random stream, before the sampler runs;
2. the sampler picks a finite distribution ``D`` and draws ``S ~ D^n`` for the
   mechanism;
3. for ``ell`` rounds the analyst asks a query, the mechanism answers, and the
   referee records ``|y_i - q_i(D)|``.

The outcome is 1 iff some error is strictly greater than 1/10.  Identities
and index-domain elements are 0-based (``0..m-1``).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from .bits import BitString

ACCURACY = 0.1


class ProtocolViolation(Exception):
    """A party sent a message outside the game's rules."""


class DomainMismatch(ValueError):
    pass


class DecryptionError(Exception):
    pass


# -- domains ---------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """``[m]`` (``key_bits is None``) or ``[m] x {0,1}^k x {0,1}^k``."""

    m: int
    key_bits: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"domain size m must be >= 1, got {self.m}")
        if self.key_bits is not None and self.key_bits < 1:
            raise ValueError(f"key_bits must be >= 1, got {self.key_bits}")

    @classmethod
    def index(cls, m: int) -> DomainSpec:
        return cls(m)

    @classmethod
    def triplet(cls, m: int, key_bits: int) -> DomainSpec:
        return cls(m, key_bits)

    @property
    def kind(self) -> str:
        return "index" if self.key_bits is None else "triplet"

    @property
    def dimension(self) -> int:
        """``ceil(log2 |X|)`` under the fixed-width encoding of elements."""
        index_bits = (self.m - 1).bit_length()
        return index_bits if self.key_bits is None else index_bits + 2 * self.key_bits

    def contains(self, x) -> bool:
        if self.key_bits is None:
            return isinstance(x, (int, np.integer)) and 0 <= int(x) < self.m
        return (isinstance(x, Triplet) and 0 <= x.j < self.m
                and x.mpk.length == self.key_bits and x.sk.length == self.key_bits)

    def describe(self) -> str:
        return f"index(m={self.m})" if self.key_bits is None else f"triplet(m={self.m},k={self.key_bits})"


class Triplet(NamedTuple):
    j: int
    mpk: BitString
    sk: BitString


class TripletBatch(Sequence):
    """A sequence of triplets with cached key rings for vectorised decryption."""

    def __init__(self, ids, mpks: Sequence[BitString], sks: Sequence[BitString]):
        self.ids = np.asarray(ids, dtype=np.int64)
        self.mpks = list(mpks)
        self.sks = list(sks)
        if not len(self.ids) == len(self.mpks) == len(self.sks):
            raise ValueError("ids, mpks and sks must have equal length")
        self._rings: dict[str, np.ndarray] = {}
        self._mpk_codes = None

    def mpk_bit(self, i: int) -> np.ndarray:
        """Bit ``i`` of every triplet's mpk (mpks are usually shared)."""
        if self._mpk_codes is None:
            distinct = {}
            codes = np.array([distinct.setdefault(k, len(distinct)) for k in self.mpks], dtype=np.int64)
            self._mpk_codes = (list(distinct), codes)
        distinct, codes = self._mpk_codes
        return np.array([k.bit(i) for k in distinct], dtype=np.float64)[codes]

    def __len__(self):
        return len(self.ids)

    def __getitem__(self, t):
        if isinstance(t, slice):
            return self.take(np.arange(len(self))[t])
        return Triplet(int(self.ids[t]), self.mpks[t], self.sks[t])

    def take(self, indices) -> TripletBatch:
        indices = np.asarray(indices, dtype=np.int64)
        out = TripletBatch(self.ids[indices], [self.mpks[i] for i in indices], [self.sks[i] for i in indices])
        for name, ring in self._rings.items():
            out._rings[name] = ring[indices]
        return out

    def ring(self, scheme) -> np.ndarray:
        ring = self._rings.get(scheme.name)
        if ring is None:
            ring = self._rings[scheme.name] = scheme.key_ring(self.sks)
        return ring


# -- distributions ---------------------------------------------------------------


@dataclass
class FiniteDistribution:
    """Explicit finite support; ``weights=None`` means uniform."""

    domain: DomainSpec
    support: Sequence
    weights: np.ndarray | None = None

    def __post_init__(self):
        if len(self.support) == 0:
            raise ValueError("support must be non-empty")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (len(self.support),) or np.any(w < 0):
                raise ValueError("weights must be non-negative, one per support element")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValueError(f"weights sum to {w.sum()!r}, not 1")
            self.weights = w
        bad = next((x for x in self.support if not self.domain.contains(x)), None)
        if bad is not None:
            raise DomainMismatch(f"support element {bad!r} is not in {self.domain.describe()}")

    @classmethod
    def uniform(cls, domain: DomainSpec, support=None) -> FiniteDistribution:
        if support is None:
            support = np.arange(domain.m)
        return cls(domain, support)

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.weights is None:
            return rng.integers(len(self.support), size=n)
        return rng.choice(len(self.support), size=n, p=self.weights)

    def sample(self, n: int, rng: np.random.Generator):
        idx = self.sample_indices(n, rng)
        if isinstance(self.support, TripletBatch):
            return self.support.take(idx)
        if isinstance(self.support, np.ndarray):
            return self.support[idx]
        return [self.support[i] for i in idx]

    def expectation(self, values: np.ndarray) -> float:
        values = np.asarray(values, dtype=np.float64)
        if self.weights is None:
            return float(values.sum() / len(values))
        return float(np.dot(self.weights, values))


# -- queries -----------------------------------------------------------------------


class Query:
    """A statistical query ``X -> [-1, 1]``."""

    domain: DomainSpec

    def evaluate_many(self, xs) -> np.ndarray:
        values, _ = self.evaluate_with_status(xs)
        return values

    def evaluate_with_status(self, xs) -> tuple[np.ndarray, np.ndarray]:
        """Values on ``xs`` and a mask of points that evaluated cleanly."""
        raise NotImplementedError

    def evaluate(self, x) -> float:
        if isinstance(x, Triplet):
            batch = TripletBatch([x.j], [x.mpk], [x.sk])
            return float(self.evaluate_many(batch)[0])
        return float(self.evaluate_many(np.array([x]))[0])

    def canonical_bytes(self) -> bytes:
        raise NotImplementedError

    def digest(self) -> str:
        return hashlib.blake2b(self.canonical_bytes(), digest_size=16).hexdigest()

    def check_range(self):
        """Raise :class:`ProtocolViolation` if the query can leave ``[-1, 1]``."""


@dataclass(eq=False)
class TableQuery(Query):
    values: np.ndarray
    domain: DomainSpec

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.domain.key_bits is not None:
            raise DomainMismatch("table queries live on index domains")
        if self.values.shape != (self.domain.m,):
            raise ValueError(f"table must have {self.domain.m} entries, got shape {self.values.shape}")
        self.check_range()

    def check_range(self):
        if not np.all(np.abs(self.values) <= 1.0):
            raise ProtocolViolation("table query has values outside [-1, 1]")

    def evaluate_with_status(self, xs):
        values = self.values[np.asarray(xs, dtype=np.int64)]
        return values, np.ones(len(values), dtype=bool)

    def canonical_bytes(self):
        return b"table" + self.values.tobytes()


@dataclass(eq=False)
class BitProjection(Query):
    """``(j, mpk, sk) -> mpk_bit``."""

    bit: int
    domain: DomainSpec

    def __post_init__(self):
        if self.domain.key_bits is None or not 0 <= self.bit < self.domain.key_bits:
            raise DomainMismatch(f"bit {self.bit} is not addressable in {self.domain.describe()}")

    def evaluate_with_status(self, xs):
        values = _as_triplets(xs).mpk_bit(self.bit)
        return values, np.ones(len(values), dtype=bool)

    def canonical_bytes(self):
        return b"bit" + self.bit.to_bytes(8, "big")


@dataclass(eq=False)
class CiphertextQuery(Query):
    """``(j, mpk, sk) -> Decrypt(sk, ct_j)``.

    Only ``ct_j`` is touched when evaluating at a point with index ``j``.
    A ciphertext that does not open evaluates to ``failure_value``; with
    ``failure_value=None`` it raises :class:`DecryptionError` instead.
    """

    bundle: object
    scheme: object
    domain: DomainSpec
    failure_value: float | None = 0.0

    def __post_init__(self):
        if self.domain.key_bits is None:
            raise DomainMismatch("ciphertext queries live on triplet domains")
        if len(self.bundle) != self.domain.m:
            raise ValueError(f"bundle must hold {self.domain.m} ciphertexts, got {len(self.bundle)}")

    def evaluate_with_status(self, xs):
        batch = _as_triplets(xs)
        values, ok = self.scheme.decrypt_many(batch.ring(self.scheme), self.bundle, batch.ids)
        if not ok.all():
            if self.failure_value is None:
                raise DecryptionError(f"{int((~ok).sum())} ciphertexts failed to decrypt")
            values = np.where(ok, values, self.failure_value)
        return values, ok

    def canonical_bytes(self):
        return b"ct" + self.bundle.canonical_bytes()


def _as_triplets(xs) -> TripletBatch:
    if isinstance(xs, TripletBatch):
        return xs
    xs = list(xs)
    return TripletBatch([x.j for x in xs], [x.mpk for x in xs], [x.sk for x in xs])


def true_answer(q: Query, dist: FiniteDistribution) -> float:
    """Exact ``E_{x~D}[q(x)]`` over the finite support."""
    if q.domain != dist.domain:
        raise DomainMismatch(f"query on {q.domain.describe()} but distribution on {dist.domain.describe()}")
    return dist.expectation(q.evaluate_many(dist.support))


def outcome_of(errors) -> int:
    """1 iff some error strictly exceeds 1/10."""
    errors = np.asarray(errors, dtype=np.float64)
    if np.any(errors < 0):
        raise ValueError("errors must be non-negative")
    return int(errors.size > 0 and bool(np.max(errors) > ACCURACY))


# -- records -------------------------------------------------------------------------


class RoundRecord(NamedTuple):
    index: int
    digest: str
    answer: float
    true_answer: float
    error: float


@dataclass
class Transcript:
    n: int
    ell: int
    domain: DomainSpec
    rounds: list[RoundRecord] = field(default_factory=list)
    queries: list[Query] | None = None

    @property
    def answers(self) -> list[float]:
        return [r.answer for r in self.rounds]

    def messages(self) -> list[tuple[str, float]]:
        """What an eavesdropper sees: ``(query digest, answer)`` per round."""
        return [(r.digest, r.answer) for r in self.rounds]

    def to_text(self) -> str:
        lines = [f"# n={self.n}\tell={self.ell}\tdomain={self.domain.describe()}"]
        lines += [f"{r.index}\t{r.digest}\t{r.answer!r}\t{r.true_answer!r}\t{r.error!r}" for r in self.rounds]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Transcript:
        lines = text.splitlines()
        header = dict(part.split("=", 1) for part in lines[0].lstrip("# ").split("\t"))
        dom = header["domain"]
        params = dict(kv.split("=") for kv in dom[dom.index("(") + 1:-1].split(","))
        domain = DomainSpec(int(params["m"]), int(params["k"]) if "k" in params else None)
        rounds = []
        for line in lines[1:]:
            i, digest, y, t, e = line.split("\t")
            rounds.append(RoundRecord(int(i), digest, float(y), float(t), float(e)))
        return cls(int(header["n"]), int(header["ell"]), domain, rounds)


@dataclass
class GameResult:
    true_answers: np.ndarray
    given_answers: np.ndarray
    errors: np.ndarray
    outcome: int
    first_failure_round: int | None
    clipped_rounds: list[int] = field(default_factory=list)
    decrypt_failures: int = 0
    info: dict = field(default_factory=dict)

    @classmethod
    def from_rounds(cls, truths, answers, **extra) -> GameResult:
        truths = np.asarray(truths, dtype=np.float64)
        answers = np.asarray(answers, dtype=np.float64)
        errors = np.abs(answers - truths)
        failing = np.flatnonzero(errors > ACCURACY)
        return cls(truths, answers, errors, outcome_of(errors),
                   int(failing[0]) if failing.size else None, **extra)

    @property
    def final_error(self) -> float:
        return float(self.errors[-1]) if self.errors.size else 0.0


# -- participants ----------------------------------------------------------------------


@dataclass(frozen=True)
class GameContext:
    """Public inputs, plus ``D`` for referee-assisted test mechanisms only."""

    n: int
    ell: int
    domain: DomainSpec
    distribution: FiniteDistribution | None = None


class Analyst(Protocol):
    def next_query(self) -> Query: ...

    def absorb(self, answer: float) -> None: ...


class BalancedAdversary(Protocol):
    def sample(self, n: int, ell: int, domain: DomainSpec,
               rng: np.random.Generator) -> tuple[FiniteDistribution, Sequence]: ...

    def analyst(self, n: int, ell: int, domain: DomainSpec, rng: np.random.Generator) -> Analyst: ...


class Mechanism(Protocol):
    needs_distribution: bool

    def bind(self, samples, rng: np.random.Generator, context: GameContext) -> None: ...

    def answer(self, query: Query) -> float: ...


class GameStreams(NamedTuple):
    sampler: np.random.Generator
    analyst: np.random.Generator
    mechanism: np.random.Generator


def game_streams(seed: int) -> GameStreams:
    """Independent per-role random streams derived from one game seed."""
    ss = np.random.SeedSequence(int(seed))
    return GameStreams(*(np.random.default_rng(s) for s in ss.spawn(3)))


def run_game(mech: Mechanism, adv: BalancedAdversary, n: int, ell: int, domain: DomainSpec,
             seed: int, *, referee_assist: bool = False,
             keep_queries: bool = False) -> tuple[GameResult, Transcript]:
    """Play one ADA game; see the module docstring for the round structure."""
    if n < 1 or ell < 1:
        raise ValueError(f"need n >= 1 and ell >= 1, got n={n}, ell={ell}")
    streams = game_streams(seed)
    analyst = adv.analyst(n, ell, domain, streams.analyst)
    dist, samples = adv.sample(n, ell, domain, streams.sampler)
    if dist.domain != domain:
        raise ProtocolViolation("sampler chose a distribution over the wrong domain")
    if len(samples) != n:
        raise ProtocolViolation(f"sampler sent {len(samples)} samples, expected {n}")
    assist = getattr(mech, "needs_distribution", False)
    if assist and not referee_assist:
        raise ProtocolViolation("mechanism requires the distribution; enable referee_assist for test runs")
    mech.bind(samples, streams.mechanism, GameContext(n, ell, domain, dist if assist else None))

    transcript = Transcript(n, ell, domain, queries=[] if keep_queries else None)
    truths, answers, clipped = [], [], []
    failures = 0
    for i in range(ell):
        q = analyst.next_query()
        if not isinstance(q, Query) or q.domain != domain:
            raise ProtocolViolation(f"round {i}: analyst sent a query outside {domain.describe()}")
        q.check_range()
        raw = float(mech.answer(q))
        if math.isnan(raw):
            raise ProtocolViolation(f"round {i}: mechanism answered NaN")
        y = min(1.0, max(-1.0, raw))
        if y != raw:
            clipped.append(i)
        try:
            values, ok = q.evaluate_with_status(dist.support)
        except DecryptionError as exc:
            raise DecryptionError(f"round {i}: {exc}") from exc
        failures += int(np.count_nonzero(~ok))
        truth = dist.expectation(values)
        analyst.absorb(y)
        truths.append(truth)
        answers.append(y)
        transcript.rounds.append(RoundRecord(i, q.digest(), y, truth, abs(y - truth)))
        if keep_queries:
            transcript.queries.append(q)

    info = analyst.summary() if hasattr(analyst, "summary") else {}
    result = GameResult.from_rounds(truths, answers, clipped_rounds=clipped,
                                    decrypt_failures=failures, info=info)
    return result, transcript
