"""Balanced adversary that forces any mechanism to behave naturally.

The sampler sets up an IBE scheme for ``m = c*n`` identities and picks the
uniform distribution over the triplets ``(j, mpk, sk_j)``.  The analyst,
which never talks to the sampler, first reads ``mpk`` one bit per round
through :class:`~ada_arena.game.BitProjection` queries and then runs the
fingerprinting analyst, encrypting its query value ``tq(j)`` for each
identity ``j``.  A mechanism can only evaluate such a query on samples
whose secret keys it holds.

:class:`MTilde` is the converse direction: a natural mechanism in the
fingerprinting game built from any mechanism ``M`` by emulating the
encrypted game around it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BitString
from .fingerprint import AttackConfig, IfpcAnalyst, NaturalAdversary, tilde_sampler
from .game import (
    BitProjection,
    CiphertextQuery,
    DomainSpec,
    FiniteDistribution,
    GameContext,
    TableQuery,
    TripletBatch,
    run_game,
    true_answer,
)
from .ibe import IbeKeyMaterial, IbeScheme, make_scheme
from .mechanisms import NaturalMechanism, NaturalView
from .stats import trial_seed


@dataclass
class TripletTable:
    keys: IbeKeyMaterial
    triplets: TripletBatch
    distribution: FiniteDistribution


def balanced_domain(scheme: IbeScheme, n: int, lam: int, c: int) -> DomainSpec:
    m = c * n
    return DomainSpec.triplet(m, scheme.mpk_bits(lam, m))


def build_table(keys: IbeKeyMaterial, scheme: IbeScheme) -> TripletTable:
    if len(keys.identity_keys) != keys.m:
        scheme.derive_all(keys)
    triplets = TripletBatch(np.arange(keys.m), [keys.mpk] * keys.m,
                            [keys.identity_keys[j] for j in range(keys.m)])
    domain = DomainSpec.triplet(keys.m, keys.k)
    return TripletTable(keys, triplets, FiniteDistribution.uniform(domain, triplets))


def a1_run(n: int, lam: int, c: int, scheme: IbeScheme,
           rng: np.random.Generator) -> tuple[TripletTable, TripletBatch]:
    """Setup, keygen for every identity, then ``n`` uniform triplets."""
    keys = scheme.setup(lam, c * n, rng)
    table = build_table(keys, scheme)
    return table, table.distribution.sample(n, rng)


class BalancedAnalyst:
    """``k`` bit-projection rounds, then the wrapped fingerprinting analyst."""

    def __init__(self, n: int, ell: int, domain: DomainSpec, scheme: IbeScheme,
                 config: AttackConfig, rng: np.random.Generator):
        self.k = domain.key_bits
        if ell <= self.k:
            raise ValueError(f"ell={ell} leaves no rounds after the {self.k} key rounds")
        self.domain = domain
        self.scheme = scheme
        inner_rng, self.enc_rng = rng.spawn(2)
        self.inner = IfpcAnalyst(n, ell - self.k, DomainSpec.index(domain.m), config, inner_rng)
        self.bits: list[int] = []
        self.mpk: BitString | None = None
        self.round = 0
        self.encryption_failures = 0
        self.inner_truths: list[float] = []
        self.last_inner_query: TableQuery | None = None

    def next_query(self):
        if self.round < self.k:
            return BitProjection(self.round, self.domain)
        if self.mpk is None:
            self.mpk = BitString.from_bits(self.bits)
        tq = self.inner.next_query()
        self.last_inner_query = tq
        self.inner_truths.append(float(tq.values.sum() / len(tq.values)))
        bundle = self.scheme.encrypt_many(self.mpk, tq.values, self.enc_rng, on_error="garbage")
        self.encryption_failures += bundle.failed
        return CiphertextQuery(bundle, self.scheme, self.domain)

    def absorb(self, y: float) -> None:
        if self.round < self.k:
            self.bits.append(1 if y > 0.5 else 0)
        else:
            self.inner.absorb(y)
        self.round += 1

    def summary(self) -> dict:
        return {"k": self.k, "encryption_failures": self.encryption_failures,
                "inner_truths": self.inner_truths, **self.inner.summary()}


class BalancedAttack:
    """The sampler/analyst pair.  ``leak`` receives the key material out of
    band and exists only for the decrypt-everything sanity mechanism."""

    def __init__(self, scheme: IbeScheme, lam: int, config: AttackConfig | None = None, leak=None):
        self.scheme = scheme
        self.lam = lam
        self.config = config or AttackConfig()
        self.leak = leak
        self.table: TripletTable | None = None
        # diagnostics for the harness; the analyst never reads these
        self.last_sample: TripletBatch | None = None
        self.last_analyst: BalancedAnalyst | None = None

    def sample(self, n, ell, domain, rng):
        if domain != balanced_domain(self.scheme, n, self.lam, self.config.c):
            raise ValueError(f"domain {domain.describe()} does not match the scheme's key length")
        self.table, samples = a1_run(n, self.lam, self.config.c, self.scheme, rng)
        if self.leak is not None:
            self.leak(self.table.keys)
        self.last_sample = samples
        return self.table.distribution, samples

    def analyst(self, n, ell, domain, rng):
        self.last_analyst = BalancedAnalyst(n, ell, domain, self.scheme, self.config, rng)
        return self.last_analyst

    def reconstruction_round(self) -> int | None:
        """Game round by which every sample identity was accused in the last game."""
        at = self.last_analyst.inner.state.accused_at[self.last_sample.ids]
        return None if np.any(at < 0) else int(at.max()) + self.last_analyst.k


class DecryptEverything:
    """White-box mechanism handed the master secret key out of band.

    It evaluates every query on the full triplet table, i.e. answers the
    true mean exactly.
    """

    name = "decrypt-everything"
    needs_distribution = False

    def __init__(self, scheme: IbeScheme):
        self.scheme = scheme
        self.table: TripletTable | None = None

    def receive_keys(self, keys: IbeKeyMaterial):
        self.table = build_table(keys, self.scheme)

    def bind(self, samples, rng, context):
        if self.table is None:
            raise RuntimeError("decrypt-everything needs the key material before the game starts")

    def answer(self, q):
        return true_answer(q, self.table.distribution)


def balanced_game(mech, n: int, lam: int, scheme: IbeScheme, config: AttackConfig, seed: int,
                  *, rounds: int | None = None, referee_assist: bool = False, keep_queries: bool = False):
    """One full game; ``rounds`` is the fingerprinting budget, ``ell = rounds + k``."""
    cfg = config.resolve(n)
    domain = balanced_domain(scheme, n, lam, cfg.c)
    leak = mech.receive_keys if isinstance(mech, DecryptEverything) else None
    adv = BalancedAttack(scheme, lam, cfg, leak)
    ell = (rounds if rounds is not None else cfg.rounds) + domain.key_bits
    result, transcript = run_game(mech, adv, n, ell, domain, seed, referee_assist=referee_assist,
                                  keep_queries=keep_queries)
    result.info["reconstruction_round"] = adv.reconstruction_round()
    return result, transcript


def balanced_attack_success(mech_factory, n: int, lam: int = 16, c: int = 2000,
                            rounds: int | None = None, trials: int = 100, seed: int = 0,
                            scheme: str = "compact", tau: float | None = None,
                            referee_assist: bool = False) -> float:
    """Fraction of full games lost by ``mech_factory(scheme)``'s mechanisms."""
    cfg = AttackConfig(c=c, tau=tau)
    wins = 0
    for i in range(trials):
        ibe = make_scheme(scheme)
        result, _ = balanced_game(mech_factory(ibe), n, lam, ibe, cfg, trial_seed(seed, i),
                                  rounds=rounds, referee_assist=referee_assist)
        wins += result.outcome
    return wins / trials


# -- natural wrapper ---------------------------------------------------------------


class MTilde(NaturalMechanism):
    """Natural mechanism built around an arbitrary mechanism ``M``.

    ``variant="real"`` encrypts ``tq(j)`` for sample identities and 0
    elsewhere, so it only ever reads the natural view.  ``variant="hybrid"``
    encrypts ``tq(j)`` for every identity and is not natural.  Both consume
    identical random draws.
    """

    def __init__(self, mech, scheme: IbeScheme, lam: int, variant: str = "real"):
        if variant not in ("real", "hybrid"):
            raise ValueError(f"variant must be 'real' or 'hybrid', got {variant!r}")
        super().__init__(self._inner, f"m-tilde:{variant}")
        self.mech = mech
        self.scheme = scheme
        self.lam = lam
        self.variant = variant

    def bind(self, samples, rng, context: GameContext):
        super().bind(samples, rng, context)
        self.J = np.asarray(samples, dtype=np.int64)
        m = context.domain.m
        key_rng, mech_rng, self.enc_rng = rng.spawn(3)
        self.table = build_table(self.scheme.setup(self.lam, m, key_rng), self.scheme)
        self.domain = self.table.distribution.domain
        emulated = self.table.triplets.take(self.J)
        self.mech.bind(emulated, mech_rng, GameContext(context.n, context.ell + self.domain.key_bits,
                                                       self.domain))
        self.key_answers = [float(self.mech.answer(BitProjection(i, self.domain)))
                            for i in range(self.domain.key_bits)]
        self.wrapped_truths: list[float] = []

    def _relay(self, plaintexts: np.ndarray) -> float:
        bundle = self.scheme.encrypt_many(self.table.keys.mpk, plaintexts, self.enc_rng)
        wrapped = CiphertextQuery(bundle, self.scheme, self.domain)
        if self.variant == "hybrid":
            self.wrapped_truths.append(true_answer(wrapped, self.table.distribution))
        return float(self.mech.answer(wrapped))

    def _inner(self, view: NaturalView, state) -> float:
        plaintexts = np.zeros(self.domain.m)
        plaintexts[self.J] = view.evals
        return self._relay(plaintexts)

    def answer(self, q):
        if self.variant == "hybrid":
            self.state.round += 1
            return self._relay(q.values)
        return super().answer(q)


def m_tilde_run(mech, variant: str, n: int, rounds: int, seed: int, scheme: IbeScheme | None = None,
                lam: int = 16, c: int = 2000, config: AttackConfig | None = None,
                keep_queries: bool = False):
    """Play the fingerprinting game with ``MTilde(mech)`` as the mechanism."""
    scheme = scheme or make_scheme("compact")
    cfg = config or AttackConfig(c=c)
    wrapper = MTilde(mech, scheme, lam, variant)
    adv = NaturalAdversary(cfg)
    result, transcript = run_game(wrapper, adv, n, rounds, tilde_sampler(n, cfg.c).domain, seed,
                                  keep_queries=keep_queries)
    result.info["wrapped_truths"] = wrapper.wrapped_truths
    return result, transcript
