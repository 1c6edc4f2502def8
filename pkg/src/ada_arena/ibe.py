"""Identity-based encryption: interface, two simulation-grade schemes, IND-IBE harness.

Neither scheme is secure in any real-world sense. They exist so that the
balanced adversary can be run end to end with the right interface shape:

* ``trivial`` concatenates one hashed-ElGamal public key per identity into the
  master public key, so ``|mpk| = m * lam`` bits.
* ``compact`` presents a master public key of ``lam * ceil(log2 m)`` bits.
  Encryption under that key is served by a keystore that plays the role of an
  ideal IBE functionality: it maps a registered mpk to its master secret and
  derives the per-identity symmetric keys internally.  Security against a
  mechanism that never touches the keystore is heuristic.

Both schemes encrypt 64-bit words ``(tag56(id, chunk) << 8) | byte`` with a
pad derived from a per-ciphertext shared secret.  A ternary message
``{-1, 0, 1}`` is a single word whose byte is the 2-bit code; the bit-string
mode encrypts one word per 8-bit chunk.  Decryption under the wrong key
fails the tag check and returns :data:`FAILURE` rather than a plaintext.
"""

from __future__ import annotations

import abc
import hashlib
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy

from .bits import MASK64, BitString, concat_chunks, mix64, random_u64

MESSAGES = (-1, 0, 1)
_CODE = {-1: 0, 0: 1, 1: 2}
_FAILED_CODE = 255

_C_SECRET = 0x243F6A8885A308D3
_C_HEAD = 0x13198A2E03707344
_C_TAG = 0xA4093822299F31D0


class _Failure:
    def __repr__(self):
        return "FAILURE"

    def __bool__(self):
        return False


FAILURE = _Failure()
"""Returned by :meth:`IbeScheme.decrypt` when a ciphertext does not open."""


class IbeError(Exception):
    pass


class EncryptionError(IbeError):
    """Encryption impossible under the given master public key."""


def encode_message(value: int) -> int:
    """Two-bit code of a ternary plaintext."""
    try:
        if value == int(value):
            return _CODE[int(value)]
    except (KeyError, ValueError, TypeError):
        pass
    raise ValueError(f"IBE plaintext must be one of {MESSAGES}, got {value!r}")


def decode_message(code: int):
    return code - 1 if code in (0, 1, 2) else FAILURE


def message_length(msg) -> int:
    """Bit length of a plaintext (2 for ternary messages)."""
    return msg.length if isinstance(msg, BitString) else 2


@dataclass(frozen=True)
class Ciphertext:
    identity: int
    payload: bytes
    scheme: str


@dataclass(frozen=True, eq=False)
class CiphertextBundle:
    """One ternary ciphertext per identity ``0..m-1``, stored column-wise."""

    scheme: str
    head: np.ndarray
    body: np.ndarray
    failed: int = 0

    def __len__(self):
        return len(self.head)

    def __getitem__(self, j: int) -> Ciphertext:
        payload = b"T" + int(self.head[j]).to_bytes(8, "big") + int(self.body[j]).to_bytes(8, "big")
        return Ciphertext(int(j), payload, self.scheme)

    def canonical_bytes(self) -> bytes:
        return self.scheme.encode() + self.head.tobytes() + self.body.tobytes()


@dataclass(frozen=True)
class MasterSecretKey:
    bits: BitString
    m: int
    k: int
    lam: int


@dataclass
class IbeKeyMaterial:
    scheme: str
    lam: int
    m: int
    mpk: BitString
    msk: MasterSecretKey
    identity_keys: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.mpk.length


def _tag56(ids, chunk: int = 0):
    if isinstance(ids, np.ndarray):
        x = (ids.astype(np.uint64) << np.uint64(20)) + np.uint64(chunk)
        return mix64(x ^ np.uint64(_C_TAG)) >> np.uint64(8)
    return mix64(((int(ids) << 20) + chunk) ^ _C_TAG) >> 8


def _pad(secret, head, ids):
    if isinstance(secret, np.ndarray):
        a = mix64(secret ^ np.uint64(_C_SECRET))
        b = mix64(head ^ np.uint64(_C_HEAD))
        return mix64((a + b) ^ ids.astype(np.uint64))
    a = mix64(int(secret) ^ _C_SECRET)
    b = mix64(int(head) ^ _C_HEAD)
    return mix64(((a + b) & MASK64) ^ int(ids))


def _open_words(secret, head, body, ids, chunk: int = 0):
    """Return the low byte of each word, or 255 where the tag check fails."""
    word = body ^ _pad(secret, head, ids)
    if isinstance(word, np.ndarray):
        ok = (word >> np.uint64(8)) == _tag56(ids, chunk)
        return np.where(ok, word & np.uint64(0xFF), np.uint64(_FAILED_CODE)).astype(np.int64)
    return word & 0xFF if (word >> 8) == _tag56(ids, chunk) else _FAILED_CODE


class IbeScheme(abc.ABC):
    """Setup / KeyGen / Encrypt / Decrypt over identities ``0..m-1``."""

    name: str = ""

    @abc.abstractmethod
    def mpk_bits(self, lam: int, m: int) -> int:
        """Declared master-public-key length ``k`` for parameters ``(lam, m)``."""

    @abc.abstractmethod
    def setup(self, lam: int, m: int, rng: np.random.Generator) -> IbeKeyMaterial:
        ...

    @abc.abstractmethod
    def keygen(self, msk: MasterSecretKey, identity: int) -> BitString:
        ...

    @abc.abstractmethod
    def key_ring(self, sks) -> np.ndarray:
        """Pack identity keys into the array form consumed by :meth:`decrypt_many`."""

    @abc.abstractmethod
    def _encapsulate(self, mpk: BitString, ids: np.ndarray, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(secret, head, ok)`` arrays for fresh ciphertexts to ``ids``."""

    @abc.abstractmethod
    def _decapsulate(self, ring: np.ndarray, head: np.ndarray) -> np.ndarray:
        ...

    @staticmethod
    def _check_params(lam: int, m: int):
        if lam < 8:
            raise ValueError(f"security parameter must be >= 8, got {lam}")
        if m < 1:
            raise ValueError(f"identity count must be >= 1, got {m}")

    @staticmethod
    def _check_identity(msk: MasterSecretKey, identity: int):
        if not 0 <= identity < msk.m:
            raise ValueError(f"identity {identity} outside [0, {msk.m})")

    def derive_all(self, keys: IbeKeyMaterial) -> IbeKeyMaterial:
        keys.identity_keys = {j: self.keygen(keys.msk, j) for j in range(keys.m)}
        return keys

    # -- ternary, vectorised -------------------------------------------------

    def encrypt_many(self, mpk: BitString, values, rng: np.random.Generator,
                     on_error: str = "raise") -> CiphertextBundle:
        """Encrypt ``values[j]`` for identity ``j`` for every ``j``.

        With ``on_error="garbage"`` entries that cannot be encrypted are
        replaced by random words (which never decrypt) and counted in
        ``bundle.failed``.
        """
        values = np.asarray(values)
        codes = values.astype(np.int64) + 1
        if np.any((codes < 0) | (codes > 2)) or np.any(values != np.round(values)):
            raise ValueError(f"IBE plaintexts must lie in {MESSAGES}")
        ids = np.arange(len(values), dtype=np.uint64)
        secret, head, ok = self._encapsulate(mpk, ids, rng)
        filler = random_u64(rng, len(values))
        words = (_tag56(ids) << np.uint64(8)) | codes.astype(np.uint64)
        body = np.where(ok, words ^ _pad(secret, head, ids), filler)
        failed = int(np.count_nonzero(~ok))
        if failed and on_error == "raise":
            raise EncryptionError(f"{failed} identities have no valid public key under this mpk")
        return CiphertextBundle(self.name, head, body, failed)

    def decrypt_many(self, ring: np.ndarray, bundle: CiphertextBundle, ids) -> tuple[np.ndarray, np.ndarray]:
        """Decrypt ``bundle[ids[t]]`` under ``ring[t]``; returns ``(values, ok)``."""
        ids = np.asarray(ids, dtype=np.int64)
        head = bundle.head[ids]
        secret = self._decapsulate(ring, head)
        codes = _open_words(secret, head, bundle.body[ids], ids.astype(np.uint64))
        ok = codes <= 2
        return np.where(ok, codes - 1, 0).astype(np.float64), ok

    # -- scalar API ----------------------------------------------------------

    def encrypt(self, mpk: BitString, identity: int, msg, rng: np.random.Generator) -> Ciphertext:
        if isinstance(msg, BitString):
            chunks = [msg.chunk(i, 8) if (i + 1) * 8 <= msg.length
                      else (msg.value << ((i + 1) * 8 - msg.length)) & 0xFF
                      for i in range((msg.length + 7) // 8)]
            header = b"B" + msg.length.to_bytes(4, "big")
        else:
            chunks = [encode_message(msg)]
            header = b"T"
        ids = np.full(len(chunks), identity, dtype=np.uint64)
        secret, head, ok = self._encapsulate(mpk, ids, rng)
        if not np.all(ok):
            raise EncryptionError(f"identity {identity} has no valid public key under this mpk")
        out = [header]
        for c, (s, h) in enumerate(zip(secret, head)):
            word = (_tag56(identity, c) << 8) | chunks[c]
            out.append(int(h).to_bytes(8, "big") + (word ^ _pad(int(s), int(h), identity)).to_bytes(8, "big"))
        return Ciphertext(identity, b"".join(out), self.name)

    def decrypt(self, sk: BitString, ct: Ciphertext):
        """Open ``ct`` with ``sk``; returns :data:`FAILURE` on any mismatch."""
        if ct.scheme != self.name or not ct.payload:
            return FAILURE
        kind, rest = ct.payload[:1], ct.payload[1:]
        length = None
        if kind == b"B":
            if len(rest) < 4:
                return FAILURE
            length, rest = int.from_bytes(rest[:4], "big"), rest[4:]
        elif kind != b"T":
            return FAILURE
        if len(rest) == 0 or len(rest) % 16:
            return FAILURE
        words = [(int.from_bytes(rest[i:i + 8], "big"), int.from_bytes(rest[i + 8:i + 16], "big"))
                 for i in range(0, len(rest), 16)]
        ring = self.key_ring([sk])
        heads = np.array([h for h, _ in words], dtype=np.uint64)
        secrets_ = self._decapsulate(np.repeat(ring, len(words)), heads)
        opened = [_open_words(int(s), h, b, ct.identity, c)
                  for c, (s, (h, b)) in enumerate(zip(secrets_, words))]
        if any(o == _FAILED_CODE for o in opened):
            return FAILURE
        if length is None:
            return decode_message(opened[0]) if len(opened) == 1 else FAILURE
        if len(opened) != (length + 7) // 8:
            return FAILURE
        value = 0
        for o in opened:
            value = (value << 8) | o
        return BitString(value >> (len(opened) * 8 - length), length)


# -- trivial: one hashed-ElGamal key per identity --------------------------------


@lru_cache(maxsize=None)
def safe_prime(bits: int) -> int:
    """Largest safe prime of exactly ``bits`` bits."""
    p = (1 << bits) - 1
    if p % 2 == 0:
        p -= 1
    while p >= 1 << (bits - 1):
        if p % 12 == 11 and sympy.isprime((p - 1) // 2) and sympy.isprime(p):
            return p
        p -= 2
    raise ValueError(f"no safe prime with {bits} bits")


def _powmod(base: np.ndarray, exp: np.ndarray, p: int) -> np.ndarray:
    if p < 1 << 32:
        base = np.asarray(base, dtype=np.uint64) % np.uint64(p)
        exp = np.asarray(exp, dtype=np.uint64).copy()
        base = np.broadcast_to(base, exp.shape).copy()
        result = np.ones(exp.shape, dtype=np.uint64)
        pp = np.uint64(p)
        one = np.uint64(1)
        while np.any(exp):
            odd = (exp & one).astype(bool)
            result = np.where(odd, (result * base) % pp, result)
            base = (base * base) % pp
            exp >>= one
        return result
    base = np.broadcast_to(np.asarray(base, dtype=np.uint64), np.shape(exp))
    return np.array([pow(int(b), int(e), p) for b, e in zip(base, exp)], dtype=np.uint64)


class TrivialPkeIbe(IbeScheme):
    """Per-identity hashed-ElGamal keys over the quadratic residues mod a safe prime.

    The group (and therefore ``lam``) is fixed by the first :meth:`setup`; a
    scheme instance can only parse keys of that size.
    """

    name = "trivial"
    generator = 4

    def __init__(self, lam: int | None = None):
        self.lam = lam
        self._pk_cache: dict[BitString, tuple[np.ndarray, np.ndarray]] = {}

    def mpk_bits(self, lam, m):
        return m * lam

    def _group(self) -> tuple[int, int]:
        if self.lam is None:
            raise IbeError("trivial scheme has no group until setup() fixes lambda")
        p = safe_prime(self.lam)
        return p, (p - 1) // 2

    def setup(self, lam, m, rng):
        self._check_params(lam, m)
        if self.lam is None:
            self.lam = lam
        elif self.lam != lam:
            raise IbeError(f"scheme instance is bound to lambda={self.lam}, got {lam}")
        p, q = self._group()
        xs = [int(x) for x in rng.integers(1, q, size=m)]
        pks = [pow(self.generator, x, p) for x in xs]
        msk = MasterSecretKey(concat_chunks(xs, lam), m, self.mpk_bits(lam, m), lam)
        return IbeKeyMaterial(self.name, lam, m, concat_chunks(pks, lam), msk)

    def keygen(self, msk, identity):
        self._check_identity(msk, identity)
        x = msk.bits.chunk(identity, msk.lam)
        return BitString(x << (msk.k - msk.lam), msk.k)

    def key_ring(self, sks):
        self._group()
        return np.array([sk.value >> (sk.length - self.lam) for sk in sks], dtype=np.uint64)

    def _public_keys(self, mpk: BitString) -> tuple[np.ndarray, np.ndarray]:
        cached = self._pk_cache.get(mpk)
        if cached is None:
            p, q = self._group()
            count = mpk.length // self.lam
            pks = np.array([mpk.chunk(j, self.lam) for j in range(count)], dtype=np.uint64)
            in_range = (pks >= 1) & (pks < np.uint64(p))
            in_group = _powmod(np.where(in_range, pks, np.uint64(1)),
                               np.full(count, q, dtype=np.uint64), p) == 1
            cached = (pks, in_range & in_group)
            if len(self._pk_cache) > 64:
                self._pk_cache.clear()
            self._pk_cache[mpk] = cached
        return cached

    def _encapsulate(self, mpk, ids, rng):
        p, q = self._group()
        if mpk.length % self.lam:
            raise EncryptionError("master public key length is not a multiple of lambda")
        pks, valid = self._public_keys(mpk)
        idx = ids.astype(np.int64)
        inside = idx < len(pks)
        idx = np.where(inside, idx, 0)
        r = rng.integers(1, q, size=len(ids)).astype(np.uint64)
        c1 = _powmod(np.uint64(self.generator), r, p)
        ok = valid[idx] & inside if len(pks) else np.zeros(len(ids), dtype=bool)
        base = np.where(ok, pks[idx], np.uint64(1)) if len(pks) else np.ones(len(ids), dtype=np.uint64)
        return _powmod(base, r, p), c1, ok

    def _decapsulate(self, ring, head):
        p, _ = self._group()
        return _powmod(head, ring, p)


# -- compact: keystore-backed short master public key ----------------------------


@lru_cache(maxsize=1 << 17)
def _symmetric_key(sk: BitString) -> int:
    return int.from_bytes(hashlib.blake2b(sk.to_bytes(), digest_size=8, person=b"ada-compact").digest(), "big")


class CompactIbe(IbeScheme):
    """Short-mpk IBE simulated by a keystore (ideal-functionality style)."""

    name = "compact"

    def __init__(self):
        self._keystore: dict[BitString, MasterSecretKey] = {}
        self._rings: dict[BitString, np.ndarray] = {}

    def mpk_bits(self, lam, m):
        return lam * max(1, (m - 1).bit_length())

    def setup(self, lam, m, rng):
        self._check_params(lam, m)
        k = self.mpk_bits(lam, m)
        mpk = BitString.random(k, rng)
        msk = MasterSecretKey(BitString.random(max(64, lam), rng), m, k, lam)
        if mpk in self._keystore and self._keystore[mpk] != msk:
            raise IbeError("master public key collision in keystore")
        self._keystore[mpk] = msk
        return IbeKeyMaterial(self.name, lam, m, mpk, msk)

    def register(self, mpk: BitString, msk: MasterSecretKey):
        self._keystore[mpk] = msk

    def keygen(self, msk, identity):
        self._check_identity(msk, identity)
        seed = msk.bits.to_bytes() + int(identity).to_bytes(8, "big")
        raw = int.from_bytes(hashlib.shake_256(seed).digest((msk.k + 7) // 8), "big")
        return BitString(raw >> ((msk.k + 7) // 8 * 8 - msk.k), msk.k)

    def key_ring(self, sks):
        return np.array([_symmetric_key(sk) for sk in sks], dtype=np.uint64)

    def _ring_for(self, mpk: BitString) -> np.ndarray:
        ring = self._rings.get(mpk)
        if ring is None:
            msk = self._keystore.get(mpk)
            if msk is None:
                raise EncryptionError("unknown master public key")
            ring = self.key_ring([self.keygen(msk, j) for j in range(msk.m)])
            self._rings[mpk] = ring
        return ring

    def _encapsulate(self, mpk, ids, rng):
        head = random_u64(rng, len(ids))
        try:
            ring = self._ring_for(mpk)
        except EncryptionError:
            return np.zeros(len(ids), dtype=np.uint64), head, np.zeros(len(ids), dtype=bool)
        idx = ids.astype(np.int64)
        ok = idx < len(ring)
        return ring[np.where(ok, idx, 0)], head, ok

    def _decapsulate(self, ring, head):
        return np.asarray(ring, dtype=np.uint64)


SCHEMES = {"trivial": TrivialPkeIbe, "compact": CompactIbe}


def make_scheme(name: str) -> IbeScheme:
    try:
        return SCHEMES[name]()
    except KeyError:
        raise ValueError(f"unsupported IBE scheme {name!r}; choose from {sorted(SCHEMES)}") from None


# -- key material text format -----------------------------------------------------


def dump_keys(keys: IbeKeyMaterial) -> str:
    """Flat ``key=value`` text with hex-encoded bit strings."""
    lines = [
        f"scheme={keys.scheme}",
        f"lambda={keys.lam}",
        f"m={keys.m}",
        f"k={keys.k}",
        f"mpk={keys.mpk.hex()}",
        f"msk={keys.msk.bits.hex()}:{keys.msk.bits.length}",
    ]
    lines += [f"sk.{j}={sk.hex()}" for j, sk in sorted(keys.identity_keys.items())]
    return "\n".join(lines) + "\n"


def load_keys(text: str, scheme: IbeScheme | None = None) -> tuple[IbeKeyMaterial, IbeScheme]:
    """Parse :func:`dump_keys` output; registers the key with ``scheme`` where needed."""
    fields = dict(line.split("=", 1) for line in text.splitlines() if line.strip())
    name, lam, m, k = fields["scheme"], int(fields["lambda"]), int(fields["m"]), int(fields["k"])
    scheme = scheme or make_scheme(name)
    if scheme.name != name:
        raise ValueError(f"key material is for scheme {name!r}, not {scheme.name!r}")
    msk_hex, msk_len = fields["msk"].rsplit(":", 1)
    msk = MasterSecretKey(BitString.from_hex(msk_hex, int(msk_len)), m, k, lam)
    keys = IbeKeyMaterial(name, lam, m, BitString.from_hex(fields["mpk"], k), msk)
    for key, value in fields.items():
        if key.startswith("sk."):
            keys.identity_keys[int(key[3:])] = BitString.from_hex(value, k)
    if isinstance(scheme, CompactIbe):
        scheme.register(keys.mpk, msk)
    elif isinstance(scheme, TrivialPkeIbe) and scheme.lam is None:
        scheme.lam = lam
    return keys, scheme


# -- IND-IBE experiment -------------------------------------------------------------


class RuleViolation(IbeError):
    """An adversary asked for the challenge identity's key."""


class IndIbeAdversary:
    """Two-stage adversary; ``choose`` is stage one, ``guess`` stage two.

    State between the stages lives on the instance.  Set ``rule_breaking``
    only for negative tests: the harness then tolerates KeyGen queries on the
    challenge identity instead of aborting.
    """

    rule_breaking = False

    def choose(self, mpk, keygen, rng):
        """Return ``(id_star, msgs0, msgs1)``."""
        raise NotImplementedError

    def guess(self, mpk, challenge, keygen, rng) -> int:
        raise NotImplementedError


class RandomGuessAdversary(IndIbeAdversary):
    def __init__(self, k_msgs: int = 1):
        self.k_msgs = k_msgs

    def choose(self, mpk, keygen, rng):
        return 0, [-1] * self.k_msgs, [1] * self.k_msgs

    def guess(self, mpk, challenge, keygen, rng):
        return int(rng.integers(2))


class KeyAbusingAdversary(IndIbeAdversary):
    """Requests ``sk_{id*}`` and decrypts the challenge."""

    rule_breaking = True

    def __init__(self, scheme: IbeScheme, k_msgs: int = 1):
        self.scheme = scheme
        self.k_msgs = k_msgs

    def choose(self, mpk, keygen, rng):
        self.id_star = 0
        return self.id_star, [-1] * self.k_msgs, [1] * self.k_msgs

    def guess(self, mpk, challenge, keygen, rng):
        sk = keygen(self.id_star)
        return int(self.scheme.decrypt(sk, challenge[0]) == 1)


class BodyBitDistinguisher(IndIbeAdversary):
    """Guesses from the low bits of the challenge bodies, using keys of other identities.

    It learns, from ciphertexts it can open, how the low ciphertext bits
    relate to the plaintext and applies the majority rule to the challenge.
    Against a sound pad this is a coin flip.
    """

    def __init__(self, scheme: IbeScheme, k_msgs: int = 4, training: int = 32):
        self.scheme = scheme
        self.k_msgs = k_msgs
        self.training = training

    def choose(self, mpk, keygen, rng):
        self.id_star = 0
        self.helper = 1
        self.sk_helper = keygen(self.helper)
        return self.id_star, [-1] * self.k_msgs, [1] * self.k_msgs

    def _low_bits(self, ct: Ciphertext) -> int:
        return ct.payload[-1] & 0b11

    def guess(self, mpk, challenge, keygen, rng):
        votes = {}
        for _ in range(self.training):
            msg = int(rng.choice([-1, 1]))
            ct = self.scheme.encrypt(mpk, self.helper, msg, rng)
            votes.setdefault(self._low_bits(ct), []).append(msg)
        score = 0
        for ct in challenge:
            seen = votes.get(self._low_bits(ct), [])
            score += sum(seen)
        if score == 0:
            return int(rng.integers(2))
        return int(score > 0)


def ind_ibe_experiment(scheme: IbeScheme, adversary: IndIbeAdversary, lam: int, m: int,
                       k_msgs: int, rng: np.random.Generator, force_b: int | None = None) -> int:
    """One run of the IND-IBE game; returns 1 iff the adversary guesses ``b``.

    ``force_b`` pins the challenge bit (for view audits).  The randomness for
    setup, adversary and encryption come from independent child streams, so
    two runs that differ only in ``b`` give the adversary identical views up
    to the challenge.
    """
    setup_rng, adv_rng, bit_rng, enc_rng = rng.spawn(4)
    keys = scheme.setup(lam, m, setup_rng)
    queried: list[int] = []
    id_star = None

    def keygen(identity):
        identity = int(identity)
        if id_star is not None and identity == id_star and not adversary.rule_breaking:
            raise RuleViolation(f"KeyGen queried on challenge identity {identity}")
        queried.append(identity)
        return scheme.keygen(keys.msk, identity)

    id_star, msgs0, msgs1 = adversary.choose(keys.mpk, keygen, adv_rng)
    id_star = int(id_star)
    if not 0 <= id_star < m:
        raise ValueError(f"challenge identity {id_star} outside [0, {m})")
    if id_star in queried and not adversary.rule_breaking:
        raise RuleViolation(f"KeyGen queried on challenge identity {id_star}")
    if len(msgs0) != k_msgs or len(msgs1) != k_msgs:
        raise ValueError(f"adversary must submit {k_msgs} messages per vector")
    for a, b in zip(msgs0, msgs1):
        if message_length(a) != message_length(b):
            raise ValueError("challenge messages must have matching lengths")
    b = int(bit_rng.integers(2)) if force_b is None else int(force_b)
    chosen = msgs1 if b else msgs0
    challenge = [scheme.encrypt(keys.mpk, id_star, msg, enc_rng) for msg in chosen]
    guess = adversary.guess(keys.mpk, challenge, keygen, adv_rng)
    return int(int(guess) == b)
