"""Fixed-width bit strings and the 64-bit mixing function used by the toy schemes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


@dataclass(frozen=True, order=True)
class BitString:
    """An immutable bit string of declared length.

    Bit ``i`` is the i-th most significant bit of ``value`` (bit 0 is the
    leftmost character of :meth:`to_str`).
    """

    value: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if self.value < 0 or self.value >> self.length:
            raise ValueError(f"value does not fit in {self.length} bits")

    @classmethod
    def from_bits(cls, bits) -> BitString:
        value = 0
        bits = list(bits)
        for b in bits:
            if b not in (0, 1, True, False):
                raise ValueError(f"not a bit: {b!r}")
            value = (value << 1) | int(b)
        return cls(value, len(bits))

    @classmethod
    def random(cls, length: int, rng: np.random.Generator) -> BitString:
        value = 0
        remaining = length
        while remaining > 0:
            take = min(64, remaining)
            word = int(rng.integers(0, 1 << take, dtype=np.uint64)) if take < 64 else int(
                rng.integers(0, 2**64, dtype=np.uint64))
            value = (value << take) | word
            remaining -= take
        return cls(value, length)

    @classmethod
    def from_hex(cls, text: str, length: int) -> BitString:
        return cls(int(text, 16) if text else 0, length)

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(f"bit index {i} out of range for length {self.length}")
        return (self.value >> (self.length - 1 - i)) & 1

    def bits(self) -> list[int]:
        return [self.bit(i) for i in range(self.length)]

    def chunk(self, index: int, width: int) -> int:
        """Integer value of the ``index``-th ``width``-bit chunk, left to right."""
        shift = self.length - (index + 1) * width
        if shift < 0:
            raise IndexError("chunk out of range")
        return (self.value >> shift) & ((1 << width) - 1)

    def concat(self, other: BitString) -> BitString:
        return BitString((self.value << other.length) | other.value, self.length + other.length)

    def to_bytes(self) -> bytes:
        return self.length.to_bytes(4, "big") + self.value.to_bytes((self.length + 7) // 8, "big")

    def hex(self) -> str:
        return format(self.value, "x").zfill((self.length + 3) // 4) if self.length else ""

    def to_str(self) -> str:
        return format(self.value, "b").zfill(self.length) if self.length else ""

    def __len__(self):
        return self.length

    def __repr__(self):
        shown = self.hex()
        if len(shown) > 24:
            shown = shown[:10] + "..." + shown[-10:]
        return f"BitString({self.length} bits, 0x{shown})"


def concat_chunks(values, width: int) -> BitString:
    out = 0
    count = 0
    for v in values:
        v = int(v)
        if v < 0 or v >> width:
            raise ValueError(f"{v} does not fit in {width} bits")
        out = (out << width) | v
        count += 1
    return BitString(out, count * width)


def mix64(z):
    """SplitMix64 finalizer on a Python int or a uint64 numpy array."""
    if isinstance(z, np.ndarray):
        z = z.astype(np.uint64, copy=True)
        z ^= z >> np.uint64(30)
        z *= np.uint64(_M1)
        z ^= z >> np.uint64(27)
        z *= np.uint64(_M2)
        z ^= z >> np.uint64(31)
        return z
    z &= MASK64
    z ^= z >> 30
    z = (z * _M1) & MASK64
    z ^= z >> 27
    z = (z * _M2) & MASK64
    return z ^ (z >> 31)


def random_u64(rng: np.random.Generator, size=None):
    return rng.integers(0, 2**64, size=size, dtype=np.uint64)
