"""Deterministic keyed PRNG used for every stochastic choice in the package.

The generator is SplitMix64: a 64-bit counter advanced by the golden-ratio
increment, pushed through an avalanche finalizer.  Two properties matter
here and are relied on by the embedding pipelines:

* identical keys give bit-identical streams on every platform, so stego
  files produced on one machine extract on another;
* ``prng_mix(key, index)`` is a pure function of (key, index) and injective
  in ``index`` for a fixed key, so pixel-visiting orders can be computed
  random-access (and in parallel) instead of by drawing a stream.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer: xor-shift/multiply avalanche of a 64-bit word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def prng_mix(key: int, index: int) -> int:
    """One-shot keyed hash of a position index.

    Equals ``mix64(key XOR index*GOLDEN)``.  For a fixed key this is a
    bijection of the index space, hence priorities derived from it are
    tie-free.
    """
    return mix64((key ^ (index * GOLDEN)) & MASK64)


def prng_mix_array(key: int, indices: np.ndarray) -> np.ndarray:
    """Vectorized ``prng_mix`` over an integer index array (returns uint64)."""
    z = (indices.astype(np.uint64) * np.uint64(GOLDEN)) ^ np.uint64(key & MASK64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


class KeyedPrng:
    """SplitMix64 stream generator with 64-bit state."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        """Uniform in [0, 1) using the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def next_below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (MASK64 + 1) - (MASK64 + 1) % n
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def bits(self, count: int) -> np.ndarray:
        """``count`` pseudo-random bits, 64 per draw, MSB of each word first."""
        words = (count + 63) // 64
        raw = np.empty(words, dtype=np.uint64)
        for i in range(words):
            raw[i] = self.next_u64()
        unpacked = np.unpackbits(raw.view(np.uint8).reshape(words, 8)[:, ::-1], axis=1)
        return unpacked.reshape(-1)[:count].astype(np.uint8)

    def normal(self, size: int) -> np.ndarray:
        """Standard normal draws via Box-Muller on paired uniforms."""
        pairs = (size + 1) // 2
        u1 = np.empty(pairs)
        u2 = np.empty(pairs)
        for i in range(pairs):
            # keep u1 away from 0 so log() is finite
            u1[i] = (self.next_u64() >> 11) * (1.0 / (1 << 53)) + 2.0 ** -54
            u2[i] = (self.next_u64() >> 11) * (1.0 / (1 << 53))
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return out[:size]

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), order given by partial Fisher-Yates."""
        if k > n:
            raise ValueError("cannot draw %d distinct items from %d" % (k, n))
        pool = np.arange(n)
        for i in range(k):
            j = i + self.next_below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k].copy()


def parse_key(text: str) -> int:
    """Parse a 16-hex-digit key string into a 64-bit integer."""
    s = text.strip().lower()
    if s.startswith("0x"):
        s = s[2:]
    if len(s) != 16 or any(c not in "0123456789abcdef" for c in s):
        raise ValueError("key must be exactly 16 hex digits, got %r" % text)
    return int(s, 16)
