"""Keyed PRF and deterministic byte stream.

Both endpoints of a provisioning must be able to regenerate identical secret
material from a shared seed on different machines, so all randomness in this
package flows through ByteStream (SHA-256 in counter mode) instead of the
platform RNG.  The PRF is HMAC-SHA-256 over length-prefixed fields.
"""

from __future__ import annotations

import hashlib
import hmac

PRF_BYTES = 32


def seed_bytes(seed: int | bytes) -> bytes:
    """Canonical byte form of a seed: big-endian, at least 8 bytes."""
    if isinstance(seed, bytes):
        return seed
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return seed.to_bytes(max(8, (seed.bit_length() + 7) // 8), "big")


def prf(key: bytes, *fields: bytes) -> bytes:
    """HMAC-SHA-256 of the length-prefixed concatenation of fields.

    Length prefixes keep distinct field splits from colliding, e.g.
    (b"ab", b"c") never hashes like (b"a", b"bc").
    """
    msg = bytearray()
    for f in fields:
        msg += len(f).to_bytes(2, "big")
        msg += f
    return hmac.new(key, bytes(msg), hashlib.sha256).digest()


class ByteStream:
    """Deterministic byte source seeded from an integer or byte string.

    Draws only depend on the seed, the context label, and the order of calls,
    never on platform or interpreter state.
    """

    def __init__(self, seed: int | bytes, context: bytes = b""):
        self._key = hashlib.sha256(seed_bytes(seed) + b"\x00" + context).digest()
        self._counter = 0
        self._buf = b""

    def take(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(
                self._key + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def randbelow(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        bits = bound.bit_length()
        nbytes = (bits + 7) // 8
        shift = nbytes * 8 - bits
        while True:
            v = int.from_bytes(self.take(nbytes), "big") >> shift
            if v < bound:
                return v

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] inclusive."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.randbelow(hi - lo + 1)

    def shuffle(self, items: list) -> None:
        # Fisher-Yates; uniform given a uniform randbelow.
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]
