"""Counter-based random streams.

A Stream is SplitMix64 run in counter mode: the k-th draw is a fixed avalanche
hash of ``start + k * GOLDEN``, where ``start`` is derived from the seed and an
optional key path. That makes draws reproducible word by word, so the compiled
and pure kernels (which advance the counter in a C loop or a Python loop) emit
bit-identical results, and any sub-computation can be given its own
independent, individually replayable stream: ``Stream(seed, n, i)`` is the
stream for replicate ``i`` of an experiment at size ``n``.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer: an avalanching permutation of a 64-bit word."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_state(seed: int, *path: int) -> int:
    """Fold (seed, *path) into a stream start state.

    Distinct key paths give unrelated streams; the fold is order-sensitive so
    (seed, 2, 3) and (seed, 3, 2) differ.
    """
    h = mix64(seed & MASK64)
    for p in path:
        h = mix64(h ^ mix64((p & MASK64) + GOLDEN))
    return h


class Stream:
    """Seedable stream of uniform draws, forkable by key path."""

    __slots__ = ("_ctr",)

    def __init__(self, seed: int, *path: int):
        self._ctr = derive_state(seed, *path)

    @property
    def state(self) -> int:
        """Current counter; kernels consume the stream by advancing this."""
        return self._ctr

    def set_state(self, state: int) -> None:
        self._ctr = state & MASK64

    def next64(self) -> int:
        self._ctr = (self._ctr + GOLDEN) & MASK64
        return mix64(self._ctr)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n), exact (rejection, no modulo bias)."""
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        span = MASK64 + 1
        limit = span - span % n
        while True:
            x = self.next64()
            if x < limit:
                return x % n

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends included."""
        if hi < lo:
            raise ValueError("empty range")
        return lo + self.randbelow(hi - lo + 1)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next64() >> 11) * 2.0**-53

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]

    def shuffle(self, items: list) -> None:
        """Fisher-Yates shuffle in place."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_distinct(self, n: int, m: int) -> list[int]:
        """m distinct uniform values from [1, n] (Floyd's algorithm).

        Draw order is part of the stream contract: one bounded draw per
        j = n-m+1 .. n. The attachment kernels replay exactly this sequence.
        """
        if not 0 <= m <= n:
            raise ValueError("need 0 <= m <= n")
        chosen: set[int] = set()
        for j in range(n - m + 1, n + 1):
            t = 1 + self.randbelow(j)
            chosen.add(j if t in chosen else t)
        return sorted(chosen)

    def __repr__(self) -> str:
        return f"Stream(state={self._ctr:#018x})"
