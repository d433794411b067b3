"""Reproducible noise streams for every random decision in the pipeline.

A NoiseDraw is addressed by (master_seed, stream path). Two draws with the
same address yield the same values no matter which thread asks first or in
what order stages complete, which is what makes whole runs replayable.

Sampling helpers are built on uniform() only (partial Fisher-Yates, index
scaling) so byte-level run reproducibility does not depend on numpy's
higher-level sampling algorithms staying stable across releases.
"""

from __future__ import annotations

import zlib
from typing import Sequence, TypeVar

import numpy as np

T = TypeVar("T")

_MASK64 = (1 << 64) - 1


def _part_to_uint32(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError(f"stream path components must be non-negative, got {part}")
    return part & 0xFFFFFFFF


class NoiseDraw:
    """One independent, restartable stream of uniform draws.

    Streams form a tree: ``substream(*parts)`` derives a child whose values
    are independent of the parent's and of every sibling's. Integer and
    string path components are both accepted; strings are hashed stably.
    """

    def __init__(self, master_seed: int, stream: tuple[int | str, ...] = ()) -> None:
        self.master_seed = master_seed & _MASK64
        self.stream = tuple(stream)
        spawn_key = tuple(_part_to_uint32(p) for p in self.stream)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(seq))

    def substream(self, *parts: int | str) -> "NoiseDraw":
        return NoiseDraw(self.master_seed, self.stream + parts)

    def uniform(self) -> float:
        """Next draw in [0, 1)."""
        return float(self._gen.random())

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in the inclusive range [lo, hi]."""
        if hi < lo:
            raise ValueError(f"empty range [{lo}, {hi}]")
        span = hi - lo + 1
        k = int(self.uniform() * span)
        if k >= span:  # guard against u*span rounding up to span
            k = span - 1
        return lo + k

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise ValueError("cannot choose from an empty sequence")
        return seq[self.randint(0, len(seq) - 1)]

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        """k distinct items, uniform without replacement (partial Fisher-Yates)."""
        items = list(seq)
        n = len(items)
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} of {n} items")
        for i in range(k):
            j = self.randint(i, n - 1)
            items[i], items[j] = items[j], items[i]
        return items[:k]

    def shuffle(self, seq: Sequence[T]) -> list[T]:
        return self.sample(seq, len(seq))

    def __repr__(self) -> str:
        return f"NoiseDraw(master_seed={self.master_seed}, stream={self.stream!r})"
