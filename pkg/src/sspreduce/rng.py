"""Seeded, splittable random streams.

Every stream is a Philox (counter-based) generator keyed by ``(seed, label)``,
so environment noise, instance generation and learner coin flips never share
state and a refactor that adds draws to one stream leaves the others intact.
"""
from __future__ import annotations

import zlib

import numpy as np

_BUFFER = 4096


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


class RngStream:
    """Single-owner random stream identified by ``(seed, label)``.

    Uniform draws are served from a pre-generated block, which keeps the
    per-step cost of the simulation loop low without changing the sequence.
    """

    def __init__(self, seed: int, label: str = "env"):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.label = label
        seq = np.random.SeedSequence([seed, _label_key(label)])
        self._gen = np.random.Generator(np.random.Philox(seq))
        self._buf: list[float] = []
        self._pos = 0

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, label={self.label!r})"

    def spawn(self, sublabel: str) -> "RngStream":
        """Independent child stream; depends only on (seed, label, sublabel)."""
        return RngStream(self.seed, f"{self.label}/{sublabel}")

    def random(self) -> float:
        """One uniform draw in [0, 1)."""
        if self._pos >= len(self._buf):
            self._buf = self._gen.random(_BUFFER).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def integers(self, n: int) -> int:
        """Uniform integer in ``range(n)`` from a single uniform draw."""
        return min(int(self.random() * n), n - 1)

    def uniform_array(self, size) -> np.ndarray:
        """Block of uniforms drawn directly from the generator (bypasses the buffer)."""
        return self._gen.random(size)

    def beta(self, a: float, b: float) -> float:
        return float(self._gen.beta(a, b))
