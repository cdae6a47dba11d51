"""Reproducible random number streams.

A stream is identified by ``(master_seed, stream_index)``. The pair is fed
through :class:`numpy.random.SeedSequence` (the index becomes the spawn key),
which hashes it into the key of a counter-based Philox generator. Two
consequences the rest of the package relies on:

* the same pair always yields the same draw sequence, on any platform, and
* distinct indices under one master seed give statistically independent
  streams, so parallel chains never share randomness.
"""

from __future__ import annotations

import numpy as np

__all__ = ["RngStream"]

# Draws from the open interval use 53-bit integers shifted off both endpoints.
_INV_2_53 = float(2.0**-53)


class RngStream:
    """A named, replayable source of randomness.

    Parameters
    ----------
    master_seed:
        Experiment-level seed, any Python int (64-bit range recommended).
    stream_index:
        Nonnegative index of this stream under the master seed.
    """

    __slots__ = ("master_seed", "stream_index", "generator")

    def __init__(self, master_seed: int, stream_index: int = 0):
        if stream_index < 0:
            raise ValueError("stream_index must be nonnegative")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    def substream(self, index: int) -> "RngStream":
        """A stream derived from this one by a second-level index.

        Uses a fixed mixing rule (index folded into the spawn key) so the
        result is reproducible without coordination.
        """
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.stream_index, int(index))
        )
        out = object.__new__(RngStream)
        out.master_seed = self.master_seed
        out.stream_index = self.stream_index
        out.generator = np.random.Generator(np.random.Philox(seq))
        return out

    # Convenience passthroughs. Keeping call sites on RngStream (rather than
    # raw Generators) makes seed plumbing auditable.
    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def exponential(self, scale=1.0, size=None):
        return self.generator.exponential(scale, size)

    def gamma(self, shape, scale=1.0, size=None):
        return self.generator.gamma(shape, scale, size)

    def beta(self, a, b, size=None):
        return self.generator.beta(a, b, size)

    def poisson(self, lam, size=None):
        return self.generator.poisson(lam, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def open_unit(self, size=None):
        """Uniform draws strictly inside (0, 1).

        Quantile transforms of unbounded laws map 0 and 1 to infinities, so
        inversion sampling uses this instead of ``random()``.
        """
        raw = self.generator.integers(0, 2**53, size=size)
        return (raw + 0.5) * _INV_2_53

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"
