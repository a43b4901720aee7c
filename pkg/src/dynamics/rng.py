"""Reproducible random streams for trajectories.

Streams wrap numpy's PCG64 bit generator, whose output for a given seed is
fixed across platforms. Per-trajectory seeds are derived from a master seed
through ``numpy.random.SeedSequence`` so that the mapping is portable and
independent of execution order.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np


def derive_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit seed for trajectory ``index`` of an ensemble."""
    sequence = np.random.SeedSequence([int(master_seed), int(index)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


class RngStream:
    """Uniform draws in ``(0, 1]`` plus a counter of consumed draws."""

    def __init__(self, seed: int | Sequence[int]) -> None:
        self.seed = seed
        self._generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
        self.counter = 0

    def uniform(self) -> float:
        self.counter += 1
        # random() is in [0, 1); reflect it onto (0, 1].
        return 1.0 - float(self._generator.random())

    def choose(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices out of ``range(n)``, uniformly at random."""
        self.counter += 1
        return np.sort(self._generator.choice(n, size=k, replace=False))
