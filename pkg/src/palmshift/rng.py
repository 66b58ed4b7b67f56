"""Counter-based splittable random number streams."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by (seed, stream_index).

    Streams with distinct indices are statistically independent, and the
    sample sequence of a given stream never depends on the order in which
    other streams are consumed (the underlying Philox generator is
    counter-based).  ``stream_index`` is a tuple so streams can be split
    hierarchically: experiment -> replication -> cell.
    """

    seed: int
    stream_index: tuple = ()

    def __post_init__(self):
        idx = self.stream_index
        if isinstance(idx, (int, np.integer)):
            idx = (int(idx),)
        idx = tuple(int(i) for i in idx)
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if any(i < 0 for i in idx):
            raise ValueError("stream indices must be nonnegative")
        object.__setattr__(self, "stream_index", idx)

    def child(self, *indices: int) -> "RngStream":
        """Split off a sub-stream; distinct index paths are independent."""
        return RngStream(self.seed, self.stream_index + tuple(int(i) for i in indices))

    def generator(self) -> np.random.Generator:
        """Fresh generator at the start of this stream's sequence."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream_index)
        return np.random.Generator(np.random.Philox(ss))
