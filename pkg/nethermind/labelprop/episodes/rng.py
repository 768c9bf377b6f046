"""
Counter-based random streams.  Every random draw in the package comes from a generator addressed by
``(seed, stream, index)``, so results never depend on how many draws happened before, or on which worker
performs them.
"""
import numpy as np

from nethermind.labelprop.types import RngStream


def stream_rng(seed: int, stream: RngStream, index: int | tuple[int, ...] = 0) -> np.random.Generator:
    """
    Returns the generator at position ``index`` of ``stream`` for a run seed.

    :param seed: non-negative run seed
    :param stream: purpose of the draws (sampling, init, noise, ...)
    :param index: counter within the stream, ie. the episode number.  Tuples address nested counters, ie.
        (split, episode)
    """
    key = index if isinstance(index, tuple) else (index,)
    sequence = np.random.SeedSequence(seed, spawn_key=(stream.value, *key))
    return np.random.Generator(np.random.Philox(sequence))


class StreamCounters:
    """Tracks the next unused index of every stream for a run, so a checkpoint can resume the exact sequence"""

    def __init__(self, seed: int, counters: dict[str, int] | None = None):
        self.seed = seed
        self.counters: dict[str, int] = {stream.name: 0 for stream in RngStream}
        if counters:
            self.counters.update(counters)

    def next(self, stream: RngStream) -> np.random.Generator:
        """Returns the generator at the current counter position and advances the counter"""
        index = self.counters[stream.name]
        self.counters[stream.name] = index + 1
        return stream_rng(self.seed, stream, index)

    def position(self, stream: RngStream) -> int:
        return self.counters[stream.name]

    def seek(self, stream: RngStream, index: int) -> None:
        self.counters[stream.name] = index
