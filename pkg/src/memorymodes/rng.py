"""Counter-based random streams for reproducible ensemble sampling.

Draw positions are addressed, not consumed sequentially: the stream for one
engine run is keyed by (seed, engine stream id) and the counter block index
carries the time-step index, so member i at step k always sees the same
uniform no matter how the work is scheduled. Any contiguous member range can
be generated on its own and equals the corresponding slice of the full
sequence, which makes ensemble runs bit-reproducible for every worker count.
"""

from __future__ import annotations

import os

import numpy as np
from numpy.random import Generator, Philox

__all__ = ["step_uniforms", "resolve_workers"]

# Philox-4x64 emits four 64-bit words per counter tick; one double per word.
_WORDS_PER_BLOCK = 4


def step_uniforms(seed: int, stream: int, step: int, start: int, stop: int) -> np.ndarray:
    """Uniform doubles for members [start, stop) at one time step.

    Identical to slicing the full member sequence of the step: the counter
    is positioned at the enclosing output block and any in-block offset is
    discarded before drawing.
    """
    if stop <= start:
        return np.empty(0)
    block, lane = divmod(start, _WORDS_PER_BLOCK)
    counter = np.array([block, 0, 0, step], dtype=np.uint64)
    key = np.array([seed, stream], dtype=np.uint64)
    gen = Generator(Philox(counter=counter, key=key))
    if lane:
        gen.random(lane)
    return gen.random(stop - start)


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: explicit argument, else MEMORYMODES_THREADS, else 1.

    A value of 0 means one worker per available CPU.
    """
    value = requested
    if value is None:
        raw = os.environ.get("MEMORYMODES_THREADS", "").strip()
        value = int(raw) if raw else 1
    if value == 0:
        return os.cpu_count() or 1
    if value < 0:
        raise ValueError(f"worker count must be >= 0, got {value}")
    return value
