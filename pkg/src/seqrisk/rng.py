"""Counter-based random streams with deterministic derivation.

All sampling in the package draws from Philox generators keyed through
``numpy.random.SeedSequence`` spawn keys, so any consumer can be handed an
independent stream identified by ``(seed, key...)`` alone.  Trajectory
streams use single-element keys (one stream per trajectory index), which
makes serial and worker-pool sampling bit-identical; experiment stages use
keys of length >= 2 and therefore never collide with trajectory streams
derived from the same seed.
"""

from __future__ import annotations

import numpy as np


def trajectory_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent stream for the trajectory at position ``index``."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent stream for a labeled experiment stage.

    ``key`` must have at least two elements so stage streams and trajectory
    streams partition the spawn-key space.
    """
    if len(key) < 2:
        raise ValueError("stage streams require a key of length >= 2")
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))
    )


def as_generator(rng: np.random.Generator | int | None, seed: int, *key: int) -> np.random.Generator:
    """Accept an explicit generator, an integer seed, or None (derive from ``seed``)."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return substream(seed, *key)
    return substream(int(rng), *key)
