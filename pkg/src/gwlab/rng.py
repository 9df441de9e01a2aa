"""Counter-based randomness: every stream is a Philox generator keyed by
(seed, tag, sample index), and words are consumed one per time step, so a walk
of length n is a prefix of the walk of length n' > n with the same key."""

from __future__ import annotations

import os

import numpy as np

MASK64 = (1 << 64) - 1

# stream tags, one per kind of experiment
TAG_SWS = 1
TAG_SOW = 2
TAG_EXCURSION = 3
TAG_STABLE = 4
TAG_PROBE = 5


def philox(seed: int, sample: int, tag: int = 0) -> np.random.Philox:
    key = ((int(seed) & MASK64) << 64) | ((int(tag) & 0xFFFF) << 48) | (int(sample) & ((1 << 48) - 1))
    return np.random.Philox(key=key)


def generator(seed: int, sample: int, tag: int = 0) -> np.random.Generator:
    return np.random.Generator(philox(seed, sample, tag))


def raw_words(seed: int, sample: int, count: int, tag: int = 0) -> np.ndarray:
    """count uint64 words; word j depends only on (seed, tag, sample, j)."""
    return philox(seed, sample, tag).random_raw(int(count)).astype(np.uint64)


def uniform_index(bits32: np.ndarray, m: int) -> np.ndarray:
    """Map 32 random bits to {0..m-1} by multiply-shift (bias below m / 2^32)."""
    return ((bits32.astype(np.uint64) * np.uint64(m)) >> np.uint64(32)).astype(np.int64)


def thread_count(requested: int | None = None) -> int:
    env = os.environ.get("GWLAB_THREADS")
    if env:
        return max(1, int(env))
    if requested:
        return max(1, int(requested))
    return 1
