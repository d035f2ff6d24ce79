"""Counter-based uniform streams.

Every uniform is a pure function of ``(seed, stream, counter)``, so a trial's
draws do not depend on how many other trials ran before it or on which thread
ran it. The mixer is the SplitMix64 finalizer applied to a Weyl-sequence
counter.
"""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / float(1 << 53)

# stream salts; distinct streams for the same seed are statistically independent
HITS = 0x5EED_0001
GILLESPIE_TIME = 0x5EED_0002
GILLESPIE_PICK = 0x5EED_0003
RESERVOIR = 0x5EED_0004
RESERVOIR_ORACLE = 0x5EED_0005


def _u64(value) -> np.ndarray:
    if isinstance(value, np.ndarray):
        return value.astype(np.uint64, copy=False)
    return np.asarray(int(value) & _MASK, dtype=np.uint64)


def mix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer; wraps modulo 2**64."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> np.uint64(30))) * _M1
        x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def trial_seeds(master_seed: int, trials) -> np.ndarray:
    """Per-trial 64-bit seeds for trial indices ``trials`` (int array or range)."""
    idx = np.asarray(trials, dtype=np.uint64)
    base = mix64(_u64(master_seed) + _GOLDEN)
    with np.errstate(over="ignore"):
        return mix64(base + (idx + np.uint64(1)) * _GOLDEN)


def trial_seed(master_seed: int, trial: int) -> int:
    return int(trial_seeds(master_seed, np.asarray([trial]))[0])


def uniforms(seeds, counter: int, stream: int = HITS) -> np.ndarray:
    """Uniforms strictly inside (0, 1), one per seed, at position ``counter``."""
    s = _u64(seeds)
    with np.errstate(over="ignore"):
        x = mix64(s ^ _u64(stream))
        x = mix64(x + _u64(counter + 1) * _GOLDEN)
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def raw_bits(seeds, counter: int, stream: int) -> np.ndarray:
    """Full 64-bit hash at ``counter``; used as a sort key for reservoirs."""
    s = _u64(seeds)
    with np.errstate(over="ignore"):
        x = mix64(s ^ _u64(stream))
        return mix64(x + _u64(counter + 1) * _GOLDEN)


def uniform_stream(seed: int, stream: int = HITS) -> Iterator[float]:
    """Unbounded scalar stream for a single trial seed."""
    counter = 0
    while True:
        yield float(uniforms(seed, counter, stream))
        counter += 1
