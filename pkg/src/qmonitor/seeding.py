"""Counter-based seed derivation for reproducible, extensible ensembles.

Run ``i`` of an ensemble with master seed ``m`` gets

    splitmix64(m + (i + 1) * 0x9E3779B97F4A7C15  mod 2**64)

The increment is odd and the splitmix64 finalizer is a bijection on 64-bit
words, so distinct indices never share a seed and adding runs leaves the
existing ones untouched.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# independent substreams of one run
STREAM_ALPHA = 0
STREAM_BETA = 1
STREAM_OUTCOMES = 2
STREAM_GUESS = 3
N_STREAMS = 4


def splitmix64(x: int) -> int:
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    if index < 0:
        raise ValueError(f"run index must be non-negative, got {index}")
    return splitmix64((int(master_seed) + (index + 1) * GOLDEN_GAMMA) & MASK64)


def run_seeds(master_seed: int, n_runs: int, start: int = 0) -> list[int]:
    return [derive_seed(master_seed, i) for i in range(start, start + n_runs)]


def run_streams(run_seed: int) -> list[np.random.Generator]:
    """The per-run generators: alpha phases, beta phases, outcomes, guesses."""
    children = np.random.SeedSequence(int(run_seed) & MASK64).spawn(N_STREAMS)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]
