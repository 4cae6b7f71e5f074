# FILE: dualsim/utils/rng.py
# CONTRACT: identical seed => identical draw sequence (PCG64 is platform independent)
import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def scenario_key(name):
    return zlib.crc32(str(name).encode("utf-8"))


def derive_seed(base_seed, scenario, replication=0):
    """base_seed XOR splitmix(scenario key, replication). Frozen: changing it changes every stored result."""
    key = scenario if isinstance(scenario, int) else scenario_key(scenario)
    return (int(base_seed) ^ splitmix64(((key & 0xFFFFFFFF) << 32) | (replication & 0xFFFFFFFF))) & MASK64


def replication_seeds(base_seed, n_reps):
    return [(int(base_seed) + i) & MASK64 for i in range(n_reps)]


class SeededStream:
    """A seed plus the generator it drives."""

    __slots__ = ("seed", "generator")

    def __init__(self, seed):
        self.seed = int(seed) & MASK64
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def __repr__(self):
        return f"SeededStream(seed={self.seed})"
