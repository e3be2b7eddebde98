"""Seed derivation.

Every random stream is derived from ``(master_seed, drop, label)`` through a
splitmix64 mix so that drops are isolated from each other and results do not
depend on execution order.
"""
import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, *parts) -> int:
    """Fold integers and strings into a 64-bit seed."""
    h = splitmix64(int(master_seed) & MASK64)
    for p in parts:
        if isinstance(p, str):
            v = zlib.crc32(p.encode("utf-8"))
        else:
            v = int(p) & MASK64
        h = splitmix64(h ^ v)
    return h


def make_rng(master_seed: int, *parts) -> np.random.Generator:
    return np.random.default_rng(mix_seed(master_seed, *parts))
