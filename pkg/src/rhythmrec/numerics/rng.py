"""Seeded random streams.

All randomness goes through numpy's PCG64 bit generator, which produces the
same stream on every platform for a given seed.  Independent consumers draw
from named sub-streams so that adding a consumer (for example an extra
parameter table) never shifts the numbers another consumer sees.
"""

from __future__ import annotations

import zlib

import numpy as np


def make_rng(seed: int, *names: str) -> np.random.Generator:
    """Return a generator keyed by ``seed`` and an optional path of names."""
    entropy = [int(seed) & 0xFFFFFFFF] + [zlib.crc32(n.encode("utf-8")) for n in names]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
