"""Deterministic per-(experiment, point, purpose) random streams.

Streams are derived from the master seed through SeedSequence spawn keys, so
every grid point draws from its own independent generator regardless of how
points are scheduled across workers.
"""

from __future__ import annotations

import numpy as np

# purpose slots within one grid point
PHYSICAL = 0
UNCORRECTED = 1
CORRECTED = 2
TOMOGRAPHY = 3
BOOTSTRAP = 4
RESAMPLING = 5
SECOND_ORDER = 6


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
