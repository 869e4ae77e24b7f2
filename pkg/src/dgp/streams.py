"""Keyed random streams so results never depend on execution order."""
from __future__ import annotations

from enum import IntEnum

import numpy as np


class StreamRole(IntEnum):
    VOLATILITY = 0
    NOISE = 1
    ASSIGNMENT = 2
    POSTERIOR = 3
    PLACEBO = 4
    BRANCH = 5


def unit_stream(seed: int, rep: int, unit: int, role: StreamRole | int) -> np.random.Generator:
    """Independent generator for one (seed, replication, unit, role) key."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(rep), int(unit), int(role)]))


def replication_seed(seed: int, rep: int) -> int:
    """Stable 64-bit seed identifying a replication."""
    state = np.random.SeedSequence([int(seed), int(rep)]).generate_state(1, dtype=np.uint64)
    return int(state[0])
