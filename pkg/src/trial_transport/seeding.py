"""Counter-based random streams keyed by (master seed, counters)."""

from __future__ import annotations

import numpy as np

# stream tags keep bootstrap, simulation and calibration draws independent
BOOTSTRAP_STREAM = 1
SIMULATION_STREAM = 2
CALIBRATION_STREAM = 3
ORACLE_STREAM = 4


def replicate_rng(master_seed: int, *counters: int) -> np.random.Generator:
    """Generator for one replicate; identical for identical keys regardless of call order."""
    if master_seed < 0 or any(c < 0 for c in counters):
        raise ValueError("seeds and counters must be non-negative")
    sequence = np.random.SeedSequence([int(master_seed), *(int(c) for c in counters)])
    return np.random.Generator(np.random.Philox(sequence))
