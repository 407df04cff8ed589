"""Shared fixtures: cached Monte Carlo campaigns for the heavy tests.

The 200-run campaigns are expensive, so one session-scoped cache hands
the same (mode, snr) batch to every test that needs it.
"""

from __future__ import annotations

import pytest

from blindem.harness import SimConfig, monte_carlo
from blindem.receiver import ReceiverMode

MC_SEED = 2026
MC_RUNS = 200
MC_WORKERS = 2


@pytest.fixture(scope="session")
def mc_campaign():
    """Memoized monte_carlo runner: mc_campaign(mode, snr_db) -> (table, records)."""
    cache: dict = {}

    def run(mode: ReceiverMode, snr_db: float, runs: int = MC_RUNS):
        key = (mode, snr_db, runs)
        if key not in cache:
            cfg = SimConfig(
                snr_db=(snr_db,),
                runs=runs,
                mode=mode,
                seed=MC_SEED,
                workers=MC_WORKERS,
            )
            cache[key] = monte_carlo(cfg)
        return cache[key]

    return run


@pytest.fixture(scope="session")
def mc_config():
    """Config factory matching the cached campaigns."""

    def make(mode: ReceiverMode, snr_db: float, runs: int = MC_RUNS) -> SimConfig:
        return SimConfig(
            snr_db=(snr_db,), runs=runs, mode=mode, seed=MC_SEED, workers=MC_WORKERS
        )

    return make
