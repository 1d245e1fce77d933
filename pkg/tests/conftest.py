"""
Shared test helpers
"""

import numpy as np
import pytest

from app.core.agents import HyperConfig
from app.core.harness import EpisodeEnd, ExperimentSpec, PairingMode, RunRecord

MAZE_CONFIG = {"alpha": 0.1, "epsilon": 0.2, "tiles": 4, "tilings": 8, "gamma": 0.99}


def make_record(per_step, starts=(0,), ends=(EpisodeEnd.TERMINAL,), run_index=0,
                fingerprint="f" * 16, env_seed="e" * 16) -> RunRecord:
    """Hand-built run record for metric tests"""
    return RunRecord(
        per_step_return=np.asarray(per_step, dtype=float),
        episode_starts=np.asarray(starts, dtype=np.int64),
        episode_ends=list(ends),
        run_index=run_index,
        base_seed=0,
        pairing=PairingMode.REPEATED_MEASURES,
        env_seed=env_seed,
        agent_seed="a" * 16,
        fingerprint=fingerprint,
    )


@pytest.fixture
def maze_spec() -> ExperimentSpec:
    """Short ESARSA run on the maze"""
    return ExperimentSpec("simple-maze", "esarsa", HyperConfig(dict(MAZE_CONFIG)), step_budget=300)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
