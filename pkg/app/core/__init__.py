"""RL Evaluation Toolkit - Core Module"""

from .exceptions import (
    ToolkitError,
    ConfigurationError,
    StatisticalPreconditionError,
    SeedPlanMismatchError,
    EnvironmentStateError
)
from .envs import EnvironmentFactory, make_env
from .agents import AgentFactory, Algorithm, HyperConfig, init_agent
from .harness import ExperimentSpec, PairingMode, RunBatch, RunRecord, SeedPlan, run_batch, run_single
from .stats import Interval, interval

__all__ = [
    'ToolkitError',
    'ConfigurationError',
    'StatisticalPreconditionError',
    'SeedPlanMismatchError',
    'EnvironmentStateError',
    'EnvironmentFactory',
    'make_env',
    'AgentFactory',
    'Algorithm',
    'HyperConfig',
    'init_agent',
    'ExperimentSpec',
    'PairingMode',
    'RunBatch',
    'RunRecord',
    'SeedPlan',
    'run_batch',
    'run_single',
    'Interval',
    'interval'
]
