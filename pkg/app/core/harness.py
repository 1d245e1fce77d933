"""
Experiment harness - fixed step budgets, seed streams and cutoff semantics

A run is a pure function of (ExperimentSpec, base_seed, run_index). The
agent and the environment draw from separate streams; in repeated-measures
pairing the streams do not depend on the algorithm, so two algorithms with
the same (base_seed, run_index) face the same environment randomness.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from .agents import Algorithm, BaseAgent, CutoffMode, HyperConfig, Transition, init_agent
from .envs import BaseEnvironment, EnvironmentFactory, make_env
from .exceptions import ConfigurationError
from .hashing import label_key, stable_hash

logger = logging.getLogger(__name__)

STREAM_LABELS = ("agent", "env", "eval")
DEFAULT_EVAL_EPISODE_CAP = 10_000


class PairingMode(str, Enum):
    """How seed streams relate across algorithms"""
    INDEPENDENT = "independent"
    REPEATED_MEASURES = "repeated-measures"


class EpisodeEnd(str, Enum):
    """Why an episode's steps stopped accumulating"""
    TERMINAL = "T"
    CUTOFF = "C"
    PARTIAL = "P"


@dataclass(frozen=True)
class SeedPlan:
    """Which streams a run draws from"""
    base_seed: int
    run_index: int
    pairing_mode: PairingMode = PairingMode.REPEATED_MEASURES

    def __post_init__(self):
        if not 0 <= self.base_seed < 2 ** 64:
            raise ConfigurationError(f"base_seed must be a 64-bit unsigned integer, got {self.base_seed}")
        if self.run_index < 0:
            raise ConfigurationError(f"run_index must be >= 0, got {self.run_index}")


def _seed_sequence(base_seed: int, run_index: int, label: str, salt: int = 0) -> np.random.SeedSequence:
    if label not in STREAM_LABELS:
        raise ConfigurationError(f"Unknown stream label: {label}. Expected one of {STREAM_LABELS}")
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(run_index, label_key(label), salt))


def derive_stream(base_seed: int, run_index: int, label: str, salt: int = 0) -> np.random.Generator:
    """
    Deterministic random stream for (base_seed, run_index, label)

    SeedSequence hashes the triple into PCG64 state; distinct labels or run
    indices give statistically independent streams. salt separates
    algorithms under independent pairing.
    """
    return np.random.Generator(np.random.PCG64(_seed_sequence(base_seed, run_index, label, salt)))


def stream_id(base_seed: int, run_index: int, label: str, salt: int = 0) -> str:
    """Short printable identity of a stream, stored in run records"""
    state = _seed_sequence(base_seed, run_index, label, salt).generate_state(1, np.uint64)[0]
    return f"{int(state):016x}"


@dataclass(frozen=True)
class EvalMode:
    """Online returns, or periodic frozen-policy rollouts (offline)"""
    kind: str = "online"
    interval: int = 0
    rollouts: int = 0
    episode_cap: int = DEFAULT_EVAL_EPISODE_CAP

    def __post_init__(self):
        if self.kind not in ("online", "offline"):
            raise ConfigurationError(f"eval mode must be online or offline, got {self.kind}")
        if self.kind == "offline":
            if self.interval < 1 or self.rollouts < 1:
                raise ConfigurationError("offline evaluation needs interval >= 1 and rollouts >= 1")
            if self.episode_cap < 1:
                raise ConfigurationError("episode_cap must be >= 1")

    @classmethod
    def offline(cls, interval: int, rollouts: int, episode_cap: int = DEFAULT_EVAL_EPISODE_CAP) -> "EvalMode":
        return cls("offline", interval, rollouts, episode_cap)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "online":
            return {"kind": "online"}
        return {"kind": self.kind, "interval": self.interval,
                "rollouts": self.rollouts, "episode_cap": self.episode_cap}


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to run one fully-specified algorithm on one environment"""
    env_id: str
    algorithm: str
    config: HyperConfig
    step_budget: int
    env_params: Mapping[str, Any] = field(default_factory=dict)
    cutoff: Optional[int] = None
    cutoff_mode: CutoffMode = CutoffMode.BOOTSTRAP
    eval_mode: EvalMode = field(default_factory=EvalMode)

    def validate(self) -> "ExperimentSpec":
        """
        Check the experiment without running it

        Raises:
            ConfigurationError: bad budget, cutoff, environment or algorithm
        """
        if self.step_budget < 1:
            raise ConfigurationError(f"step_budget must be >= 1, got {self.step_budget}")
        if self.cutoff is not None:
            if self.cutoff < 1:
                raise ConfigurationError(f"cutoff must be >= 1, got {self.cutoff}")
            if self.cutoff > self.step_budget:
                logger.warning(
                    f"cutoff {self.cutoff} exceeds step budget {self.step_budget}; it will never trigger"
                )
        try:
            Algorithm(self.algorithm)
        except ValueError:
            raise ConfigurationError(f"Unknown algorithm: {self.algorithm}")
        self.config.require(Algorithm(self.algorithm))
        env = EnvironmentFactory.create_environment(self.env_id, dict(self.env_params))
        init_agent(self.algorithm, self.config, np.random.default_rng(0), env.descriptor)
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "env": {"id": self.env_id, "params": dict(self.env_params)},
            "algorithm": self.algorithm,
            "config": self.config.to_dict(),
            "step_budget": self.step_budget,
            "cutoff": self.cutoff,
            "cutoff_mode": CutoffMode(self.cutoff_mode).value,
            "eval": self.eval_mode.to_dict(),
        }

    def fingerprint(self) -> str:
        return stable_hash(self.to_dict())

    def stream_salt(self, pairing: PairingMode) -> int:
        if pairing == PairingMode.REPEATED_MEASURES:
            return 0
        return int(self.fingerprint(), 16)


@dataclass
class RunRecord:
    """
    One run's per-step episodic return curve

    per_step_return[t] is the discounted return of the episode containing
    step t. Episodes are delimited by episode_starts; episode_ends says how
    each one stopped. Offline evaluation fills eval_steps / eval_returns.
    """
    per_step_return: np.ndarray
    episode_starts: np.ndarray
    episode_ends: List[EpisodeEnd]
    run_index: int
    base_seed: int
    pairing: PairingMode
    env_seed: str
    agent_seed: str
    fingerprint: str
    eval_steps: Optional[np.ndarray] = None
    eval_returns: Optional[np.ndarray] = None

    @property
    def step_budget(self) -> int:
        return len(self.per_step_return)

    @property
    def episode_returns(self) -> np.ndarray:
        return self.per_step_return[self.episode_starts]

    @property
    def episode_count(self) -> int:
        return len(self.episode_starts)

    @property
    def terminal_count(self) -> int:
        return sum(1 for e in self.episode_ends if e == EpisodeEnd.TERMINAL)

    @property
    def cutoff_count(self) -> int:
        return sum(1 for e in self.episode_ends if e == EpisodeEnd.CUTOFF)

    @property
    def has_partial(self) -> bool:
        return bool(self.episode_ends) and self.episode_ends[-1] == EpisodeEnd.PARTIAL

    def complete_mask(self) -> np.ndarray:
        """Boolean per-step mask that is False on the partial final episode"""
        mask = np.ones(self.step_budget, dtype=bool)
        if self.has_partial:
            mask[self.episode_starts[-1]:] = False
        return mask

    def pairs_with(self, other: "RunRecord") -> bool:
        """Same environment stream (repeated-measures partner)"""
        return self.env_seed == other.env_seed and self.run_index == other.run_index


@dataclass
class RunBatch:
    """Records of n runs of one spec, ordered by run_index"""
    fingerprint: str
    env_id: str
    algorithm: str
    base_seed: int
    pairing: PairingMode
    step_budget: int
    records: List[RunRecord]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def evaluate_policy(agent: BaseAgent, env: BaseEnvironment, rng: np.random.Generator,
                    rollouts: int, episode_cap: int) -> float:
    """
    Mean discounted return of the agent's greedy policy

    Runs on its own environment instance and stream; the agent's weights
    and learning stream are untouched.
    """
    gamma = env.descriptor.gamma
    returns = []
    for _ in range(rollouts):
        obs = env.reset(rng)
        total, discount = 0.0, gamma
        for _ in range(episode_cap):
            outcome = env.step(agent.greedy_action(obs, rng), rng)
            total += discount * outcome.reward
            discount *= gamma
            if outcome.terminal:
                break
            obs = outcome.next_obs
        returns.append(total)
    return float(np.mean(returns))


def _interact(spec: ExperimentSpec, seed_plan: SeedPlan,
              on_checkpoint: Optional[Callable[[int, BaseAgent], None]] = None,
              checkpoint_every: int = 0,
              on_step: Optional[Callable[[int, BaseAgent], None]] = None) -> RunRecord:
    salt = spec.stream_salt(seed_plan.pairing_mode)
    env = make_env(spec.env_id, dict(spec.env_params))
    gamma = env.descriptor.gamma
    env_rng = derive_stream(seed_plan.base_seed, seed_plan.run_index, "env", salt)
    agent_rng = derive_stream(seed_plan.base_seed, seed_plan.run_index, "agent", salt)
    agent = init_agent(spec.algorithm, spec.config, agent_rng, env.descriptor)
    cutoff_mode = CutoffMode(spec.cutoff_mode)

    budget = spec.step_budget
    per_step = np.empty(budget, dtype=float)
    starts: List[int] = [0]
    ends: List[EpisodeEnd] = []

    obs = env.reset(env_rng)
    agent.start_episode()
    episode_start, episode_length = 0, 0
    total, discount = 0.0, gamma

    for t in range(budget):
        if on_checkpoint is not None and t % checkpoint_every == 0:
            on_checkpoint(t, agent)

        action = agent.select_action(obs)
        outcome = env.step(action, env_rng)
        episode_length += 1
        total += discount * outcome.reward
        discount *= gamma

        truncated = (not outcome.terminal and spec.cutoff is not None
                     and episode_length >= spec.cutoff)
        agent.update(
            Transition(obs, action, outcome.reward, outcome.next_obs,
                       terminal=outcome.terminal, truncated=truncated),
            cutoff_mode,
        )
        if on_step is not None:
            on_step(t, agent)

        if outcome.terminal or truncated:
            per_step[episode_start:t + 1] = total
            ends.append(EpisodeEnd.TERMINAL if outcome.terminal else EpisodeEnd.CUTOFF)
            if t + 1 < budget:
                starts.append(t + 1)
                obs = env.reset(env_rng)
                agent.start_episode()
            episode_start, episode_length = t + 1, 0
            total, discount = 0.0, gamma
        else:
            obs = outcome.next_obs

    if episode_start < budget:
        per_step[episode_start:] = total
        ends.append(EpisodeEnd.PARTIAL)

    if on_checkpoint is not None and budget % checkpoint_every == 0:
        on_checkpoint(budget, agent)

    return RunRecord(
        per_step_return=per_step,
        episode_starts=np.asarray(starts, dtype=np.int64),
        episode_ends=ends,
        run_index=seed_plan.run_index,
        base_seed=seed_plan.base_seed,
        pairing=seed_plan.pairing_mode,
        env_seed=stream_id(seed_plan.base_seed, seed_plan.run_index, "env", salt),
        agent_seed=stream_id(seed_plan.base_seed, seed_plan.run_index, "agent", salt),
        fingerprint=spec.fingerprint(),
    )


def run_online(spec: ExperimentSpec, seed_plan: SeedPlan,
               on_step: Optional[Callable[[int, BaseAgent], None]] = None) -> RunRecord:
    """
    Run exactly spec.step_budget interactions and record online returns

    on_step(t, agent) is called after every update, e.g. to track weights.
    """
    return _interact(spec, seed_plan, on_step=on_step)


def run_offline_eval(spec: ExperimentSpec, seed_plan: SeedPlan) -> RunRecord:
    """
    Learn as run_online does, and every eval interval roll out the frozen
    greedy policy on a cloned environment with the dedicated eval stream
    """
    mode = spec.eval_mode
    if mode.kind != "offline":
        raise ConfigurationError("run_offline_eval needs an offline eval mode")

    salt = spec.stream_salt(seed_plan.pairing_mode)
    eval_rng = derive_stream(seed_plan.base_seed, seed_plan.run_index, "eval", salt)
    eval_env = make_env(spec.env_id, dict(spec.env_params))
    steps: List[int] = []
    returns: List[float] = []

    def checkpoint(t: int, agent: BaseAgent):
        steps.append(t)
        returns.append(evaluate_policy(agent, eval_env, eval_rng, mode.rollouts, mode.episode_cap))

    record = _interact(spec, seed_plan, on_checkpoint=checkpoint, checkpoint_every=mode.interval)
    record.eval_steps = np.asarray(steps, dtype=np.int64)
    record.eval_returns = np.asarray(returns, dtype=float)
    return record


def run_single(spec: ExperimentSpec, seed_plan: SeedPlan) -> RunRecord:
    """Dispatch on the experiment's eval mode"""
    if spec.eval_mode.kind == "offline":
        return run_offline_eval(spec, seed_plan)
    return run_online(spec, seed_plan)


def _run_index(spec: ExperimentSpec, base_seed: int, pairing: PairingMode, run_index: int) -> RunRecord:
    record = run_single(spec, SeedPlan(base_seed, run_index, pairing))
    logger.debug(f"run {run_index} finished: {record.episode_count} episodes")
    return record


def run_batch(spec: ExperimentSpec, n_runs: int, base_seed: int, parallelism: int = 1,
              pairing: PairingMode = PairingMode.REPEATED_MEASURES,
              run_indices: Optional[Sequence[int]] = None) -> RunBatch:
    """
    Run n_runs independent runs of spec

    Results are ordered by run_index and identical for any parallelism.
    """
    if n_runs < 1:
        raise ConfigurationError(f"n_runs must be >= 1, got {n_runs}")
    if parallelism < 1:
        raise ConfigurationError(f"parallelism must be >= 1, got {parallelism}")
    spec.validate()
    indices = list(run_indices) if run_indices is not None else list(range(n_runs))
    worker = partial(_run_index, spec, base_seed, PairingMode(pairing))

    logger.info(
        f"Running {len(indices)} runs of {spec.algorithm} on {spec.env_id} "
        f"({spec.step_budget} steps, parallelism={parallelism})"
    )
    if parallelism == 1:
        records = [worker(i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as executor:
            records = list(executor.map(worker, indices))
    logger.info(f"Batch {spec.fingerprint()} complete")

    return RunBatch(
        fingerprint=spec.fingerprint(),
        env_id=spec.env_id,
        algorithm=spec.algorithm,
        base_seed=base_seed,
        pairing=PairingMode(pairing),
        step_budget=spec.step_budget,
        records=records,
    )
