"""
Environments - small diagnostic and benchmark problems

All randomness is drawn from the generator passed in by the caller, so a
trajectory is a pure function of (params, seed, actions). Environments never
truncate episodes themselves; cutoffs belong to the harness.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type

import numpy as np
import yaml

from .exceptions import ConfigurationError, EnvironmentStateError

DATA_DIR = Path(__file__).parent / "data"

# Observations are 1-D float arrays with a fixed length per environment.
Observation = np.ndarray


@dataclass(frozen=True)
class StepOutcome:
    """Result of one environment transition"""
    reward: float
    next_obs: Observation
    terminal: bool
    truncated: bool = False

    def __post_init__(self):
        if self.terminal and self.truncated:
            raise ValueError("A transition cannot be both terminal and truncated")


@dataclass(frozen=True)
class EnvDescriptor:
    """
    Static facts about an environment

    feature_kind tells agents how to read observations: 'continuous' inputs
    are tile coded within observation_bounds, 'linear' inputs are already
    feature vectors. behavior_policy / target_policy are state-independent
    action distributions for off-policy prediction problems.
    optimal_return / worst_return anchor normalization; return_bounds holds
    every realizable episode return and bounds Bernstein intervals.
    """
    id: str
    action_count: int
    gamma: float
    observation_bounds: Tuple[Tuple[float, float], ...]
    feature_kind: str = "continuous"
    optimal_return: Optional[float] = None
    worst_return: Optional[float] = None
    return_bounds: Optional[Tuple[float, float]] = None
    behavior_policy: Optional[Tuple[float, ...]] = None
    target_policy: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError(f"gamma must be in (0, 1], got {self.gamma}")
        if self.optimal_return is not None and self.worst_return is not None:
            if not self.optimal_return > self.worst_return:
                raise ConfigurationError("optimal_return must exceed worst_return")

    @property
    def observation_size(self) -> int:
        return len(self.observation_bounds)


class BaseEnvironment(ABC):
    """
    Abstract environment

    Subclasses implement _reset and _step; this class enforces the
    reset/step protocol and action range checks.
    """

    env_id: str = "base"
    allowed_params: Tuple[str, ...] = ()

    def __init__(self, params: Optional[Dict[str, Any]] = None):
        self.params: Dict[str, Any] = dict(params or {})
        unknown = sorted(set(self.params) - set(self.allowed_params))
        if unknown:
            raise ConfigurationError(f"{self.env_id}: unknown params {unknown}")
        self._needs_reset = True

    @property
    @abstractmethod
    def descriptor(self) -> EnvDescriptor:
        """Static environment facts"""
        pass

    @abstractmethod
    def _reset(self, rng: np.random.Generator) -> Observation:
        pass

    @abstractmethod
    def _step(self, action: int, rng: np.random.Generator) -> StepOutcome:
        pass

    def reset(self, rng: np.random.Generator) -> Observation:
        """Draw a start state using only rng"""
        obs = self._reset(rng)
        self._needs_reset = False
        return obs

    def step(self, action: int, rng: np.random.Generator) -> StepOutcome:
        """
        Advance one step

        Raises:
            EnvironmentStateError: action out of range, or stepping before
                reset / after a terminal transition
        """
        if self._needs_reset:
            raise EnvironmentStateError(
                f"{self.env_id}: step called before reset or after termination"
            )
        if not 0 <= action < self.descriptor.action_count:
            raise EnvironmentStateError(
                f"{self.env_id}: action {action} outside [0, {self.descriptor.action_count})"
            )
        outcome = self._step(int(action), rng)
        if outcome.terminal:
            self._needs_reset = True
        return outcome

    def clone(self) -> "BaseEnvironment":
        """Fresh, unreset instance with identical parameters"""
        return type(self)(self.params)


# ========== Simple Maze ==========

def _orientation(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r) -> bool:
    return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))


def segments_intersect(p1, p2, q1, q2) -> bool:
    """True if segment p1-p2 touches or crosses segment q1-q2"""
    d1 = _orientation(q1, q2, p1)
    d2 = _orientation(q1, q2, p2)
    d3 = _orientation(p1, p2, q1)
    d4 = _orientation(p1, p2, q2)

    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    if d1 == 0 and _on_segment(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment(p1, p2, q2):
        return True
    return False


def load_walls(path: Path) -> List[Tuple[float, float, float, float]]:
    """Read a wall layout file (one 'x1 y1 x2 y2' segment per line)"""
    table = np.loadtxt(path, comments="#", ndmin=2)
    if table.shape[1] != 4:
        raise ConfigurationError(f"Wall file {path} must have 4 columns")
    return [tuple(float(v) for v in row) for row in table]


class SimpleMaze(BaseEnvironment):
    """
    Continuous 1x1 gridworld with walls

    Actions move a fixed step (plus Gaussian noise) up, right, down or left.
    Moves that would leave the unit square or cross a wall leave the state
    unchanged. Reaching the goal rectangle pays +1 and terminates.
    """

    env_id = "simple-maze"
    allowed_params = ("step_size", "noise_scale", "gamma", "walls_file")

    ACTIONS = ((0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0))  # up, right, down, left
    START = (0.125, 0.125)
    GOAL = ((0.5, 0.7), (0.45, 0.65))  # x-range, y-range
    OPTIMAL_STEPS = 15

    def __init__(self, params: Optional[Dict[str, Any]] = None):
        super().__init__(params)
        self.step_size = float(self.params.get("step_size", 0.05))
        self.noise_scale = float(self.params.get("noise_scale", 0.005))
        self.gamma = float(self.params.get("gamma", 0.99))
        walls_file = self.params.get("walls_file", str(DATA_DIR / "simple_maze_walls_v1.txt"))

        if self.noise_scale <= 0:
            raise ConfigurationError(
                f"simple-maze noise_scale must be positive, got {self.noise_scale}"
            )
        if self.step_size <= 0:
            raise ConfigurationError(
                f"simple-maze step_size must be positive, got {self.step_size}"
            )

        self.walls = load_walls(Path(walls_file))
        self._position = np.array(self.START, dtype=float)
        self._descriptor = EnvDescriptor(
            id=self.env_id,
            action_count=len(self.ACTIONS),
            gamma=self.gamma,
            observation_bounds=((0.0, 1.0), (0.0, 1.0)),
            optimal_return=self.gamma ** self.OPTIMAL_STEPS,
            worst_return=0.0,
            # noise can shorten the path; any episode pays gamma**L with L >= 1
            return_bounds=(0.0, self.gamma),
        )

    @property
    def descriptor(self) -> EnvDescriptor:
        return self._descriptor

    def in_goal(self, position) -> bool:
        (x_lo, x_hi), (y_lo, y_hi) = self.GOAL
        return x_lo <= position[0] <= x_hi and y_lo <= position[1] <= y_hi

    def blocked(self, start, end) -> bool:
        """True if moving from start to end leaves the world or crosses a wall"""
        if not (0.0 <= end[0] <= 1.0 and 0.0 <= end[1] <= 1.0):
            return True
        for x1, y1, x2, y2 in self.walls:
            if segments_intersect(start, end, (x1, y1), (x2, y2)):
                return True
        return False

    def next_position(self, position, action: int, noise=(0.0, 0.0)) -> Tuple[float, float]:
        """Deterministic dynamics given an explicit noise draw"""
        dx, dy = self.ACTIONS[action]
        end = (position[0] + dx * self.step_size + noise[0],
               position[1] + dy * self.step_size + noise[1])
        if self.blocked(position, end):
            return (float(position[0]), float(position[1]))
        return end

    def _reset(self, rng: np.random.Generator) -> Observation:
        self._position = np.array(self.START, dtype=float)
        return self._position.copy()

    def _step(self, action: int, rng: np.random.Generator) -> StepOutcome:
        noise = rng.normal(0.0, self.noise_scale, size=2)
        self._position = np.array(self.next_position(self._position, action, noise), dtype=float)
        if self.in_goal(self._position):
            return StepOutcome(reward=1.0, next_obs=self._position.copy(), terminal=True)
        return StepOutcome(reward=0.0, next_obs=self._position.copy(), terminal=False)


# ========== Mountain Car ==========

class MountainCar(BaseEnvironment):
    """
    Classic cosine-hill Mountain Car

    Three actions (reverse, coast, forward), -1 per step, terminates when
    position reaches 0.5. Start position uniform in [-0.6, -0.4], zero velocity.
    """

    env_id = "mountain-car"
    allowed_params = ("gamma", "force", "gravity")

    POSITION_BOUNDS = (-1.2, 0.6)
    VELOCITY_BOUNDS = (-0.07, 0.07)
    GOAL_POSITION = 0.5

    def __init__(self, params: Optional[Dict[str, Any]] = None):
        super().__init__(params)
        self.gamma = float(self.params.get("gamma", 0.99))
        self.force = float(self.params.get("force", 0.001))
        self.gravity = float(self.params.get("gravity", 0.0025))
        if self.force <= 0 or self.gravity <= 0:
            raise ConfigurationError("mountain-car force and gravity must be positive")
        self._position = 0.0
        self._velocity = 0.0
        self._descriptor = EnvDescriptor(
            id=self.env_id,
            action_count=3,
            gamma=self.gamma,
            observation_bounds=(self.POSITION_BOUNDS, self.VELOCITY_BOUNDS),
            return_bounds=(-1.0 / (1.0 - self.gamma), 0.0) if self.gamma < 1.0 else None,
        )

    @property
    def descriptor(self) -> EnvDescriptor:
        return self._descriptor

    def _observation(self) -> Observation:
        return np.array([self._position, self._velocity], dtype=float)

    def _reset(self, rng: np.random.Generator) -> Observation:
        self._position = float(rng.uniform(-0.6, -0.4))
        self._velocity = 0.0
        return self._observation()

    def _step(self, action: int, rng: np.random.Generator) -> StepOutcome:
        velocity = self._velocity + (action - 1) * self.force - self.gravity * math.cos(3 * self._position)
        velocity = min(max(velocity, self.VELOCITY_BOUNDS[0]), self.VELOCITY_BOUNDS[1])
        position = self._position + velocity
        position = min(max(position, self.POSITION_BOUNDS[0]), self.POSITION_BOUNDS[1])
        if position == self.POSITION_BOUNDS[0] and velocity < 0:
            velocity = 0.0

        self._position, self._velocity = position, velocity
        terminal = position >= self.GOAL_POSITION
        return StepOutcome(reward=-1.0, next_obs=self._observation(), terminal=terminal)


# ========== Baird's counterexample ==========

class BairdsCounterexample(BaseEnvironment):
    """
    Seven-state off-policy counterexample

    Action 0 (dashed) jumps to one of the six upper states uniformly;
    action 1 (solid) jumps to the seventh state. Rewards are zero and the
    task is continuing. Observations are the state's 8-dimensional features.
    """

    env_id = "bairds"
    allowed_params = ("gamma",)

    DASHED, SOLID = 0, 1
    N_STATES = 7

    def __init__(self, params: Optional[Dict[str, Any]] = None):
        super().__init__(params)
        self.gamma = float(self.params.get("gamma", 0.99))
        self.features = self.feature_matrix()
        self._state = 0
        self._descriptor = EnvDescriptor(
            id=self.env_id,
            action_count=2,
            gamma=self.gamma,
            observation_bounds=tuple((0.0, 2.0) for _ in range(8)),
            feature_kind="linear",
            behavior_policy=(6.0 / 7.0, 1.0 / 7.0),
            target_policy=(0.0, 1.0),
        )

    @classmethod
    def feature_matrix(cls) -> np.ndarray:
        phi = np.zeros((cls.N_STATES, 8))
        for s in range(6):
            phi[s, s] = 2.0
            phi[s, 7] = 1.0
        phi[6, 6] = 1.0
        phi[6, 7] = 2.0
        return phi

    @property
    def descriptor(self) -> EnvDescriptor:
        return self._descriptor

    @property
    def state(self) -> int:
        return self._state

    def _reset(self, rng: np.random.Generator) -> Observation:
        self._state = int(rng.integers(self.N_STATES))
        return self.features[self._state].copy()

    def _step(self, action: int, rng: np.random.Generator) -> StepOutcome:
        if action == self.SOLID:
            self._state = 6
        else:
            self._state = int(rng.integers(6))
        return StepOutcome(reward=0.0, next_obs=self.features[self._state].copy(), terminal=False)


# ========== Riverswim ==========

class RiverSwim(BaseEnvironment):
    """
    Riverswim chain

    Swimming left is reliable and the leftmost state pays a small reward;
    swimming right against the current usually fails but the rightmost
    state pays a large reward. Continuing task.
    """

    env_id = "riverswim"
    allowed_params = (
        "gamma", "constants_file", "n_states", "left_reward", "right_reward",
        "p_right", "p_stay", "p_left", "start_states",
    )

    LEFT, RIGHT = 0, 1

    def __init__(self, params: Optional[Dict[str, Any]] = None):
        super().__init__(params)
        constants_file = self.params.get("constants_file", str(DATA_DIR / "riverswim_v1.yaml"))
        with open(constants_file, "r", encoding="utf-8") as handle:
            constants = yaml.safe_load(handle)
        overrides = {k: v for k, v in self.params.items() if k in constants}
        constants.update(overrides)

        self.n_states = int(constants["n_states"])
        self.left_reward = float(constants["left_reward"])
        self.right_reward = float(constants["right_reward"])
        self.p_right = float(constants["p_right"])
        self.p_stay = float(constants["p_stay"])
        self.p_left = float(constants["p_left"])
        self.start_states = [int(s) for s in constants["start_states"]]
        self.gamma = float(self.params.get("gamma", 0.99))

        if self.n_states < 2:
            raise ConfigurationError("riverswim needs at least 2 states")
        probs = (self.p_right, self.p_stay, self.p_left)
        if min(probs) < 0 or not math.isclose(sum(probs), 1.0):
            raise ConfigurationError(f"riverswim transition probabilities invalid: {probs}")
        if any(not 0 <= s < self.n_states for s in self.start_states):
            raise ConfigurationError("riverswim start_states out of range")

        self._state = 0
        self._descriptor = EnvDescriptor(
            id=self.env_id,
            action_count=2,
            gamma=self.gamma,
            observation_bounds=((0.0, float(self.n_states - 1)),),
        )

    @property
    def descriptor(self) -> EnvDescriptor:
        return self._descriptor

    @property
    def state(self) -> int:
        return self._state

    def _reset(self, rng: np.random.Generator) -> Observation:
        self._state = self.start_states[int(rng.integers(len(self.start_states)))]
        return np.array([float(self._state)])

    def _step(self, action: int, rng: np.random.Generator) -> StepOutcome:
        s = self._state
        last = self.n_states - 1
        reward = 0.0
        if action == self.LEFT:
            if s == 0:
                reward = self.left_reward
            self._state = max(s - 1, 0)
        else:
            u = rng.random()
            if u < self.p_right:
                nxt = min(s + 1, last)
            elif u < self.p_right + self.p_stay:
                nxt = s
            else:
                nxt = max(s - 1, 0)
            if s == last and nxt == last:
                reward = self.right_reward
            self._state = nxt
        return StepOutcome(reward=reward, next_obs=np.array([float(self._state)]), terminal=False)


class EnvironmentFactory:
    """Factory for creating environments by id"""

    _registry: Dict[str, Type[BaseEnvironment]] = {
        SimpleMaze.env_id: SimpleMaze,
        MountainCar.env_id: MountainCar,
        BairdsCounterexample.env_id: BairdsCounterexample,
        RiverSwim.env_id: RiverSwim,
    }

    @classmethod
    def register_environment(cls, env_id: str, env_class: Type[BaseEnvironment]):
        """Register a new environment class"""
        cls._registry[env_id] = env_class

    @classmethod
    def available(cls) -> List[str]:
        return sorted(cls._registry)

    @classmethod
    def create_environment(cls, env_id: str, params: Optional[Dict[str, Any]] = None) -> BaseEnvironment:
        """
        Create an environment instance in the unreset state

        Raises:
            ConfigurationError: unknown id or invalid params
        """
        if env_id not in cls._registry:
            raise ConfigurationError(
                f"Unknown environment: {env_id}. Available environments: {', '.join(cls.available())}"
            )
        return cls._registry[env_id](params)


def make_env(env_id: str, params: Optional[Dict[str, Any]] = None) -> BaseEnvironment:
    """Convenience wrapper around EnvironmentFactory"""
    return EnvironmentFactory.create_environment(env_id, params)
