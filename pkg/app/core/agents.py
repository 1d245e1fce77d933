"""
Linear learning agents

- esarsa: Expected SARSA with an epsilon-greedy target and behavior policy
- sarsa-lambda: SARSA(lambda) with replacing traces on tile features
- offpolicy-td / offpolicy-td-momentum: linear TD(0) state-value prediction
  with per-step importance sampling, optionally with heavy-ball momentum

Action values use one weight block per action over shared features.
Tile-coded agents scale the stepsize by 1/tilings.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple, Type

import numpy as np

from .envs import EnvDescriptor, Observation
from .exceptions import ConfigurationError
from .hashing import stable_hash
from .tiles import TileCoder

logger = logging.getLogger(__name__)


class Algorithm(str, Enum):
    """Supported learning algorithms"""
    ESARSA = "esarsa"
    SARSA_LAMBDA = "sarsa-lambda"
    OFFPOLICY_TD = "offpolicy-td"
    OFFPOLICY_TD_MOMENTUM = "offpolicy-td-momentum"


class CutoffMode(str, Enum):
    """How an agent treats the transition into an episode cutoff"""
    DISCARD = "discard"
    BOOTSTRAP = "bootstrap"


REQUIRED_KEYS: Dict[Algorithm, Tuple[str, ...]] = {
    Algorithm.ESARSA: ("alpha", "epsilon", "tiles", "tilings", "gamma"),
    Algorithm.SARSA_LAMBDA: ("alpha", "epsilon", "tiles", "tilings", "gamma", "lambda"),
    Algorithm.OFFPOLICY_TD: ("alpha", "gamma"),
    Algorithm.OFFPOLICY_TD_MOMENTUM: ("alpha", "gamma", "beta"),
}

KNOWN_KEYS = ("alpha", "epsilon", "tiles", "tilings", "lambda", "beta", "gamma", "initial_weights")


@dataclass(frozen=True)
class HyperConfig:
    """
    Named hyperparameter values identifying one fully-specified algorithm

    Canonical keys: alpha (stepsize), epsilon (exploration), tiles, tilings,
    lambda (trace), beta (momentum), gamma (discount used by the agent),
    initial_weights (optional, prediction agents only).
    """
    values: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        unknown = sorted(set(self.values) - set(KNOWN_KEYS))
        if unknown:
            raise ConfigurationError(f"Unknown hyperparameters: {unknown}")
        v = self.values
        if "alpha" in v and not v["alpha"] > 0:
            raise ConfigurationError(f"alpha must be > 0, got {v['alpha']}")
        if "epsilon" in v and not 0.0 <= v["epsilon"] <= 1.0:
            raise ConfigurationError(f"epsilon must be in [0, 1], got {v['epsilon']}")
        for key in ("tiles", "tilings"):
            if key in v and (int(v[key]) != v[key] or v[key] < 1):
                raise ConfigurationError(f"{key} must be a positive integer, got {v[key]}")
        if "lambda" in v and not 0.0 <= v["lambda"] <= 1.0:
            raise ConfigurationError(f"lambda must be in [0, 1], got {v['lambda']}")
        if "beta" in v and not 0.0 <= v["beta"] < 1.0:
            raise ConfigurationError(f"beta must be in [0, 1), got {v['beta']}")
        if "gamma" in v and not 0.0 <= v["gamma"] <= 1.0:
            raise ConfigurationError(f"gamma must be in [0, 1], got {v['gamma']}")

    @classmethod
    def from_dict(cls, values: Mapping[str, Any]) -> "HyperConfig":
        return cls(dict(values))

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def __contains__(self, key: str) -> bool:
        return key in self.values

    def get(self, key: str, default: Any = None) -> Any:
        return self.values.get(key, default)

    def replace(self, **updates) -> "HyperConfig":
        merged = dict(self.values)
        merged.update(updates)
        return HyperConfig(merged)

    def require(self, algorithm: Algorithm):
        missing = [k for k in REQUIRED_KEYS[algorithm] if k not in self.values]
        if missing:
            raise ConfigurationError(
                f"{algorithm.value} requires hyperparameters {missing}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.values)

    def fingerprint(self) -> str:
        return stable_hash(self.to_dict())


@dataclass(frozen=True)
class Transition:
    """One agent-environment interaction as seen by the learner"""
    obs: Observation
    action: int
    reward: float
    next_obs: Observation
    terminal: bool = False
    truncated: bool = False


@dataclass
class AgentState:
    """Learnable state: weights plus optional trace and momentum buffers"""
    weights: np.ndarray
    trace: Optional[np.ndarray] = None
    momentum: Optional[np.ndarray] = None


class FeatureMap:
    """Maps observations to dense feature vectors"""

    def __init__(self, descriptor: EnvDescriptor, config: HyperConfig):
        if descriptor.feature_kind == "linear":
            self.coder = None
            self.size = descriptor.observation_size
            self.step_scale = 1.0
            self.binary = False
        else:
            if "tiles" not in config or "tilings" not in config:
                raise ConfigurationError(
                    f"{descriptor.id} observations need tile coding: set tiles and tilings"
                )
            self.coder = TileCoder(int(config["tiles"]), int(config["tilings"]),
                                   descriptor.observation_bounds)
            self.size = self.coder.size
            self.step_scale = 1.0 / self.coder.tilings
            self.binary = True

    def __call__(self, obs: Observation) -> np.ndarray:
        if self.coder is None:
            return np.asarray(obs, dtype=float)
        phi = np.zeros(self.size)
        phi[self.coder.encode(obs)] = 1.0
        return phi


def epsilon_greedy_probs(q: np.ndarray, epsilon: float) -> np.ndarray:
    """Action probabilities of the epsilon-greedy policy; greedy mass split across ties"""
    greedy = (q == q.max()).astype(float)
    greedy /= greedy.sum()
    return epsilon / len(q) + (1.0 - epsilon) * greedy


def argmax_random_tiebreak(q: np.ndarray, rng: np.random.Generator) -> int:
    best = np.flatnonzero(q == q.max())
    if len(best) == 1:
        return int(best[0])
    return int(best[rng.integers(len(best))])


class BaseAgent(ABC):
    """
    Abstract linear agent

    The agent owns its random stream; all exploration and tie-breaking during
    learning draws from it. greedy_action takes an explicit stream so that
    evaluation never perturbs learning.
    """

    algorithm: Algorithm

    def __init__(self, config: HyperConfig, descriptor: EnvDescriptor, rng: np.random.Generator):
        config.require(self.algorithm)
        self.config = config
        self.descriptor = descriptor
        self.rng = rng
        self.features = FeatureMap(descriptor, config)
        self.gamma = float(config["gamma"])
        self.alpha = float(config["alpha"])
        self.step_size = self.alpha * self.features.step_scale
        self.state = self._initial_state()

    @abstractmethod
    def _initial_state(self) -> AgentState:
        pass

    @abstractmethod
    def select_action(self, obs: Observation) -> int:
        """Behavior policy action, drawing randomness from the agent stream"""
        pass

    @abstractmethod
    def greedy_action(self, obs: Observation, rng: np.random.Generator) -> int:
        """Evaluation policy action, ties broken with the given stream"""
        pass

    @abstractmethod
    def update(self, transition: Transition, cutoff_mode: CutoffMode = CutoffMode.BOOTSTRAP):
        """Learn from one transition"""
        pass

    def start_episode(self):
        """Called by the harness before the first step of every episode"""
        if self.state.trace is not None:
            self.state.trace[...] = 0.0

    def weights_norm(self) -> float:
        """Max-norm of the weights (divergence tracking)"""
        return float(np.max(np.abs(self.state.weights)))

    @staticmethod
    def skips(transition: Transition, cutoff_mode: CutoffMode) -> bool:
        return transition.truncated and cutoff_mode == CutoffMode.DISCARD


class ControlAgent(BaseAgent):
    """Shared machinery for epsilon-greedy action-value agents"""

    def __init__(self, config: HyperConfig, descriptor: EnvDescriptor, rng: np.random.Generator):
        super().__init__(config, descriptor, rng)
        self.epsilon = float(config["epsilon"])
        self.n_actions = descriptor.action_count

    def _initial_state(self) -> AgentState:
        return AgentState(weights=np.zeros((self.descriptor.action_count, self.features.size)))

    def q_values(self, obs: Observation) -> np.ndarray:
        return self.state.weights @ self.features(obs)

    def select_action(self, obs: Observation) -> int:
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(self.n_actions))
        return argmax_random_tiebreak(self.q_values(obs), self.rng)

    def greedy_action(self, obs: Observation, rng: np.random.Generator) -> int:
        return argmax_random_tiebreak(self.q_values(obs), rng)


class ExpectedSarsaAgent(ControlAgent):
    """Expected SARSA; the bootstrap target averages over the epsilon-greedy policy"""

    algorithm = Algorithm.ESARSA

    def target(self, transition: Transition) -> float:
        if transition.terminal:
            return float(transition.reward)
        q_next = self.q_values(transition.next_obs)
        expected = float(epsilon_greedy_probs(q_next, self.epsilon) @ q_next)
        return transition.reward + self.gamma * expected

    def update(self, transition: Transition, cutoff_mode: CutoffMode = CutoffMode.BOOTSTRAP):
        if self.skips(transition, cutoff_mode):
            return
        phi = self.features(transition.obs)
        w = self.state.weights[transition.action]
        delta = self.target(transition) - float(w @ phi)
        w += self.step_size * delta * phi


class SarsaLambdaAgent(ControlAgent):
    """
    SARSA(lambda)

    The next action is chosen inside update() so the bootstrap uses the
    action actually taken; select_action hands it back on the next step.
    """

    algorithm = Algorithm.SARSA_LAMBDA

    def __init__(self, config: HyperConfig, descriptor: EnvDescriptor, rng: np.random.Generator):
        super().__init__(config, descriptor, rng)
        self.lam = float(config["lambda"])
        self._pending_action: Optional[int] = None

    def _initial_state(self) -> AgentState:
        shape = (self.descriptor.action_count, self.features.size)
        return AgentState(weights=np.zeros(shape), trace=np.zeros(shape))

    def start_episode(self):
        super().start_episode()
        self._pending_action = None

    def select_action(self, obs: Observation) -> int:
        if self._pending_action is not None:
            action, self._pending_action = self._pending_action, None
            return action
        return super().select_action(obs)

    def update(self, transition: Transition, cutoff_mode: CutoffMode = CutoffMode.BOOTSTRAP):
        if self.skips(transition, cutoff_mode):
            return
        phi = self.features(transition.obs)
        z = self.state.trace
        if self.features.binary:
            np.maximum(z[transition.action], phi, out=z[transition.action])
        else:
            z[transition.action] += phi

        delta = transition.reward - float(self.state.weights[transition.action] @ phi)
        if not transition.terminal:
            next_action = super().select_action(transition.next_obs)
            delta += self.gamma * float(self.state.weights[next_action] @ self.features(transition.next_obs))
            if not transition.truncated:
                self._pending_action = next_action

        self.state.weights += self.step_size * delta * z
        z *= self.gamma * self.lam


class OffPolicyTDAgent(BaseAgent):
    """
    Linear off-policy TD(0) prediction of the target policy's state values

    Actions follow the environment's behavior policy; each update is scaled
    by the importance ratio target(a) / behavior(a).
    """

    algorithm = Algorithm.OFFPOLICY_TD

    def __init__(self, config: HyperConfig, descriptor: EnvDescriptor, rng: np.random.Generator):
        if descriptor.behavior_policy is None or descriptor.target_policy is None:
            raise ConfigurationError(
                f"{self.algorithm.value} needs an environment with behavior and target policies; "
                f"{descriptor.id} has none"
            )
        super().__init__(config, descriptor, rng)
        self.behavior = np.asarray(descriptor.behavior_policy, dtype=float)
        self.target_policy = np.asarray(descriptor.target_policy, dtype=float)
        self.beta = float(config.get("beta", 0.0))

    def _initial_state(self) -> AgentState:
        initial = self.config.get("initial_weights")
        if initial is None:
            weights = np.zeros(self.features.size)
        else:
            weights = np.array(initial, dtype=float)
            if weights.shape != (self.features.size,):
                raise ConfigurationError(
                    f"initial_weights must have length {self.features.size}, got {weights.shape}"
                )
        return AgentState(weights=weights)

    def value(self, obs: Observation) -> float:
        return float(self.state.weights @ self.features(obs))

    def select_action(self, obs: Observation) -> int:
        return int(self.rng.choice(len(self.behavior), p=self.behavior))

    def greedy_action(self, obs: Observation, rng: np.random.Generator) -> int:
        return argmax_random_tiebreak(self.target_policy, rng)

    def direction(self, transition: Transition) -> np.ndarray:
        """Importance-weighted TD update direction rho * delta * phi(s)"""
        phi = self.features(transition.obs)
        rho = self.target_policy[transition.action] / self.behavior[transition.action]
        bootstrap = 0.0 if transition.terminal else self.value(transition.next_obs)
        delta = transition.reward + self.gamma * bootstrap - float(self.state.weights @ phi)
        return rho * delta * phi

    def update(self, transition: Transition, cutoff_mode: CutoffMode = CutoffMode.BOOTSTRAP):
        if self.skips(transition, cutoff_mode):
            return
        self.state.weights += self.step_size * self.direction(transition)


class MomentumTDAgent(OffPolicyTDAgent):
    """Off-policy TD with heavy-ball momentum: v <- beta v + delta_w, w <- w + alpha v"""

    algorithm = Algorithm.OFFPOLICY_TD_MOMENTUM

    def _initial_state(self) -> AgentState:
        state = super()._initial_state()
        state.momentum = np.zeros_like(state.weights)
        return state

    def update(self, transition: Transition, cutoff_mode: CutoffMode = CutoffMode.BOOTSTRAP):
        if self.skips(transition, cutoff_mode):
            return
        v = self.state.momentum
        v *= self.beta
        v += self.direction(transition)
        self.state.weights += self.step_size * v


class AgentFactory:
    """Factory for creating agents by algorithm name"""

    _registry: Dict[Algorithm, Type[BaseAgent]] = {
        Algorithm.ESARSA: ExpectedSarsaAgent,
        Algorithm.SARSA_LAMBDA: SarsaLambdaAgent,
        Algorithm.OFFPOLICY_TD: OffPolicyTDAgent,
        Algorithm.OFFPOLICY_TD_MOMENTUM: MomentumTDAgent,
    }

    @classmethod
    def create_agent(cls, algorithm: str, config: HyperConfig,
                     descriptor: EnvDescriptor, rng: np.random.Generator) -> BaseAgent:
        """
        Create an agent with zero-initialized weights

        Raises:
            ConfigurationError: unknown algorithm or missing hyperparameters
        """
        try:
            key = Algorithm(algorithm)
        except ValueError:
            raise ConfigurationError(
                f"Unknown algorithm: {algorithm}. "
                f"Available algorithms: {', '.join(a.value for a in Algorithm)}"
            )
        agent = cls._registry[key](config, descriptor, rng)
        logger.debug(f"Created {key.value} agent with {agent.features.size} features")
        return agent


def init_agent(algorithm: str, config: HyperConfig, agent_rng: np.random.Generator,
               descriptor: EnvDescriptor) -> BaseAgent:
    """Convenience wrapper around AgentFactory"""
    return AgentFactory.create_agent(algorithm, config, descriptor, agent_rng)
