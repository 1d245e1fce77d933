"""
Hyperparameter studies

Grids and random configurations, sensitivity curves with range diagnostics,
fair-set checks, and estimators that account for maximization bias when
reporting tuned performance.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .agents import HyperConfig
from .exceptions import ConfigurationError, StatisticalPreconditionError
from .harness import ExperimentSpec, PairingMode, RunBatch, run_batch
from .metrics import PerfSampleSet
from .stats import DEFAULT_BOOTSTRAP_RESAMPLES, Interval, bootstrap_ci, student_t_ci

logger = logging.getLogger(__name__)

Samples = Union[PerfSampleSet, Sequence[float], np.ndarray]


def _values(samples: Samples) -> np.ndarray:
    if isinstance(samples, PerfSampleSet):
        return samples.values
    return np.asarray(samples, dtype=float).ravel()


def power_grid(base: float, lo_exp: int, hi_exp: int) -> List[float]:
    """[base**lo_exp, ..., base**hi_exp]"""
    if lo_exp > hi_exp:
        raise ConfigurationError(f"lo_exp {lo_exp} exceeds hi_exp {hi_exp}")
    return [float(base) ** e for e in range(lo_exp, hi_exp + 1)]


@dataclass
class SweepSpec:
    """
    Configurations to sweep

    axes maps hyperparameter names to value lists and expands to their
    cross product; configs lists explicit overrides instead.
    """
    axes: Dict[str, List[Any]] = field(default_factory=dict)
    configs: Optional[List[Dict[str, Any]]] = None
    runs_per_config: int = 10

    def __post_init__(self):
        if self.runs_per_config < 1:
            raise ConfigurationError(f"runs_per_config must be >= 1, got {self.runs_per_config}")
        if self.configs is None and not self.axes:
            raise ConfigurationError("a sweep needs at least one axis or explicit config")
        if self.configs is not None and not self.configs:
            raise ConfigurationError("explicit config list is empty")
        for name, values in self.axes.items():
            if not values:
                raise ConfigurationError(f"sweep axis '{name}' has no values")

    @property
    def parameter(self) -> Optional[str]:
        """The single swept hyperparameter, when there is exactly one axis"""
        return next(iter(self.axes)) if len(self.axes) == 1 else None

    def overrides(self) -> List[Dict[str, Any]]:
        if self.configs is not None:
            return [dict(c) for c in self.configs]
        names = list(self.axes)
        return [dict(zip(names, combo)) for combo in itertools.product(*self.axes.values())]


def grid_configs(base_config: HyperConfig, sweep: SweepSpec) -> List[HyperConfig]:
    """Expand a sweep over a base configuration, in sweep order"""
    return [base_config.replace(**override) for override in sweep.overrides()]


@dataclass
class SweepEntry:
    config_id: str
    config: HyperConfig
    batch: RunBatch


def run_sweep(spec: ExperimentSpec, sweep: SweepSpec, base_seed: int, parallelism: int = 1,
              pairing: PairingMode = PairingMode.REPEATED_MEASURES) -> List[SweepEntry]:
    """Run runs_per_config runs of every configuration in the sweep"""
    configs = grid_configs(spec.config, sweep)
    logger.info(f"Sweeping {len(configs)} configurations x {sweep.runs_per_config} runs")
    entries = []
    for config in configs:
        config_spec = ExperimentSpec(
            env_id=spec.env_id,
            algorithm=spec.algorithm,
            config=config,
            step_budget=spec.step_budget,
            env_params=spec.env_params,
            cutoff=spec.cutoff,
            cutoff_mode=spec.cutoff_mode,
            eval_mode=spec.eval_mode,
        )
        batch = run_batch(config_spec, sweep.runs_per_config, base_seed, parallelism, pairing)
        entries.append(SweepEntry(config.fingerprint(), config, batch))
    return entries


def sweep_manifest(entries: Sequence[SweepEntry], files: Sequence[str]) -> List[Dict[str, Any]]:
    """Manifest rows: config id, hyper values, N, record file"""
    return [
        {"config_id": e.config_id, "hyper": e.config.to_dict(), "N": len(e.batch), "file": f}
        for e, f in zip(entries, files)
    ]


@dataclass
class SensitivityResult:
    """Performance of a partially-specified algorithm across one hyperparameter"""
    values: List[Any]
    samples: List[PerfSampleSet]
    intervals: List[Interval]
    means: np.ndarray
    best_index: int
    boundary_flag: bool

    @property
    def best_value(self) -> Any:
        return self.values[self.best_index]

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"value": v, "mean": float(m), "lower": i.lower, "upper": i.upper, "n": i.n_samples,
             "best": k == self.best_index}
            for k, (v, m, i) in enumerate(zip(self.values, self.means, self.intervals))
        ]


def sensitivity(values: Sequence[Any], samples: Sequence[Samples], alpha: float = 0.05,
                m: int = DEFAULT_BOOTSTRAP_RESAMPLES,
                rng: Optional[np.random.Generator] = None) -> SensitivityResult:
    """
    Sensitivity curve: mean and bootstrap interval per hyperparameter value

    boundary_flag is set when the best value is the first or last one,
    meaning the best setting may lie outside the swept range.
    """
    if len(values) != len(samples):
        raise ConfigurationError(f"{len(values)} values but {len(samples)} sample sets")
    if not values:
        raise ConfigurationError("sensitivity needs at least one hyperparameter value")
    rng = rng if rng is not None else np.random.default_rng()

    sets = [s if isinstance(s, PerfSampleSet) else PerfSampleSet(_values(s), "metric", "")
            for s in samples]
    means = np.array([s.values.mean() for s in sets])
    intervals = [bootstrap_ci(s.values, alpha, m, rng) for s in sets]
    best = int(np.argmax(means))
    boundary = best in (0, len(values) - 1)
    if boundary:
        logger.warning(f"best value {values[best]} is at the edge of the swept range; expand the range")
    return SensitivityResult(list(values), sets, intervals, means, best, boundary)


@dataclass
class FairSetReport:
    ok: bool
    reference_count: int
    violators: List[str]


def fair_set_check(config_counts: Mapping[str, int]) -> FairSetReport:
    """
    Every algorithm must be tuned over the same number of configurations

    The reference is the most common count (smallest on ties); algorithms
    with any other count are reported.
    """
    if not config_counts:
        raise ConfigurationError("fair_set_check needs at least one algorithm")
    counts = list(config_counts.values())
    reference = min(set(counts), key=lambda c: (-counts.count(c), c))
    violators = [name for name, c in config_counts.items() if c != reference]
    if violators:
        logger.warning(f"unequal hyperparameter budgets: {violators} differ from {reference} configs")
    return FairSetReport(not violators, reference, violators)


@dataclass(frozen=True)
class Distribution:
    """One hyperparameter's sampling distribution: uniform, log-uniform or choice"""
    kind: str
    low: Optional[float] = None
    high: Optional[float] = None
    options: Tuple[Any, ...] = ()

    def __post_init__(self):
        if self.kind in ("uniform", "log-uniform"):
            if self.low is None or self.high is None or not self.low <= self.high:
                raise ConfigurationError(f"{self.kind} needs low <= high, got ({self.low}, {self.high})")
            if self.kind == "log-uniform" and self.low <= 0:
                raise ConfigurationError("log-uniform bounds must be positive")
        elif self.kind == "choice":
            if not self.options:
                raise ConfigurationError("choice needs at least one option")
        else:
            raise ConfigurationError(f"Unknown distribution: {self.kind}")

    @classmethod
    def from_dict(cls, spec: Mapping[str, Any]) -> "Distribution":
        """Parse {"uniform": [lo, hi]}, {"log-uniform": [lo, hi]} or {"choice": [...]}"""
        if len(spec) != 1:
            raise ConfigurationError(f"distribution must have exactly one kind, got {list(spec)}")
        kind, args = next(iter(spec.items()))
        if kind == "choice":
            return cls(kind, options=tuple(args))
        lo, hi = args
        return cls(kind, float(lo), float(hi))

    def sample(self, rng: np.random.Generator) -> Any:
        if self.kind == "uniform":
            return float(rng.uniform(self.low, self.high))
        if self.kind == "log-uniform":
            return float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))
        return self.options[int(rng.integers(len(self.options)))]


def random_configs(distributions: Mapping[str, Union[Distribution, Mapping[str, Any]]], n: int,
                   rng: np.random.Generator,
                   base_config: Optional[HyperConfig] = None) -> List[HyperConfig]:
    """n independent configurations from the product distribution"""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    parsed = {name: d if isinstance(d, Distribution) else Distribution.from_dict(d)
              for name, d in distributions.items()}
    base = base_config if base_config is not None else HyperConfig({})
    return [base.replace(**{name: d.sample(rng) for name, d in parsed.items()}) for _ in range(n)]


@dataclass
class MaxEstimate:
    """Bootstrap distribution of the tuned (max-of-means) performance"""
    maxima: np.ndarray
    mean: float
    interval: Interval
    winner_counts: np.ndarray


def bootstrap_max_estimate(per_config: Sequence[Samples], m: int = DEFAULT_BOOTSTRAP_RESAMPLES,
                           rng: Optional[np.random.Generator] = None,
                           alpha: float = 0.05) -> MaxEstimate:
    """
    Idealized tuned performance with its uncertainty

    Each iteration resamples every configuration's N runs with replacement,
    takes the per-configuration means and keeps the maximum. The m maxima
    are summarized by their mean and percentile interval.
    """
    sets = [_values(s) for s in per_config]
    if not sets:
        raise ConfigurationError("bootstrap_max_estimate needs at least one configuration")
    if any(len(s) < 2 for s in sets):
        raise StatisticalPreconditionError("every configuration needs at least 2 runs")
    if m < 100:
        raise ConfigurationError(f"bootstrap needs m >= 100 resamples, got {m}")
    rng = rng if rng is not None else np.random.default_rng()

    means = np.empty((m, len(sets)))
    for h, x in enumerate(sets):
        means[:, h] = x[rng.integers(0, len(x), size=(m, len(x)))].mean(axis=1)
    maxima = means.max(axis=1)
    winners = np.bincount(means.argmax(axis=1), minlength=len(sets))
    lower, upper = np.quantile(maxima, [alpha / 2, 1 - alpha / 2])
    interval = Interval(float(lower), float(upper), "confidence", alpha, None, "bootstrap-max",
                        sum(len(s) for s in sets), float(maxima.mean()))
    return MaxEstimate(maxima, float(maxima.mean()), interval, winners)


def maximization_bias_probability(H: int, N: int, trials: int = 1000,
                                  rng: Optional[np.random.Generator] = None,
                                  means: Optional[Sequence[float]] = None,
                                  stds: Union[float, Sequence[float]] = 1.0) -> float:
    """
    Fraction of simulated sweeps whose best sample mean over-reports the best true mean

    Each trial draws N normal runs for each of H configurations with the
    given true means (all zero by default) and standard deviations.
    """
    if trials < 100:
        raise ConfigurationError(f"trials must be >= 100, got {trials}")
    if H < 1 or N < 1:
        raise ConfigurationError("H and N must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    mu = np.zeros(H) if means is None else np.asarray(means, dtype=float)
    sd = np.broadcast_to(np.asarray(stds, dtype=float), (H,))
    if mu.shape != (H,):
        raise ConfigurationError(f"expected {H} true means, got {mu.shape}")

    over = 0
    for _ in range(trials):
        sample_means = rng.normal(mu[:, None], sd[:, None], size=(H, N)).mean(axis=1)
        over += sample_means.max() > mu.max()
    return over / trials


def closed_form_overreport_probability(H: int) -> float:
    """1 - 0.5**H: over-report probability for H independent equal-mean symmetric configs"""
    if H < 1:
        raise ConfigurationError(f"H must be >= 1, got {H}")
    return 1.0 - 0.5 ** H


@dataclass
class TwoStageResult:
    """Select by the largest first-stage mean, then rerun the winner on fresh seeds"""
    selected_index: int
    first_stage_mean: float
    second_stage: Interval


def two_stage_estimate(per_config: Sequence[Samples],
                       fresh_runs: Callable[[int, int, np.random.Generator], np.ndarray],
                       second_stage_runs: int = 100, alpha: float = 0.05,
                       rng: Optional[np.random.Generator] = None) -> TwoStageResult:
    """
    The common two-stage tuning procedure

    Kept for demonstration: the second-stage interval ignores selection
    uncertainty and is overconfident about the best configuration's mean.
    fresh_runs(config_index, n, rng) draws new performance samples.
    """
    sets = [_values(s) for s in per_config]
    if not sets:
        raise ConfigurationError("two_stage_estimate needs at least one configuration")
    rng = rng if rng is not None else np.random.default_rng()
    first = np.array([s.mean() for s in sets])
    selected = int(np.argmax(first))
    fresh = np.asarray(fresh_runs(selected, second_stage_runs, rng), dtype=float)
    return TwoStageResult(selected, float(first[selected]), student_t_ci(fresh, alpha))


@dataclass
class LooResult:
    """Leave-one-environment-out estimate of tuned performance on an unseen environment"""
    estimate: float
    fold_values: np.ndarray
    fold_configs: List[int]
    deployed_config: int
    in_sample: float


def _performance_table(per_env: Union[np.ndarray, Mapping[str, Sequence[Samples]]]) -> np.ndarray:
    if isinstance(per_env, np.ndarray):
        table = per_env.astype(float)
    else:
        grids = {env: len(configs) for env, configs in per_env.items()}
        if len(set(grids.values())) > 1:
            raise ConfigurationError(f"environments use different config grids: {grids}")
        table = np.array([[_values(s).mean() for s in configs] for configs in per_env.values()])
    if table.ndim != 2:
        raise ConfigurationError("performance table must be environments x configurations")
    return table


def loo_hyper_generalization(per_env: Union[np.ndarray, Mapping[str, Sequence[Samples]]]) -> LooResult:
    """
    Cross-validation-like estimate of how well grid-search tuning generalizes

    per_env holds normalized performance for each (environment, config),
    either as an environments x configs array of means or as a mapping
    from environment to per-config sample sets. For every environment the
    config that is best on the other environments is scored on it.
    """
    table = _performance_table(per_env)
    n_envs = table.shape[0]
    if n_envs < 2:
        raise StatisticalPreconditionError("leave-one-out needs at least 2 environments")

    fold_configs, fold_values = [], []
    for i in range(n_envs):
        others = np.delete(table, i, axis=0).mean(axis=0)
        best = int(np.argmax(others))
        fold_configs.append(best)
        fold_values.append(table[i, best])

    overall = table.mean(axis=0)
    fold_values = np.array(fold_values)
    return LooResult(float(fold_values.mean()), fold_values, fold_configs,
                     int(np.argmax(overall)), float(overall.max()))


@dataclass
class ViolinSummary:
    """Per-config means pooled into one distribution, with a quantile table"""
    means: np.ndarray
    quantiles: Dict[str, float]


def violin_data(per_config: Sequence[Samples]) -> ViolinSummary:
    if not per_config:
        raise ConfigurationError("violin_data needs at least one configuration")
    means = np.array([_values(s).mean() for s in per_config])
    q = np.quantile(means, [0.0, 0.25, 0.5, 0.75, 1.0])
    return ViolinSummary(means, dict(zip(("min", "q25", "median", "q75", "max"), map(float, q))))


def violin_table(per_algorithm: Mapping[str, Sequence[Samples]]) -> Dict[str, ViolinSummary]:
    """
    Violin summaries for several algorithms

    Raises:
        ConfigurationError: algorithms were tuned over different numbers of configs
    """
    report = fair_set_check({name: len(configs) for name, configs in per_algorithm.items()})
    if not report.ok:
        raise ConfigurationError(f"unfair hyperparameter sets: {report.violators}")
    return {name: violin_data(configs) for name, configs in per_algorithm.items()}
