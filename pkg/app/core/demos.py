"""
Demonstrations of evaluation pitfalls

Each demo returns a report dataclass whose rows() feed the table writer.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

from .agents import Algorithm, CutoffMode, HyperConfig
from .envs import BairdsCounterexample
from .exceptions import ConfigurationError
from .harness import ExperimentSpec, PairingMode, SeedPlan, run_batch, run_online
from .hyperstudy import (
    SweepSpec,
    bootstrap_max_estimate,
    closed_form_overreport_probability,
    maximization_bias_probability,
    power_grid,
    two_stage_estimate,
)
from .metrics import batch_metric
from .stats import (
    LONG_TAIL_MEAN,
    CoverageResult,
    coverage_rate,
    long_tailed_cdf,
    long_tailed_mixture,
    sample_std,
)

logger = logging.getLogger(__name__)

DEMOS = ("maxbias", "baird", "cutoff", "coverage", "twostage")

BAIRD_BETAS = (0.0, 0.1, 0.5, 0.9, 0.99)
BAIRD_INITIAL_WEIGHTS = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0, 1.0)
CUTOFFS = (200, 500, 10_000)


def _rng(base_seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(base_seed))


# ========== Maximization bias ==========

@dataclass
class MaxBiasReport:
    H: int
    N: int
    trials: int
    fraction: float
    closed_form: float

    def rows(self) -> List[Dict[str, Any]]:
        return [{"H": self.H, "N": self.N, "trials": self.trials,
                 "overreport_fraction": self.fraction, "closed_form": self.closed_form}]


def maxbias_family() -> SweepSpec:
    """36 equal-mean configs: 6 stepsizes x 3 refresh-like x 2 buffer-like placeholder axes"""
    return SweepSpec(axes={
        "alpha": power_grid(2, -6, -1),
        "refresh": [1, 2, 3],
        "buffer": [0, 1],
    })


def demo_maxbias(base_seed: int = 0, N: int = 10, trials: int = 1000) -> MaxBiasReport:
    """How often tuning over equal-mean configs over-reports the best mean"""
    H = len(maxbias_family().overrides())
    fraction = maximization_bias_probability(H, N, trials, _rng(base_seed))
    report = MaxBiasReport(H, N, trials, fraction, closed_form_overreport_probability(H))
    logger.info(f"maxbias: {fraction:.3f} of {trials} sweeps over-report (closed form {report.closed_form:.3f})")
    return report


# ========== Baird divergence ==========

@dataclass
class DivergenceRow:
    algorithm: str
    beta: Optional[float]
    diverged: bool
    first_step_over: Optional[int]
    final_norm: float


@dataclass
class TrajectoryPoint:
    step: int
    algorithm: str
    beta: Optional[float]
    norm: float


@dataclass
class BairdReport:
    threshold: float
    updates: int
    rows_: List[DivergenceRow] = field(default_factory=list)
    trajectory: List[TrajectoryPoint] = field(default_factory=list)

    @property
    def all_diverged(self) -> bool:
        return all(r.diverged for r in self.rows_)

    def rows(self) -> List[Dict[str, Any]]:
        return [vars(r) for r in self.rows_]

    def trajectory_rows(self) -> List[Dict[str, Any]]:
        """Weight max-norm every few updates, one series per (algorithm, beta)"""
        return [vars(p) for p in self.trajectory]


def _track_divergence(spec: ExperimentSpec, base_seed: int, threshold: float, every: int):
    crossing: List[int] = []
    samples: List[Tuple[int, float]] = []

    def on_step(t, agent):
        norm = agent.weights_norm()
        if not crossing and not norm <= threshold:
            crossing.append(t + 1)
        if (t + 1) % every == 0 or t + 1 == spec.step_budget:
            samples.append((t + 1, norm))

    with np.errstate(over="ignore", invalid="ignore"):
        run_online(spec, SeedPlan(base_seed, 0), on_step=on_step)
    return (crossing[0] if crossing else None), samples[-1][1], samples


def demo_baird(base_seed: int = 0, alpha: float = 0.1, betas: Sequence[float] = BAIRD_BETAS,
               updates: int = 100_000, threshold: float = 1e6,
               trajectory_every: int = 1000) -> BairdReport:
    """Off-policy TD, with and without momentum, on Baird's counterexample"""
    if threshold <= 0:
        raise ConfigurationError(f"divergence threshold must be positive, got {threshold}")
    if trajectory_every < 1:
        raise ConfigurationError(f"trajectory_every must be >= 1, got {trajectory_every}")
    base = HyperConfig({"alpha": alpha, "gamma": 0.99, "initial_weights": list(BAIRD_INITIAL_WEIGHTS)})
    variants = [(Algorithm.OFFPOLICY_TD, None, base)]
    variants += [(Algorithm.OFFPOLICY_TD_MOMENTUM, b, base.replace(beta=b)) for b in betas]

    report = BairdReport(threshold, updates)
    for algorithm, beta, config in variants:
        spec = ExperimentSpec(BairdsCounterexample.env_id, algorithm.value, config, updates)
        first, final, samples = _track_divergence(spec, base_seed, threshold, trajectory_every)
        report.rows_.append(DivergenceRow(algorithm.value, beta, first is not None, first, final))
        report.trajectory += [TrajectoryPoint(step, algorithm.value, beta, norm) for step, norm in samples]
        logger.info(f"baird {algorithm.value} beta={beta}: crossed {threshold:g} at {first}")
    return report


# ========== Episode cutoffs ==========

@dataclass
class CutoffRow:
    """
    mean/variance: discounted return rate. undiscounted_*: the same runs
    scored by undiscounted return (minus the step-weighted episode length)
    """
    cutoff: int
    runs: int
    mean: float
    variance: float
    undiscounted_mean: float
    undiscounted_variance: float
    cutoffs_hit: int


@dataclass
class CutoffReport:
    step_budget: int
    rows_: List[CutoffRow] = field(default_factory=list)

    def by_cutoff(self) -> Dict[int, CutoffRow]:
        return {r.cutoff: r for r in self.rows_}

    def rows(self) -> List[Dict[str, Any]]:
        return [vars(r) for r in self.rows_]


MOUNTAIN_CAR_SARSA = {"alpha": 0.5, "epsilon": 0.0, "tiles": 8, "tilings": 8, "lambda": 0.9, "gamma": 0.99}


def demo_cutoff(base_seed: int = 0, runs: int = 30, step_budget: int = 20_000,
                cutoffs: Sequence[int] = CUTOFFS, parallelism: int = 1) -> CutoffReport:
    """
    Mean and variance over runs of SARSA(lambda) on Mountain Car per episode cutoff

    With gamma = 0.99 every discounted return lies in [-99, 0], so cutoffs
    of a few hundred steps or more clip almost nothing on that scale. The
    undiscounted columns show the clipping: tau caps every episode's cost.
    """
    config = HyperConfig(dict(MOUNTAIN_CAR_SARSA))
    report = CutoffReport(step_budget)
    for tau in cutoffs:
        spec = ExperimentSpec("mountain-car", Algorithm.SARSA_LAMBDA.value, config, step_budget,
                              cutoff=tau, cutoff_mode=CutoffMode.BOOTSTRAP)
        batch = run_batch(spec, runs, base_seed, parallelism, PairingMode.REPEATED_MEASURES)
        values = batch_metric(batch.records, "return_rate").values
        undiscounted = -batch_metric(batch.records, "episode_length_rate").values
        report.rows_.append(CutoffRow(
            cutoff=tau,
            runs=runs,
            mean=float(values.mean()),
            variance=sample_std(values) ** 2,
            undiscounted_mean=float(undiscounted.mean()),
            undiscounted_variance=sample_std(undiscounted) ** 2,
            cutoffs_hit=sum(r.cutoff_count for r in batch.records),
        ))
        row = report.rows_[-1]
        logger.info(
            f"cutoff {tau}: discounted mean {row.mean:.3f} var {row.variance:.3f}, "
            f"undiscounted mean {row.undiscounted_mean:.1f} var {row.undiscounted_variance:.1f}"
        )
    return report


# ========== Interval coverage ==========

@dataclass
class CoverageRow:
    population: str
    method: str
    n: int
    coverage: float
    mean_width: float


@dataclass
class CoverageReport:
    reps: int
    rows_: List[CoverageRow] = field(default_factory=list)

    def find(self, population: str, method: str, n: int) -> CoverageRow:
        return next(r for r in self.rows_ if (r.population, r.method, r.n) == (population, method, n))

    def rows(self) -> List[Dict[str, Any]]:
        return [vars(r) for r in self.rows_]


BOUNDED_BETA = (2.0, 5.0)


def demo_coverage(base_seed: int = 0, reps: int = 2000, resamples: int = 1000,
                  alpha: float = 0.05, beta: float = 0.9) -> CoverageReport:
    """Monte Carlo coverage of every interval method on normal, long-tailed and bounded data"""
    rng = _rng(base_seed)
    report = CoverageReport(reps)

    def add(population: str, result: CoverageResult):
        report.rows_.append(CoverageRow(population, result.method, result.n, result.rate, result.mean_width))

    def normal(n, g):
        return g.normal(0.0, 1.0, n)

    def bounded(n, g):
        return g.beta(*BOUNDED_BETA, n)

    for n in (10, 30):
        add("normal", coverage_rate(normal, n, "t", reps, rng, alpha, true_mean=0.0))
    for n in (10, 50):
        add("long-tailed", coverage_rate(long_tailed_mixture, n, "bootstrap", reps, rng, alpha,
                                         true_mean=LONG_TAIL_MEAN, m=resamples))
    bounded_mean = BOUNDED_BETA[0] / sum(BOUNDED_BETA)
    for method in ("t", "bootstrap", "bernstein"):
        add("bounded", coverage_rate(bounded, 30, method, reps, rng, alpha, true_mean=bounded_mean,
                                     m=resamples, value_range=(0.0, 1.0)))
    add("normal", coverage_rate(normal, 50, "tolerance", reps, rng, alpha, beta=beta,
                                cdf=sps.norm(0.0, 1.0).cdf))
    add("long-tailed", coverage_rate(long_tailed_mixture, 50, "tolerance", reps, rng, alpha, beta=beta,
                                     cdf=long_tailed_cdf))
    return report


# ========== Two-stage tuning ==========

@dataclass
class TwoStageReport:
    """
    Pedagogical: the two-stage procedure is not a recommended pipeline

    Both intervals are scored against the same target, the best true mean.
    *_below counts intervals lying entirely under it: an underestimate
    reported with confidence.
    """
    H: int
    N: int
    gap: float
    second_stage_runs: int
    repetitions: int
    true_best_mean: float
    selected_best_fraction: float
    two_stage_coverage: float
    two_stage_below: float
    two_stage_mean_error: float
    bootstrap_coverage: float
    bootstrap_below: float
    bootstrap_above: float

    def rows(self) -> List[Dict[str, Any]]:
        return [vars(self)]


def twostage_means(H: int, gap: float) -> np.ndarray:
    """H - 1 configs with equal true means (0) and one leader `gap` above them"""
    if H < 2:
        raise ConfigurationError(f"two-stage family needs H >= 2, got {H}")
    if gap <= 0:
        raise ConfigurationError(f"gap must be positive, got {gap}")
    means = np.zeros(H)
    means[0] = gap
    return means


def demo_twostage(base_seed: int = 0, H: int = 5, N: int = 10, gap: float = 0.5,
                  second_stage_runs: int = 100, repetitions: int = 500, resamples: int = 1000,
                  alpha: float = 0.05) -> TwoStageReport:
    """
    Select-then-rerun against the bootstrap max estimator

    Runs are unit-variance normal around twostage_means(H, gap). When every
    mean is equal, selection cannot go wrong and the rerun interval is
    exact, so the family needs a leader. A wrong first-stage pick then
    yields a tight second-stage interval around a lower mean.
    """
    rng = _rng(base_seed)
    true_means = twostage_means(H, gap)
    best = float(true_means.max())

    def fresh_runs(index, n, g):
        return g.normal(true_means[index], 1.0, n)

    covered = below = picked_best = 0
    boot_covered = boot_below = boot_above = 0
    errors = []
    for _ in range(repetitions):
        first_stage = list(rng.normal(true_means[:, None], 1.0, (H, N)))
        result = two_stage_estimate(first_stage, fresh_runs, second_stage_runs, alpha, rng)
        second = result.second_stage
        covered += second.contains(best)
        below += second.upper < best
        picked_best += result.selected_index == int(np.argmax(true_means))
        errors.append(second.center - best)

        boot = bootstrap_max_estimate(first_stage, resamples, rng, alpha).interval
        boot_covered += boot.contains(best)
        boot_below += boot.upper < best
        boot_above += boot.lower > best

    report = TwoStageReport(
        H=H, N=N, gap=gap, second_stage_runs=second_stage_runs, repetitions=repetitions,
        true_best_mean=best,
        selected_best_fraction=picked_best / repetitions,
        two_stage_coverage=covered / repetitions,
        two_stage_below=below / repetitions,
        two_stage_mean_error=float(np.mean(errors)),
        bootstrap_coverage=boot_covered / repetitions,
        bootstrap_below=boot_below / repetitions,
        bootstrap_above=boot_above / repetitions,
    )
    logger.info(
        f"twostage: coverage {report.two_stage_coverage:.3f} (below {report.two_stage_below:.3f}), "
        f"bootstrap {report.bootstrap_coverage:.3f} (below {report.bootstrap_below:.3f})"
    )
    return report


def run_demo(name: str, base_seed: int = 0, parallelism: int = 1, **options):
    """Dispatch a demo by name"""
    if name == "maxbias":
        return demo_maxbias(base_seed, **options)
    if name == "baird":
        return demo_baird(base_seed, **options)
    if name == "cutoff":
        return demo_cutoff(base_seed, parallelism=parallelism, **options)
    if name == "coverage":
        return demo_coverage(base_seed, **options)
    if name == "twostage":
        return demo_twostage(base_seed, **options)
    raise ConfigurationError(f"Unknown demo: {name}. Available: {', '.join(DEMOS)}")
