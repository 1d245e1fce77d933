"""
Algorithm comparison - difference curves, paired tests, Bonferroni, macro-environments
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats as sps

from .exceptions import ConfigurationError, SeedPlanMismatchError, StatisticalPreconditionError
from .harness import RunRecord
from .metrics import PerfSampleSet, normalize_return, per_step_matrix
from .stats import (
    DEFAULT_BOOTSTRAP_RESAMPLES,
    CoverageResult,
    Interval,
    bootstrap_ci,
    coverage_rate,
    per_step_band,
    student_t_ci,
)

logger = logging.getLogger(__name__)

Runs = Union[Sequence[RunRecord], np.ndarray]


@dataclass
class DiffCurve:
    """Per-step mean of A - B with an interval at every step"""
    means: np.ndarray
    intervals: List[Interval]
    paired: bool
    labels: Tuple[str, str] = ("A", "B")
    alpha: float = 0.05
    method: str = "t"

    @property
    def lower(self) -> np.ndarray:
        return np.array([i.lower for i in self.intervals])

    @property
    def upper(self) -> np.ndarray:
        return np.array([i.upper for i in self.intervals])

    @property
    def significant(self) -> np.ndarray:
        """True where zero lies outside the interval"""
        return (self.lower > 0) | (self.upper < 0)

    def rows(self) -> List[dict]:
        return [
            {"step": t, "D": float(d), "lower": i.lower, "upper": i.upper,
             "significant": bool((i.lower > 0) or (i.upper < 0))}
            for t, (d, i) in enumerate(zip(self.means, self.intervals))
        ]


def _matrix(runs: Runs) -> np.ndarray:
    if isinstance(runs, np.ndarray):
        matrix = runs.astype(float)
        return matrix if matrix.ndim == 2 else matrix[:, None]
    return per_step_matrix(runs)


def check_pairing(runs_a: Sequence[RunRecord], runs_b: Sequence[RunRecord]):
    """
    Raises:
        SeedPlanMismatchError: run i of A and B do not share an environment stream
    """
    if len(runs_a) != len(runs_b):
        raise SeedPlanMismatchError(f"paired comparison needs equal run counts ({len(runs_a)} vs {len(runs_b)})")
    for a, b in zip(runs_a, runs_b):
        if not a.pairs_with(b):
            raise SeedPlanMismatchError(
                f"run {a.run_index} of A and run {b.run_index} of B use different environment streams"
            )


def _welch_arrays(a: np.ndarray, b: np.ndarray, alpha: float):
    """Welch interval for mean(a) - mean(b) along axis 0"""
    na, nb = a.shape[0], b.shape[0]
    diff = a.mean(axis=0) - b.mean(axis=0)
    va = a.var(axis=0, ddof=1) / na
    vb = b.var(axis=0, ddof=1) / nb
    se = np.sqrt(va + vb)
    denom = va ** 2 / (na - 1) + vb ** 2 / (nb - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        df = np.where(denom > 0, (va + vb) ** 2 / denom, np.inf)
    half = np.where(se > 0, sps.t.ppf(1 - alpha / 2, df) * se, 0.0)
    return diff, half


def welch_ci(samples_a, samples_b, alpha: float = 0.05) -> Interval:
    """Unpaired interval on mean(A) - mean(B) with Welch-Satterthwaite degrees of freedom"""
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if len(a) < 2 or len(b) < 2:
        raise StatisticalPreconditionError("welch_ci needs at least 2 samples per side")
    diff, half = _welch_arrays(a[:, None], b[:, None], alpha)
    d, h = float(diff[0]), float(half[0])
    return Interval(d - h, d + h, "confidence", alpha, None, "welch", len(a) + len(b), d)


def _unpaired_bootstrap(a: np.ndarray, b: np.ndarray, alpha: float, m: int,
                        rng: np.random.Generator) -> List[Interval]:
    def resampled_means(x):
        counts = np.zeros((m, x.shape[0]))
        np.add.at(counts, (np.arange(m)[:, None], rng.integers(0, x.shape[0], (m, x.shape[0]))), 1.0)
        return (counts / x.shape[0]) @ x

    diffs = resampled_means(a) - resampled_means(b)
    lows, highs = np.quantile(diffs, [alpha / 2, 1 - alpha / 2], axis=0)
    centers = a.mean(axis=0) - b.mean(axis=0)
    n = a.shape[0] + b.shape[0]
    return [Interval(float(lo), float(hi), "confidence", alpha, None, "bootstrap", n, float(c))
            for lo, hi, c in zip(lows, highs, centers)]


def diff_curve(runs_a: Runs, runs_b: Runs, alpha: float = 0.05, paired: bool = True,
               method: str = "t", m: int = DEFAULT_BOOTSTRAP_RESAMPLES,
               rng: Optional[np.random.Generator] = None,
               labels: Tuple[str, str] = ("A", "B")) -> DiffCurve:
    """
    Per-step difference curve D_t = A_t - B_t with intervals

    Paired: intervals over per-run differences (repeated measures).
    Unpaired: Welch (t) or independent bootstrap on the difference of means.
    Per-step intervals are not corrected for multiplicity across steps.
    """
    if method not in ("t", "student_t", "bootstrap"):
        raise ConfigurationError(f"diff_curve supports t and bootstrap, got {method}")
    method = "t" if method == "student_t" else method
    if paired and not isinstance(runs_a, np.ndarray) and not isinstance(runs_b, np.ndarray):
        check_pairing(list(runs_a), list(runs_b))

    a, b = _matrix(runs_a), _matrix(runs_b)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise StatisticalPreconditionError("diff_curve needs at least 2 runs per algorithm")
    if a.shape[1] != b.shape[1]:
        raise StatisticalPreconditionError(f"curve lengths differ ({a.shape[1]} vs {b.shape[1]})")
    rng = rng if rng is not None else np.random.default_rng()

    if paired:
        if a.shape[0] != b.shape[0]:
            raise SeedPlanMismatchError("paired comparison needs equal run counts")
        differences = a - b
        intervals = per_step_band(differences, method, alpha, m=m, rng=rng)
        means = differences.mean(axis=0)
    elif method == "t":
        means, half = _welch_arrays(a, b, alpha)
        n = a.shape[0] + b.shape[0]
        intervals = [Interval(float(d - h), float(d + h), "confidence", alpha, None, "welch", n, float(d))
                     for d, h in zip(means, half)]
    else:
        means = a.mean(axis=0) - b.mean(axis=0)
        intervals = _unpaired_bootstrap(a, b, alpha, m, rng)

    curve = DiffCurve(np.asarray(means), intervals, paired, labels, alpha, method)
    logger.info(
        f"{labels[0]} - {labels[1]}: {int(curve.significant.sum())}/{len(intervals)} steps significant "
        f"({'paired' if paired else 'unpaired'}, alpha={alpha})"
    )
    return curve


def paired_scalar_test(samples_a, samples_b, alpha: float = 0.05) -> Interval:
    """
    Paired t interval on the mean per-run difference

    The interval center is the effect size.
    """
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if len(a) != len(b):
        raise SeedPlanMismatchError(f"paired test needs equal lengths ({len(a)} vs {len(b)})")
    return student_t_ci(a - b, alpha)


def bonferroni(alpha: float, k: int) -> float:
    """Per-comparison alpha for k simultaneous comparisons"""
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    return alpha / k


@dataclass
class MacroResult:
    samples: PerfSampleSet
    interval: Interval
    per_env_counts: Dict[str, int] = field(default_factory=dict)


def macro_aggregate(per_env_samples: Mapping[str, Union[PerfSampleSet, Sequence[float]]],
                    bounds: Mapping[str, Tuple[float, float]], alpha: float = 0.05,
                    m: int = DEFAULT_BOOTSTRAP_RESAMPLES,
                    rng: Optional[np.random.Generator] = None) -> MacroResult:
    """
    Pool normalized per-run metrics across environments into one macro-environment

    bounds maps each environment to (optimal return, worst return).
    """
    if not per_env_samples:
        raise StatisticalPreconditionError("macro_aggregate needs at least one environment")
    missing = [env for env in per_env_samples if env not in bounds]
    if missing:
        raise ConfigurationError(f"missing return bounds for environments: {missing}")

    pooled: List[float] = []
    counts: Dict[str, int] = {}
    for env_id, samples in per_env_samples.items():
        values = samples.values if isinstance(samples, PerfSampleSet) else np.asarray(samples, dtype=float)
        if len(values) < 1:
            raise StatisticalPreconditionError(f"environment {env_id} has no runs")
        g_star, g_minus = bounds[env_id]
        pooled.extend(normalize_return(v, g_star, g_minus) for v in values)
        counts[env_id] = len(values)

    sample_set = PerfSampleSet(np.array(pooled), "normalized", "macro:" + ",".join(sorted(counts)))
    return MacroResult(sample_set, bootstrap_ci(sample_set.values, alpha, m, rng), counts)


def runs_needed_curve(population, ns: Sequence[int], alpha: float = 0.05, reps: int = 1000,
                      rng: Optional[np.random.Generator] = None) -> List[CoverageResult]:
    """
    How often a t interval from n runs captures the population mean, per n

    population is a finite array of per-run performances treated as the
    true distribution; runs are drawn from it with replacement.
    """
    pop = np.asarray(population, dtype=float).ravel()
    if len(pop) < 2:
        raise StatisticalPreconditionError("population needs at least 2 values")
    rng = rng if rng is not None else np.random.default_rng()
    true_mean = float(pop.mean())
    results = []
    for n in ns:
        if n < 2:
            raise ConfigurationError(f"every n must be >= 2, got {n}")
        results.append(coverage_rate(lambda k, g: g.choice(pop, k), n, "t", reps, rng,
                                     alpha=alpha, true_mean=true_mean))
    return results
