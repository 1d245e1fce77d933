"""
Interval estimators and robust summaries

Confidence intervals (Student-t, percentile bootstrap, empirical Bernstein)
describe uncertainty in the mean and shrink with n. Tolerance intervals
describe the spread of the performance distribution and do not.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal
from scipy import stats as sps

from .exceptions import ConfigurationError, StatisticalPreconditionError

logger = logging.getLogger(__name__)

DEFAULT_BOOTSTRAP_RESAMPLES = 10_000
KDE_GRID_POINTS = 512
MODE_PROMINENCE = 0.1

METHODS = ("t", "bootstrap", "bernstein", "tolerance")
_METHOD_ALIASES = {"student_t": "t", "student-t": "t", "percentile": "percentile"}


@dataclass(frozen=True)
class Interval:
    """
    A confidence or tolerance interval

    beta is set exactly when kind is "tolerance". alpha is None only for the
    naive percentile band.
    """
    lower: float
    upper: float
    kind: str
    alpha: Optional[float]
    beta: Optional[float]
    method: str
    n_samples: int
    center: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("confidence", "tolerance"):
            raise ConfigurationError(f"Unknown interval kind: {self.kind}")
        if (self.beta is not None) != (self.kind == "tolerance"):
            raise ConfigurationError("beta must be given exactly for tolerance intervals")
        if self.lower > self.upper:
            raise StatisticalPreconditionError(f"interval lower {self.lower} exceeds upper {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_row(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "beta": self.beta,
            "lower": self.lower,
            "upper": self.upper,
            "n": self.n_samples,
        }


def _as_samples(samples, minimum: int, what: str) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < minimum:
        raise StatisticalPreconditionError(f"{what} needs at least {minimum} samples, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise StatisticalPreconditionError(f"{what} received non-finite samples")
    return x


def _check_alpha(alpha: float):
    if not 0 < alpha < 1:
        raise ConfigurationError(f"alpha must be in (0, 1), got {alpha}")


def _check_beta(beta: float):
    if not 0 < beta < 1:
        raise ConfigurationError(f"beta must be in (0, 1), got {beta}")


def sample_std(samples) -> float:
    """Unbiased (n - 1) sample standard deviation"""
    x = _as_samples(samples, 2, "sample_std")
    return float(np.std(x, ddof=1))


def t_multiplier(alpha: float, n: int) -> float:
    """Two-sided Student-t quantile with n - 1 degrees of freedom"""
    _check_alpha(alpha)
    if n < 2:
        raise StatisticalPreconditionError(f"t_multiplier needs n >= 2, got {n}")
    return float(sps.t.ppf(1 - alpha / 2, df=n - 1))


def student_t_ci(samples, alpha: float = 0.05) -> Interval:
    """mean +/- t * s / sqrt(n)"""
    x = _as_samples(samples, 2, "student_t_ci")
    mean = float(np.mean(x))
    half = t_multiplier(alpha, len(x)) * float(np.std(x, ddof=1)) / math.sqrt(len(x))
    return Interval(mean - half, mean + half, "confidence", alpha, None, "t", len(x), mean)


def _resample_means(x: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.integers(0, len(x), size=(m, len(x)))
    return x[idx].mean(axis=1)


def bootstrap_ci(samples, alpha: float = 0.05, m: int = DEFAULT_BOOTSTRAP_RESAMPLES,
                 rng: Optional[np.random.Generator] = None) -> Interval:
    """
    Percentile bootstrap interval for the mean

    Resamples the n values with replacement m times and reports the
    alpha/2 and 1 - alpha/2 quantiles of the resampled means.
    """
    _check_alpha(alpha)
    x = _as_samples(samples, 2, "bootstrap_ci")
    if m < 100:
        raise ConfigurationError(f"bootstrap needs m >= 100 resamples, got {m}")
    rng = rng if rng is not None else np.random.default_rng()
    means = _resample_means(x, m, rng)
    lower, upper = np.quantile(means, [alpha / 2, 1 - alpha / 2])
    return Interval(float(lower), float(upper), "confidence", alpha, None, "bootstrap",
                    len(x), float(np.mean(x)))


def bernstein_ci(samples, alpha: float = 0.05, value_range: Tuple[float, float] = (0.0, 1.0)) -> Interval:
    """
    Empirical Bernstein interval for samples bounded in value_range

    half-width = sqrt(2 s^2 ln(3/alpha) / n) + 3 R ln(3/alpha) / n
    """
    _check_alpha(alpha)
    x = _as_samples(samples, 2, "bernstein_ci")
    lo, hi = value_range
    if hi < lo:
        raise ConfigurationError(f"value_range must satisfy low <= high, got {value_range}")
    if np.any(x < lo) or np.any(x > hi):
        raise StatisticalPreconditionError(f"samples fall outside the declared range [{lo}, {hi}]")

    n = len(x)
    log_term = math.log(3 / alpha)
    variance = float(np.var(x, ddof=1))
    half = math.sqrt(2 * variance * log_term / n) + 3 * (hi - lo) * log_term / n
    mean = float(np.mean(x))
    return Interval(mean - half, mean + half, "confidence", alpha, None, "bernstein", n, mean)


def _interpolated_order_stat(sorted_x: np.ndarray, position: float) -> float:
    below = int(math.floor(position))
    above = min(below + 1, len(sorted_x) - 1)
    frac = position - below
    return float(sorted_x[below] * (1 - frac) + sorted_x[above] * frac)


def tolerance_interval(samples, alpha: float = 0.05, beta: float = 0.9) -> Interval:
    """
    Distribution-free (alpha, beta) tolerance interval

    k = binomial inverse CDF at 1 - alpha with success rate beta counts how
    many of the n samples may fall inside the middle-beta mass. The
    remaining nu = n - 2 - k samples are dropped evenly from both ends of
    the sorted data, so the bounds sit at 0-based positions nu/2 and
    n - 1 - nu/2, interpolated when nu is odd.

    Raises:
        StatisticalPreconditionError: n too small for (alpha, beta)
    """
    _check_alpha(alpha)
    _check_beta(beta)
    x = np.sort(_as_samples(samples, 2, "tolerance_interval"))
    n = len(x)
    inside = int(sps.binom.ppf(1 - alpha, n, beta))
    nu = n - 2 - inside
    if nu < 0:
        raise StatisticalPreconditionError(
            f"{n} samples are too few for an (alpha={alpha}, beta={beta}) tolerance interval"
        )
    lower = _interpolated_order_stat(x, nu / 2)
    upper = _interpolated_order_stat(x, n - 1 - nu / 2)
    return Interval(lower, upper, "tolerance", alpha, beta, "tolerance", n, float(np.median(x)))


def percentile_band(samples, beta: float = 0.9) -> Interval:
    """Naive band between the (1-beta)/2 and (1+beta)/2 empirical quantiles"""
    _check_beta(beta)
    x = _as_samples(samples, 1, "percentile_band")
    lower, upper = np.quantile(x, [(1 - beta) / 2, (1 + beta) / 2])
    return Interval(float(lower), float(upper), "tolerance", None, beta, "percentile", len(x),
                    float(np.median(x)))


def iqm(samples) -> float:
    """
    Interquartile mean: the mean of the middle 50% of sorted samples

    When n is not a multiple of 4 the boundary samples get fractional weight.
    """
    x = np.sort(_as_samples(samples, 4, "iqm"))
    n = len(x)
    trim = 0.25 * n
    positions = np.arange(n)
    weights = np.clip(np.minimum(positions + 1, n - trim) - np.maximum(positions, trim), 0.0, 1.0)
    return float(np.dot(weights, x) / (n - 2 * trim))


def interval(samples, method: str = "t", alpha: float = 0.05, beta: Optional[float] = None,
             m: int = DEFAULT_BOOTSTRAP_RESAMPLES, rng: Optional[np.random.Generator] = None,
             value_range: Optional[Tuple[float, float]] = None) -> Interval:
    """Dispatch to one interval method by name"""
    method = _METHOD_ALIASES.get(method, method)
    if method == "t":
        return student_t_ci(samples, alpha)
    if method == "bootstrap":
        return bootstrap_ci(samples, alpha, m, rng)
    if method == "bernstein":
        if value_range is None:
            raise ConfigurationError("bernstein intervals need a value_range")
        return bernstein_ci(samples, alpha, value_range)
    if method == "tolerance":
        return tolerance_interval(samples, alpha, beta if beta is not None else 0.9)
    if method == "percentile":
        return percentile_band(samples, beta if beta is not None else 0.9)
    raise ConfigurationError(f"Unknown interval method: {method}. Available: {list(METHODS)}")


def _bootstrap_columns(matrix: np.ndarray, alpha: float, m: int, rng: np.random.Generator,
                       chunk: int = 256) -> List[Interval]:
    n = matrix.shape[0]
    # one set of run resamples shared by every step
    counts = np.zeros((m, n))
    idx = rng.integers(0, n, size=(m, n))
    np.add.at(counts, (np.arange(m)[:, None], idx), 1.0)
    counts /= n

    bands = []
    for start in range(0, matrix.shape[1], chunk):
        block = matrix[:, start:start + chunk]
        means = counts @ block
        lows, highs = np.quantile(means, [alpha / 2, 1 - alpha / 2], axis=0)
        centers = block.mean(axis=0)
        bands.extend(
            Interval(float(lo), float(hi), "confidence", alpha, None, "bootstrap", n, float(c))
            for lo, hi, c in zip(lows, highs, centers)
        )
    return bands


def per_step_band(matrix, method: str = "t", alpha: float = 0.05, beta: Optional[float] = None,
                  m: int = DEFAULT_BOOTSTRAP_RESAMPLES, rng: Optional[np.random.Generator] = None,
                  value_range: Optional[Tuple[float, float]] = None) -> List[Interval]:
    """
    Column-wise intervals over an n_runs x steps matrix (learning-curve bands)

    Bootstrap bands resample whole runs, so every step uses the same resamples.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ConfigurationError("per_step_band expects a 2-d runs x steps matrix")
    if _METHOD_ALIASES.get(method, method) == "bootstrap":
        _check_alpha(alpha)
        _as_samples(matrix[:, 0], 2, "per_step_band")
        if m < 100:
            raise ConfigurationError(f"bootstrap needs m >= 100 resamples, got {m}")
        return _bootstrap_columns(matrix, alpha, m, rng if rng is not None else np.random.default_rng())
    return [
        interval(matrix[:, t], method, alpha, beta, m, rng, value_range)
        for t in range(matrix.shape[1])
    ]


@dataclass(frozen=True)
class PerfDistribution:
    """Histogram and kernel-density table of a performance sample"""
    bin_edges: np.ndarray
    masses: np.ndarray
    grid: np.ndarray
    density: np.ndarray
    modes: np.ndarray

    @property
    def mode_count(self) -> int:
        return len(self.modes)

    @property
    def multimodal(self) -> bool:
        return self.mode_count >= 2


def perf_distribution(samples, n_bins="auto", bandwidth=None) -> PerfDistribution:
    """
    Normalized histogram plus a Gaussian KDE on a fixed grid

    A mode is a KDE peak whose prominence is at least a tenth of the
    maximum density.
    """
    x = _as_samples(samples, 2, "perf_distribution")
    counts, edges = np.histogram(x, bins=n_bins)
    masses = counts / counts.sum()

    if np.ptp(x) == 0:
        grid = np.array([x[0]])
        return PerfDistribution(edges, masses, grid, np.array([1.0]), grid.copy())

    kde = sps.gaussian_kde(x, bw_method=bandwidth)
    pad = 3 * math.sqrt(float(kde.covariance[0, 0]))
    grid = np.linspace(x.min() - pad, x.max() + pad, KDE_GRID_POINTS)
    density = kde(grid)
    peaks, _ = signal.find_peaks(density, prominence=MODE_PROMINENCE * density.max())
    if len(peaks) == 0:
        peaks = np.array([int(np.argmax(density))])
    return PerfDistribution(edges, masses, grid, density, grid[peaks])


# Long-tailed synthetic population: 95% N(-100, 10^2), 5% N(-900, 50^2)
LONG_TAIL_WEIGHT = 0.05
LONG_TAIL_COMPONENTS = ((-100.0, 10.0), (-900.0, 50.0))
LONG_TAIL_MEAN = (1 - LONG_TAIL_WEIGHT) * -100.0 + LONG_TAIL_WEIGHT * -900.0


def long_tailed_mixture(n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws from the 95/5 long-tailed mixture"""
    (main_mu, main_sd), (tail_mu, tail_sd) = LONG_TAIL_COMPONENTS
    tail = rng.random(n) < LONG_TAIL_WEIGHT
    return np.where(tail, rng.normal(tail_mu, tail_sd, n), rng.normal(main_mu, main_sd, n))


def long_tailed_cdf(value):
    (main_mu, main_sd), (tail_mu, tail_sd) = LONG_TAIL_COMPONENTS
    return ((1 - LONG_TAIL_WEIGHT) * sps.norm.cdf(value, main_mu, main_sd)
            + LONG_TAIL_WEIGHT * sps.norm.cdf(value, tail_mu, tail_sd))


@dataclass(frozen=True)
class CoverageResult:
    method: str
    n: int
    reps: int
    rate: float
    mean_width: float


def coverage_rate(sampler: Callable[[int, np.random.Generator], np.ndarray], n: int, method: str,
                  reps: int, rng: np.random.Generator, alpha: float = 0.05,
                  beta: Optional[float] = None, true_mean: Optional[float] = None,
                  cdf: Optional[Callable] = None, m: int = 1000,
                  value_range: Optional[Tuple[float, float]] = None) -> CoverageResult:
    """
    Monte Carlo coverage of an interval method

    Confidence methods count replications whose interval contains
    true_mean. Tolerance methods count replications whose interval holds at
    least beta of the population mass under cdf.
    """
    if reps < 1:
        raise ConfigurationError(f"reps must be >= 1, got {reps}")
    tolerance = _METHOD_ALIASES.get(method, method) in ("tolerance", "percentile")
    if tolerance and (cdf is None or beta is None):
        raise ConfigurationError("tolerance coverage needs cdf and beta")
    if not tolerance and true_mean is None:
        raise ConfigurationError("confidence coverage needs true_mean")

    hits, widths = 0, []
    for _ in range(reps):
        result = interval(sampler(n, rng), method, alpha, beta, m, rng, value_range)
        widths.append(result.width)
        if tolerance:
            hits += (cdf(result.upper) - cdf(result.lower)) >= beta
        else:
            hits += result.contains(true_mean)
    return CoverageResult(method, n, reps, hits / reps, float(np.mean(widths)))
