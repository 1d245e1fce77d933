"""
Performance metrics - scalar and curve summaries of RunRecords

Every function here is pure. Scalar metrics take one record and return a
float; batch_metric lifts them over a batch into a PerfSampleSet.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Union

import numpy as np

from .exceptions import ConfigurationError, StatisticalPreconditionError
from .harness import RunRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PerfSampleSet:
    """n scalar performance samples M_1..M_n from one fully-specified algorithm"""
    values: np.ndarray
    label: str
    provenance: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) < 1:
            raise StatisticalPreconditionError("a sample set needs at least one value")
        if not np.all(np.isfinite(values)):
            raise StatisticalPreconditionError(f"non-finite values in sample set '{self.label}'")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.values)

    def __len__(self) -> int:
        return len(self.values)


def return_rate(record: RunRecord) -> float:
    """Mean of the per-step return curve over the whole budget"""
    if record.step_budget < 1:
        raise StatisticalPreconditionError("empty run record")
    return float(np.mean(record.per_step_return))


def area_under_curve(record: RunRecord) -> float:
    """Sum of the per-step curve; return_rate * step_budget"""
    return float(np.sum(record.per_step_return))


def tail_average(record: RunRecord, fraction: float = 0.1, exclude_partial: bool = True) -> float:
    """
    Mean of the final ceil(fraction * step_budget) entries

    With exclude_partial the steps of an unfinished final episode are left
    out of the tail. If that leaves nothing the full tail is used.

    Raises:
        ConfigurationError: fraction outside (0, 1] or a tail shorter than one step
    """
    if not 0 < fraction <= 1:
        raise ConfigurationError(f"fraction must be in (0, 1], got {fraction}")
    length = math.ceil(fraction * record.step_budget)
    if fraction * record.step_budget < 1:
        raise ConfigurationError(f"fraction {fraction} of {record.step_budget} steps is under one step")

    tail = record.per_step_return[-length:]
    if exclude_partial and record.has_partial:
        kept = tail[record.complete_mask()[-length:]]
        if len(kept) > 0:
            return float(np.mean(kept))
        logger.debug("tail holds only the partial episode; averaging it anyway")
    return float(np.mean(tail))


def steps_to_threshold(record: RunRecord, threshold: float, consecutive: int = 3) -> Optional[int]:
    """First step t with curve[t:t+consecutive] all >= threshold, or None"""
    if consecutive < 1:
        raise ConfigurationError(f"consecutive must be >= 1, got {consecutive}")
    curve = record.per_step_return
    if len(curve) < consecutive:
        return None
    above = (curve >= threshold).astype(np.int64)
    run_sums = np.convolve(above, np.ones(consecutive, dtype=np.int64), mode="valid")
    hits = np.flatnonzero(run_sums == consecutive)
    return int(hits[0]) if len(hits) else None


def stability_violations(record: RunRecord, threshold: float, after_step: int) -> int:
    """Number of steps at or after after_step whose value dips below threshold"""
    if not 0 <= after_step < record.step_budget:
        raise ConfigurationError(f"after_step must be in [0, {record.step_budget}), got {after_step}")
    return int(np.count_nonzero(record.per_step_return[after_step:] < threshold))


def worst_case(record: RunRecord, after_step: int = 0) -> float:
    """Minimum per-step value from after_step on"""
    if not 0 <= after_step < record.step_budget:
        raise ConfigurationError(f"after_step must be in [0, {record.step_budget}), got {after_step}")
    return float(np.min(record.per_step_return[after_step:]))


def episode_length_rate(record: RunRecord) -> float:
    """
    Mean over steps of the length of the episode holding each step

    Equals minus the undiscounted return rate when every step costs -1
    (Mountain Car). A cutoff caps every term at tau.
    """
    if record.step_budget < 1:
        raise StatisticalPreconditionError("empty run record")
    lengths = np.diff(np.append(record.episode_starts, record.step_budget))
    return float(np.sum(lengths.astype(float) ** 2) / record.step_budget)


def normalize_return(G: float, G_star: float, G_minus: float) -> float:
    """
    Map a return onto [0, 1] between the worst (0) and optimal (1) returns

    Values outside the declared bounds are returned unclipped and logged.
    """
    if not G_star > G_minus:
        raise ConfigurationError(f"optimal return must exceed worst return ({G_star} <= {G_minus})")
    value = (G - G_minus) / (G_star - G_minus)
    if value < 0 or value > 1:
        logger.warning(f"normalized return {value:.4f} lies outside [0, 1]")
    return float(value)


MetricFn = Callable[[RunRecord], float]


def _eval_returns(record: RunRecord) -> np.ndarray:
    if record.eval_returns is None or len(record.eval_returns) == 0:
        raise StatisticalPreconditionError(f"run {record.run_index} has no offline evaluation checkpoints")
    return record.eval_returns


def final_eval(record: RunRecord) -> float:
    """Greedy-policy return at the last offline checkpoint"""
    return float(_eval_returns(record)[-1])


def mean_eval(record: RunRecord) -> float:
    return float(np.mean(_eval_returns(record)))


METRICS: Dict[str, MetricFn] = {
    "return_rate": return_rate,
    "tail_average": tail_average,
    "auc": area_under_curve,
    "episode_length_rate": episode_length_rate,
    "final_eval": final_eval,
    "mean_eval": mean_eval,
}


def resolve_metric(metric: Union[str, MetricFn]) -> MetricFn:
    if callable(metric):
        return metric
    if metric not in METRICS:
        raise ConfigurationError(f"Unknown metric: {metric}. Available: {sorted(METRICS)}")
    return METRICS[metric]


def _metric_name(metric: Union[str, MetricFn]) -> str:
    return metric if isinstance(metric, str) else getattr(metric, "__name__", "metric")


def batch_metric(records: Sequence[RunRecord], metric: Union[str, MetricFn] = "return_rate") -> PerfSampleSet:
    """
    Apply a scalar metric to every record, preserving run order

    Raises:
        StatisticalPreconditionError: no records, or records from different specs
    """
    records = list(records)
    if not records:
        raise StatisticalPreconditionError("batch_metric needs at least one record")
    fingerprints = {r.fingerprint for r in records}
    if len(fingerprints) > 1:
        raise StatisticalPreconditionError(
            f"records come from {len(fingerprints)} different experiment specs"
        )
    fn = resolve_metric(metric)
    values = np.array([fn(r) for r in records], dtype=float)
    return PerfSampleSet(values=values, label=_metric_name(metric), provenance=records[0].fingerprint)


def median_run(records: Sequence[RunRecord], metric: Union[str, MetricFn] = "return_rate") -> RunRecord:
    """
    The actual run whose metric is the median (lower middle for even n)

    Ties keep run order, so the result is deterministic.
    """
    samples = batch_metric(records, metric)
    order = np.argsort(samples.values, kind="stable")
    return list(records)[int(order[(len(order) - 1) // 2])]


def per_step_matrix(records: Sequence[RunRecord]) -> np.ndarray:
    """n_runs x step_budget array of per-step returns"""
    records = list(records)
    if not records:
        raise StatisticalPreconditionError("per_step_matrix needs at least one record")
    budgets = {r.step_budget for r in records}
    if len(budgets) > 1:
        raise StatisticalPreconditionError(f"records have different step budgets: {sorted(budgets)}")
    return np.vstack([r.per_step_return for r in records])
