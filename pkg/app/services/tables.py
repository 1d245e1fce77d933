"""
Table emission - comma-separated, plot-ready output

Every table starts with '#' comment lines naming how its numbers were
produced (method, alpha, beta, n, spec fingerprint), then a CSV header row.
"""

import csv
import io
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from app.core.compare import DiffCurve
from app.core.exceptions import ConfigurationError
from app.core.metrics import PerfSampleSet
from app.core.stats import Interval, PerfDistribution

logger = logging.getLogger(__name__)

HEADER_KEYS = ("method", "alpha", "beta", "n", "fingerprint")


def _cell(value: Any) -> Any:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    if value is None:
        return ""
    return value


def format_table(rows: Sequence[Mapping[str, Any]], header: Mapping[str, Any],
                 fieldnames: Optional[Sequence[str]] = None) -> str:
    """Render rows as CSV text preceded by '# key: value' header lines"""
    buffer = io.StringIO()
    for key in HEADER_KEYS:
        buffer.write(f"# {key}: {_cell(header.get(key))}\n")
    for key, value in header.items():
        if key not in HEADER_KEYS:
            buffer.write(f"# {key}: {_cell(value)}\n")

    fieldnames = list(fieldnames) if fieldnames else (list(rows[0]) if rows else [])
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k)) for k in fieldnames})
    return buffer.getvalue()


def write_table(path: Path, rows: Sequence[Mapping[str, Any]], header: Mapping[str, Any],
                fieldnames: Optional[Sequence[str]] = None) -> Path:
    """Write a table file, creating parent directories"""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            handle.write(format_table(rows, header, fieldnames))
    except OSError as e:
        raise ConfigurationError(f"cannot write table {path}: {e}")
    logger.debug(f"Wrote {len(rows)} rows to {path}")
    return path


# ========== Row builders ==========

def metric_rows(samples: PerfSampleSet, run_indices: Optional[Iterable[int]] = None) -> List[Dict[str, Any]]:
    indices = list(run_indices) if run_indices is not None else range(samples.n)
    return [{"run_index": i, "value": float(v)} for i, v in zip(indices, samples.values)]


def band_rows(intervals: Sequence[Interval], stride: int = 1) -> List[Dict[str, Any]]:
    return [
        {"step": t, "center": iv.center, "lower": iv.lower, "upper": iv.upper}
        for t, iv in enumerate(intervals) if t % stride == 0
    ]


def interval_rows(intervals: Iterable[Interval]) -> List[Dict[str, Any]]:
    return [iv.to_row() for iv in intervals]


def diff_rows(curve: DiffCurve, stride: int = 1) -> List[Dict[str, Any]]:
    return [row for row in curve.rows() if row["step"] % stride == 0]


def distribution_rows(dist: PerfDistribution) -> Dict[str, List[Dict[str, Any]]]:
    """Histogram, density and mode tables for one performance distribution"""
    histogram = [
        {"bin_low": float(lo), "bin_high": float(hi), "mass": float(m)}
        for lo, hi, m in zip(dist.bin_edges[:-1], dist.bin_edges[1:], dist.masses)
    ]
    density = [{"x": float(x), "density": float(d)} for x, d in zip(dist.grid, dist.density)]
    modes = [{"mode": float(m)} for m in dist.modes]
    return {"histogram": histogram, "density": density, "modes": modes}


def interval_header(iv: Interval, fingerprint: str = "", **extra) -> Dict[str, Any]:
    header = {"method": iv.method, "alpha": iv.alpha, "beta": iv.beta, "n": iv.n_samples,
              "fingerprint": fingerprint}
    header.update(extra)
    return header
