"""
Command-line interface

    rleval run --config maze.yaml
    rleval analyze results/maze --method tolerance --beta 0.9
    rleval compare a.records b.records --paired --k-comparisons 5
    rleval sweep --config maze_sweep.yaml --idealized
    rleval demo maxbias

Exit codes: 0 success, 2 configuration error, 3 statistical precondition failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.cli.config_file import ConfigFile, load_config_file
from app.config import config
from app.core.compare import bonferroni, diff_curve, paired_scalar_test, welch_ci
from app.core.demos import DEMOS, run_demo
from app.core.envs import make_env
from app.core.exceptions import ConfigurationError, StatisticalPreconditionError
from app.core.harness import RunBatch, run_batch
from app.core.hyperstudy import bootstrap_max_estimate, run_sweep, sensitivity, sweep_manifest
from app.core.metrics import batch_metric, per_step_matrix
from app.core.stats import interval, iqm, per_step_band, perf_distribution, tolerance_interval
from app.services.storage import RECORD_SUFFIX, RecordStoreFactory, load_batch_file
from app.services.tables import (
    band_rows,
    diff_rows,
    distribution_rows,
    format_table,
    interval_header,
    metric_rows,
    write_table,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STATS = 3


# ========== Helpers ==========

def _output_dir(args, parsed: Optional[ConfigFile] = None) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if parsed is not None and parsed.output_dir:
        return Path(parsed.output_dir)
    return Path(config.OUTPUT_DIR)


def _batch_key(batch: RunBatch) -> str:
    return f"{batch.algorithm}-{batch.fingerprint}"


def _value_range(batch: RunBatch, args) -> Optional[Tuple[float, float]]:
    if getattr(args, "range", None):
        return tuple(args.range)
    return make_env(batch.env_id).descriptor.return_bounds


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def _record_paths(target: str) -> List[Path]:
    path = Path(target)
    if path.is_dir():
        paths = sorted(path.glob(f"*{RECORD_SUFFIX}"))
        if not paths:
            raise ConfigurationError(f"no record files in {path}")
        return paths
    if not path.exists():
        raise ConfigurationError(f"record file not found: {path}")
    return [path]


def _emit(text: str):
    sys.stdout.write(text)
    sys.stdout.write("\n")


# ========== Commands ==========

def cmd_run(args) -> int:
    """Run a batch, store its records and print the return-rate summary"""
    parsed = load_config_file(args.config)
    spec = parsed.experiment_spec()
    seeds = parsed.seeds
    runs = args.runs or seeds.runs
    base_seed = args.base_seed if args.base_seed is not None else seeds.base_seed
    parallelism = args.parallelism or config.DEFAULT_PARALLELISM
    method = args.method or parsed.analysis.method
    alpha = args.alpha or parsed.analysis.alpha
    beta = args.beta or parsed.analysis.beta

    out = _output_dir(args, parsed)
    store = RecordStoreFactory.create_store(config.STORAGE_TYPE, config.get_storage_config(str(out)))
    batch = run_batch(spec, runs, base_seed, parallelism, seeds.pairing)
    key = _batch_key(batch)
    location = store.save(key, batch)

    samples = batch_metric(batch.records, parsed.analysis.metric)
    iv = interval(samples.values, method, alpha, beta, config.BOOTSTRAP_RESAMPLES, _rng(base_seed),
                  _value_range(batch, args))
    header = interval_header(iv, batch.fingerprint, metric=samples.label, records=location)
    write_table(out / f"{key}.metrics.csv", metric_rows(samples), header)

    summary = dict(iv.to_row(), mean=float(samples.values.mean()))
    _emit(format_table([summary], header))
    return EXIT_OK


def _analyze_batch(batch: RunBatch, args, out: Path):
    key = _batch_key(batch)
    rng = _rng(batch.base_seed)
    value_range = _value_range(batch, args)
    beta = args.beta if args.beta is not None else 0.9

    bands = per_step_band(per_step_matrix(batch.records), args.method, args.alpha, beta,
                          config.BOOTSTRAP_RESAMPLES, rng, value_range)
    band_header = interval_header(bands[0], batch.fingerprint, table="per-step band")
    write_table(out / f"{key}.band.csv", band_rows(bands, args.stride), band_header)

    samples = batch_metric(batch.records, args.metric)
    dist = perf_distribution(samples.values)
    dist_header = {"method": "histogram+kde", "n": samples.n, "fingerprint": batch.fingerprint,
                   "modes": dist.mode_count}
    for name, rows in distribution_rows(dist).items():
        write_table(out / f"{key}.{name}.csv", rows, dist_header)

    summary = [{"statistic": "mean", "value": float(samples.values.mean())}]
    if samples.n >= 4:
        summary.append({"statistic": "iqm", "value": iqm(samples.values)})
    ci = interval(samples.values, args.method, args.alpha, beta, config.BOOTSTRAP_RESAMPLES, rng, value_range)
    summary += [{"statistic": f"{ci.method}_lower", "value": ci.lower},
                {"statistic": f"{ci.method}_upper", "value": ci.upper}]
    try:
        tol = tolerance_interval(samples.values, args.alpha, beta)
        summary += [{"statistic": "tolerance_lower", "value": tol.lower},
                    {"statistic": "tolerance_upper", "value": tol.upper}]
    except StatisticalPreconditionError as e:
        logger.warning(f"skipping tolerance interval: {e}")
    header = interval_header(ci, batch.fingerprint, metric=samples.label)
    write_table(out / f"{key}.summary.csv", summary, header)
    _emit(format_table(summary, header))


def cmd_analyze(args) -> int:
    """Learning-curve bands, performance distribution and scalar summaries per batch"""
    out = _output_dir(args)
    for path in _record_paths(args.records):
        batch = load_batch_file(str(path))
        if len(batch) < 2:
            raise StatisticalPreconditionError(f"{path} holds {len(batch)} run; intervals need at least 2")
        _analyze_batch(batch, args, out)
    return EXIT_OK


def cmd_compare(args) -> int:
    """Difference curve A - B, Bonferroni-adjusted for k comparisons"""
    batch_a = load_batch_file(args.records_a)
    batch_b = load_batch_file(args.records_b)
    if batch_a.step_budget != batch_b.step_budget:
        raise StatisticalPreconditionError("record sets have different step budgets")
    alpha = bonferroni(args.alpha, args.k_comparisons)
    rng = _rng(batch_a.base_seed)

    curve = diff_curve(batch_a.records, batch_b.records, alpha, args.paired, args.method,
                       config.BOOTSTRAP_RESAMPLES, rng, (batch_a.algorithm, batch_b.algorithm))
    header = {
        "method": f"{'paired' if args.paired else 'unpaired'}-{curve.method}",
        "alpha": alpha,
        "beta": None,
        "n": f"{len(batch_a)}+{len(batch_b)}",
        "fingerprint": f"{batch_a.fingerprint} - {batch_b.fingerprint}",
        "k_comparisons": args.k_comparisons,
        "note": "per-step intervals are not corrected across steps",
    }
    out = _output_dir(args)
    write_table(out / f"diff-{_batch_key(batch_a)}-vs-{_batch_key(batch_b)}.csv",
                diff_rows(curve, args.stride), header)

    a = batch_metric(batch_a.records, args.metric).values
    b = batch_metric(batch_b.records, args.metric).values
    scalar = paired_scalar_test(a, b, alpha) if args.paired else welch_ci(a, b, alpha)
    _emit(format_table([dict(scalar.to_row(), effect_size=scalar.center,
                             significant_steps=int(curve.significant.sum()))], header))
    logger.info("Per-step intervals are uncorrected for multiplicity across time steps")
    return EXIT_OK


def cmd_sweep(args) -> int:
    """Sweep one hyperparameter; sensitivity table and optional tuned-performance estimate"""
    parsed = load_config_file(args.config)
    spec = parsed.experiment_spec()
    sweep = parsed.sweep_spec()
    base_seed = args.base_seed if args.base_seed is not None else parsed.seeds.base_seed
    if args.runs:
        sweep.runs_per_config = args.runs
    parallelism = args.parallelism or config.DEFAULT_PARALLELISM
    alpha = args.alpha or parsed.analysis.alpha

    out = _output_dir(args, parsed)
    store = RecordStoreFactory.create_store(config.STORAGE_TYPE, config.get_storage_config(str(out)))
    entries = run_sweep(spec, sweep, base_seed, parallelism, parsed.seeds.pairing)
    files = [store.save(f"{parsed.experiment.name}-{e.config_id}", e.batch) for e in entries]
    write_table(out / f"{parsed.experiment.name}.manifest.csv", sweep_manifest(entries, files),
                {"method": "sweep", "n": sweep.runs_per_config, "fingerprint": spec.fingerprint()})

    samples = [batch_metric(e.batch.records, parsed.analysis.metric) for e in entries]
    values = [e.config[sweep.parameter] for e in entries]
    rng = _rng(base_seed)
    result = sensitivity(values, samples, alpha, config.BOOTSTRAP_RESAMPLES, rng)
    header = {"method": "bootstrap", "alpha": alpha, "n": sweep.runs_per_config,
              "fingerprint": spec.fingerprint(), "parameter": sweep.parameter}
    write_table(out / f"{parsed.experiment.name}.sensitivity.csv", result.rows(), header)
    _emit(format_table(result.rows(), header))
    if result.boundary_flag:
        _emit(f"WARNING: best {sweep.parameter}={result.best_value} is at the edge of the range; expand range")

    if args.idealized:
        estimate = bootstrap_max_estimate(samples, config.BOOTSTRAP_RESAMPLES, rng, alpha)
        _emit(format_table([dict(estimate.interval.to_row(), mean=estimate.mean)],
                           interval_header(estimate.interval, spec.fingerprint(), table="idealized")))
    return EXIT_OK


def cmd_demo(args) -> int:
    """Run a named demonstration and print its report table"""
    base_seed = args.base_seed if args.base_seed is not None else 0
    parallelism = args.parallelism or config.DEFAULT_PARALLELISM
    options = {"threshold": config.DIVERGENCE_THRESHOLD} if args.name == "baird" else {}
    report = run_demo(args.name, base_seed, parallelism, **options)
    header = {"method": f"demo:{args.name}", "n": getattr(report, "reps", None), "base_seed": base_seed}
    if args.name == "twostage":
        header["note"] = "pedagogical; select-then-rerun is not a recommended pipeline"
    tables = {f"demo-{args.name}.csv": (report.rows(), header)}
    if args.name == "baird":
        trajectory_header = dict(header, method="demo:baird-trajectory", threshold=report.threshold)
        tables["demo-baird-trajectory.csv"] = (report.trajectory_rows(), trajectory_header)

    for name, (rows, table_header) in tables.items():
        if args.out:
            write_table(Path(args.out) / name, rows, table_header)
        _emit(format_table(rows, table_header))
    return EXIT_OK


# ========== Parser ==========

def _add_common(parser: argparse.ArgumentParser, stats: bool = True):
    parser.add_argument("--out", help="output directory (default: $RLEVAL_OUTPUT_DIR)")
    parser.add_argument("--base-seed", type=int, dest="base_seed")
    parser.add_argument("--parallelism", type=int)
    if stats:
        parser.add_argument("--alpha", type=float)
        parser.add_argument("--beta", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rleval", description=config.APP_NAME)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch of experiments")
    run.add_argument("--config", required=True)
    run.add_argument("--runs", type=int)
    run.add_argument("--method", choices=("t", "bootstrap", "bernstein", "tolerance"))
    run.add_argument("--range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    _add_common(run)
    run.set_defaults(handler=cmd_run)

    analyze = sub.add_parser("analyze", help="summarize stored records")
    analyze.add_argument("records", help="record file or directory of record files")
    analyze.add_argument("--metric", default="return_rate")
    analyze.add_argument("--method", choices=("t", "bootstrap", "bernstein", "tolerance"), default="t")
    analyze.add_argument("--stride", type=int, default=1, help="emit every k-th step of curve tables")
    analyze.add_argument("--range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    _add_common(analyze)
    analyze.set_defaults(handler=cmd_analyze, alpha=0.05)

    compare = sub.add_parser("compare", help="difference curve between two record sets")
    compare.add_argument("records_a")
    compare.add_argument("records_b")
    compare.add_argument("--paired", action="store_true")
    compare.add_argument("--method", choices=("t", "bootstrap"), default="t")
    compare.add_argument("--k-comparisons", type=int, default=1, dest="k_comparisons")
    compare.add_argument("--metric", default="return_rate")
    compare.add_argument("--stride", type=int, default=1)
    _add_common(compare)
    compare.set_defaults(handler=cmd_compare, alpha=0.05)

    sweep = sub.add_parser("sweep", help="hyperparameter sweep with sensitivity analysis")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--runs", type=int, help="runs per configuration")
    sweep.add_argument("--idealized", action="store_true", help="bootstrap max-performance estimate")
    _add_common(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    demo = sub.add_parser("demo", help="demonstrations of evaluation pitfalls")
    demo.add_argument("name", choices=DEMOS)
    _add_common(demo, stats=False)
    demo.set_defaults(handler=cmd_demo)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=config.LOG_LEVEL, format=config.LOG_FORMAT)
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except StatisticalPreconditionError as e:
        logger.error(f"Statistical precondition failed: {e}")
        return EXIT_STATS


if __name__ == "__main__":
    sys.exit(main())
