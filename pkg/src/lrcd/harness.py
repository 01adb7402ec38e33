"""Experiment runner and tick-data ingestion."""

import csv
import json
import logging
import math
import os
import time
from typing import NamedTuple
import warnings

import numpy as np

from . import __version__, _kernels
from .config import config_hash, dumps
from .duration_models import DurationSeries
from .estimators import (
    EstimationError, MemoryEstimate, VarianceTimeCurve, _variance_with_se,
    aggregated_lag1_corr, d_from_lag1_corr, fit_power_law, log_periodogram_d,
)
from .point_process import PALM, EventTimes, bin_counts, simulate_events
from .seeding import ordered_map, replication_seed

log = logging.getLogger(__name__)

DETERMINISTIC_FILES = (
    "config.toml", "variance_time.csv", "aggregated_acf.csv", "replications.csv",
    "counts_rep0.csv", "estimates.json", "report.json",
)


class Replication(NamedTuple):
    index: int
    seed: int
    n_events: int
    counts_at_grid: np.ndarray
    counts: object
    d_gph: float
    rho: dict


def _replicate(config, index):
    seed = replication_seed(config.seed, index)
    ev = simulate_events(config.model, config.regime, config.horizon, seed)
    at_grid = _kernels.counts_at(ev.times, np.asarray(config.t_grid))
    num_bins = int(math.floor(config.horizon / config.delta_t + 1e-9))
    counts = bin_counts(ev, config.delta_t, num_bins)
    try:
        bw = config.bandwidth or None
        d_gph = log_periodogram_d(counts, bw).d_hat
    except EstimationError:
        d_gph = math.nan
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            rho = aggregated_lag1_corr(counts, config.levels)
        except EstimationError:
            rho = {}
    n_events = int(np.searchsorted(ev.times, config.horizon, side="right"))
    return Replication(index, seed, n_events, at_grid, counts, d_gph, rho)


def _fmt(x):
    return repr(float(x))


def _mean_se(values):
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=np.float64)
    if v.size == 0:
        return math.nan, math.nan, 0
    se = v.std(ddof=1) / math.sqrt(v.size) if v.size > 1 else math.nan
    return float(v.mean()), float(se), int(v.size)


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def run_experiment(config, workers=1, out_dir=None):
    """Simulate, count and estimate across replications; write the report files.

    Output bytes depend only on the config and the package version: every
    replication has its own seed and results are reduced in index order.
    Wall-clock time goes to ``timing.json``, outside that contract.
    """
    config.validate()
    out_dir = out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    started = time.perf_counter()
    reps = ordered_map(lambda i: _replicate(config, i), range(config.reps), workers)

    with open(os.path.join(out_dir, "config.toml"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(config))

    grid = np.asarray(config.t_grid, dtype=np.float64)
    samples = np.vstack([r.counts_at_grid for r in reps]).astype(np.float64)
    if config.reps >= 2:
        var_hat, se = _variance_with_se(samples)
    else:
        var_hat = se = np.full(grid.size, math.nan)
    with open(os.path.join(out_dir, "variance_time.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "var_hat", "se", "reps"])
        for row in zip(grid, var_hat, se):
            w.writerow([_fmt(v) for v in row] + [config.reps])

    with open(os.path.join(out_dir, "aggregated_acf.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["level", "rho_mean", "rho_se", "reps_used"])
        rho_means = {}
        for level in config.levels:
            m, s, k = _mean_se([r.rho.get(int(level), math.nan) for r in reps])
            rho_means[int(level)] = (m, k)
            w.writerow([int(level), _fmt(m), _fmt(s), k])

    with open(os.path.join(out_dir, "replications.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "seed", "n_events", "d_gph"])
        for r in reps:
            w.writerow([r.index, r.seed, r.n_events, _fmt(r.d_gph)])

    reps[0].counts.to_csv(os.path.join(out_dir, "counts_rep0.csv"))

    estimates = []
    if config.reps >= 2 and grid.size >= 3 and np.all(var_hat > 0):
        fit = fit_power_law(VarianceTimeCurve(grid, var_hat, se, config.reps))
        estimates.append(MemoryEstimate(fit.d_hat, "variance_time", fit.slope_se / 2.0,
                                        {"slope": fit.slope, "r2": fit.r2}))
    usable = [k for k, (m, n) in rho_means.items() if n > 0 and not math.isnan(m)]
    if usable:
        top = max(usable)
        rho, n_used = rho_means[top]
        if rho > -1:
            estimates.append(MemoryEstimate(d_from_lag1_corr(rho), "aggregated_acf", 0.0,
                                            {"level": top, "rho_mean": rho, "reps": n_used}))
    m, s, k = _mean_se([r.d_gph for r in reps])
    if k:
        estimates.append(MemoryEstimate(m, "log_periodogram", 0.0 if math.isnan(s) else s,
                                        {"reps": k}))
    est_dicts = [
        {"method": e.method, "d_hat": e.d_hat, "se": e.se, "diagnostics": e.diagnostics}
        for e in estimates
    ]
    with open(os.path.join(out_dir, "estimates.json"), "w", encoding="utf-8") as fh:
        json.dump(_json_safe(est_dicts), fh, sort_keys=True, indent=2)
        fh.write("\n")

    target = config.model.memory_d
    verdicts = {f"{e.method}_within_0.1": bool(abs(e.d_hat - target) <= 0.1) for e in estimates}
    report = {
        "experiment_id": config.experiment_id,
        "config_hash": config_hash(config),
        "tool_version": __version__,
        "model_memory_d": target,
        "estimates": est_dicts,
        "verdicts": verdicts,
    }
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(_json_safe(report), fh, sort_keys=True, indent=2)
        fh.write("\n")

    with open(os.path.join(out_dir, "timing.json"), "w", encoding="utf-8") as fh:
        json.dump({"wall_clock_seconds": time.perf_counter() - started, "workers": workers},
                  fh, indent=2)
        fh.write("\n")
    return report


# --------------------------------------------------------------------------
# tick ingestion
# --------------------------------------------------------------------------

class IngestError(ValueError):
    pass


class IngestSummary(NamedTuple):
    n_events: int
    span: float
    min_duration: float
    max_duration: float
    unsorted: int
    zero_durations: int


def _parse_lines(path):
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text:
                continue
            fields = [f.strip() for f in text.split(",")]
            if lineno == 1 and fields == ["id", "timestamp"]:
                continue
            if len(fields) not in (1, 2):
                raise IngestError(f"{path}:{lineno}: expected 1 or 2 columns, got {len(fields)}")
            try:
                value = float(fields[-1])
            except ValueError:
                raise IngestError(f"{path}:{lineno}: cannot parse timestamp {fields[-1]!r}") from None
            if not math.isfinite(value):
                raise IngestError(f"{path}:{lineno}: non-finite timestamp")
            values.append(value)
    if not values:
        raise IngestError(f"{path}: no timestamps")
    return np.asarray(values, dtype=np.float64)


def ingest_timestamps(path, dedupe_policy="drop", jitter=1e-6, seed=0):
    """Read tick timestamps (one per line, or ``id,timestamp`` CSV).

    Unsorted input is sorted with a warning giving the number of
    out-of-order lines. Zero durations from repeated timestamps are
    dropped, jittered by U(0, jitter), or rejected, per ``dedupe_policy``.
    The first tick is the time origin, so the result is a Palm-regime view.
    """
    if dedupe_policy not in ("drop", "jitter", "error"):
        raise ValueError(f"unknown dedupe policy {dedupe_policy!r}")
    ts = _parse_lines(path)
    unsorted = int(np.sum(np.diff(ts) < 0))
    if unsorted:
        warnings.warn(f"{path}: {unsorted} out-of-order timestamps; input sorted")
        ts = np.sort(ts, kind="stable")
    ties = np.diff(ts) == 0
    zero = int(ties.sum())
    if zero:
        if dedupe_policy == "error":
            raise IngestError(f"{path}: {zero} zero durations (repeated timestamps)")
        if dedupe_policy == "drop":
            ts = ts[np.concatenate([[True], ~ties])]
        else:
            rng = np.random.default_rng(seed)
            bump = np.concatenate([[False], ties])
            ts = ts.copy()
            ts[bump] += rng.uniform(0.0, jitter, int(bump.sum()))
            ts = np.sort(ts)
            if np.any(np.diff(ts) <= 0):
                raise IngestError(f"{path}: jitter {jitter} too small to separate ties")
    if ts.size < 2:
        raise IngestError(f"{path}: need at least two distinct timestamps")
    durations = np.diff(ts)
    events = EventTimes(ts[1:] - ts[0], PALM, 0.0)
    series = DurationSeries(durations, "observed", None)
    summary = IngestSummary(int(ts.size), float(ts[-1] - ts[0]), float(durations.min()),
                            float(durations.max()), unsorted, zero)
    log.info("ingested %s: n=%d span=%g min=%g max=%g", path, summary.n_events,
             summary.span, summary.min_duration, summary.max_duration)
    return events, series, summary
