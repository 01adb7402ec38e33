"""Memory estimators: variance-time scaling, aggregated-count autocorrelation,
log-periodogram regression, and normalized partial sums."""

import csv
from dataclasses import asdict, dataclass, field
import json
import math
from typing import NamedTuple
import warnings

import numpy as np

from . import _kernels
from .duration_models import simulate_batch
from .point_process import CountSeries, count, simulate_events
from .seeding import ordered_map, replication_seed


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class VarianceTimeCurve:
    t_grid: np.ndarray
    var_hat: np.ndarray
    se: np.ndarray
    reps: int
    mean_hat: np.ndarray = None

    def __post_init__(self):
        if np.any(np.diff(self.t_grid) <= 0):
            raise ValueError("t_grid must be increasing")
        if np.any(self.var_hat < 0):
            raise ValueError("variances must be nonnegative")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "var_hat", "se", "reps"])
            for t, v, s in zip(self.t_grid, self.var_hat, self.se):
                w.writerow([repr(float(t)), repr(float(v)), repr(float(s)), self.reps])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["t", "var_hat", "se", "reps"]:
            raise ValueError(f"{path}: expected header t,var_hat,se,reps")
        body = np.array([[float(x) for x in r[:3]] for r in rows[1:]])
        reps = {int(r[3]) for r in rows[1:]}
        if len(reps) != 1:
            raise ValueError(f"{path}: inconsistent reps column")
        return cls(body[:, 0], body[:, 1], body[:, 2], reps.pop())


@dataclass
class MemoryEstimate:
    d_hat: float
    method: str
    se: float
    diagnostics: dict = field(default_factory=dict)

    METHODS = ("variance_time", "aggregated_acf", "log_periodogram")

    def __post_init__(self):
        if self.method not in self.METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.se >= 0:
            raise ValueError("se must be nonnegative")

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


@dataclass(frozen=True)
class PartialSumStats:
    n_grid: np.ndarray
    p: int
    moment_hat: np.ndarray
    se: np.ndarray
    reps: int
    slope: float
    slope_se: float

    @property
    def bounded(self):
        """No significant increasing trend: slope - 2 SE <= 0."""
        return bool(self.slope - 2.0 * self.slope_se <= 0.0)

    @property
    def ratio(self):
        return float(self.moment_hat.max() / self.moment_hat.min())

    @property
    def precise(self):
        return bool(self.se[-1] / self.moment_hat[-1] < 0.2)


# --------------------------------------------------------------------------
# variance-time
# --------------------------------------------------------------------------

def count_samples(model, regime, t_grid, reps, seed, workers=1, n_durations=None):
    """N(t) on ``t_grid`` for each replication, shape (reps, len(t_grid))."""
    t_grid = np.asarray(t_grid, dtype=np.float64)
    horizon = float(t_grid.max())

    def one(i):
        ev = simulate_events(model, regime, horizon, replication_seed(seed, i), n=n_durations)
        return _kernels.counts_at(ev.times, t_grid)

    return np.vstack(ordered_map(one, range(reps), workers))


def _variance_with_se(x):
    """Unbiased sample variance per column and its SE from the fourth moment."""
    n = x.shape[0]
    dev = x - x.mean(axis=0)
    s2 = (dev ** 2).sum(axis=0) / (n - 1)
    m4 = (dev ** 4).mean(axis=0)
    var_s2 = (m4 - s2 ** 2 * (n - 3) / (n - 1)) / n
    return s2, np.sqrt(np.clip(var_s2, 0.0, None))


def variance_time(model, regime, t_grid, reps, seed, workers=1, n_durations=None):
    if reps < 30:
        raise ValueError("variance_time needs reps >= 30")
    t_grid = np.asarray(t_grid, dtype=np.float64)
    samples = count_samples(model, regime, t_grid, reps, seed, workers, n_durations)
    var_hat, se = _variance_with_se(samples.astype(np.float64))
    return VarianceTimeCurve(t_grid, var_hat, se, reps, samples.mean(axis=0))


class PowerLawFit(NamedTuple):
    slope: float
    intercept: float
    r2: float
    d_hat: float
    slope_se: float


def fit_power_law(curve):
    """OLS of log var_hat on log t; d_hat = (slope - 1) / 2."""
    t = np.asarray(curve.t_grid, dtype=np.float64)
    v = np.asarray(curve.var_hat, dtype=np.float64)
    if t.size < 3:
        raise EstimationError("need at least three grid points")
    if np.any(v <= 0):
        raise EstimationError("nonpositive variance on the grid")
    x, y = np.log(t), np.log(v)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / sst if sst > 0 else 1.0
    dof = t.size - 2
    slope_se = math.sqrt(float(resid @ resid) / dof / float(xc @ xc)) if dof > 0 else 0.0
    return PowerLawFit(slope, intercept, r2, (slope - 1.0) / 2.0, slope_se)


def variance_time_estimate(curve):
    fit = fit_power_law(curve)
    return MemoryEstimate(
        fit.d_hat, "variance_time", fit.slope_se / 2.0,
        {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r2,
         "t_min": float(curve.t_grid[0]), "t_max": float(curve.t_grid[-1]),
         "reps": curve.reps})


# --------------------------------------------------------------------------
# aggregated counts
# --------------------------------------------------------------------------

MIN_BLOCKS = 100


def lag1_autocorr(x):
    """Plug-in lag-1 autocorrelation with overall mean and 1/N normalization."""
    x = np.asarray(x, dtype=np.float64)
    dev = x - x.mean()
    c0 = float(dev @ dev)
    if c0 == 0:
        raise EstimationError("zero-variance series")
    return float(dev[:-1] @ dev[1:]) / c0


def aggregated_lag1_corr(counts, levels):
    """Lag-1 autocorrelation of non-overlapping block sums, per aggregation level.

    Levels leaving fewer than 100 blocks are skipped with a warning.
    """
    x = counts.counts if isinstance(counts, CountSeries) else np.asarray(counts)
    out = {}
    for level in levels:
        level = int(level)
        nblocks = x.shape[0] // level
        if nblocks < MIN_BLOCKS:
            warnings.warn(f"level {level} leaves {nblocks} blocks (< {MIN_BLOCKS}); skipped")
            continue
        blocks = x[: nblocks * level].reshape(nblocks, level).sum(axis=1)
        out[level] = lag1_autocorr(blocks)
    return out


def lag1_corr_limit(d):
    """Limit of the aggregated lag-1 correlation for memory parameter d."""
    return 2.0 ** (2.0 * d) - 1.0


def d_from_lag1_corr(rho):
    return math.log2(1.0 + rho) / 2.0


def aggregated_acf_estimate(counts, levels):
    rhos = aggregated_lag1_corr(counts, levels)
    if not rhos:
        raise EstimationError("no aggregation level had enough blocks")
    top = max(rhos)
    nblocks = len(counts) // top
    # delta method on d = log2(1 + rho) / 2 with var(rho) ~ 1/blocks
    se = 1.0 / (2.0 * math.log(2.0) * (1.0 + rhos[top]) * math.sqrt(nblocks))
    return MemoryEstimate(
        d_from_lag1_corr(rhos[top]), "aggregated_acf", se,
        {"levels": [int(k) for k in rhos], "rho": [rhos[k] for k in rhos],
         "level_used": int(top), "blocks": int(nblocks)})


# --------------------------------------------------------------------------
# log-periodogram regression
# --------------------------------------------------------------------------

def log_periodogram_d(series, bandwidth=None):
    """Geweke–Porter-Hudak regression over Fourier frequencies j = 1..m.

    Regresses log I(lambda_j) on -log(4 sin^2(lambda_j / 2)); the slope
    estimates d with asymptotic SE pi / sqrt(24 m).
    """
    if isinstance(series, CountSeries):
        x = series.counts
    elif hasattr(series, "durations"):
        x = series.durations
    else:
        x = series
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 128:
        raise EstimationError("log-periodogram needs at least 128 observations")
    m = int(math.floor(math.sqrt(n))) if bandwidth is None else int(bandwidth)
    if not 1 <= m <= n // 2:
        raise EstimationError(f"bandwidth {m} outside [1, n/2]")
    dev = x - x.mean()
    if not np.any(dev):
        raise EstimationError("constant series")
    j = np.arange(1, m + 1)
    lam = 2.0 * np.pi * j / n
    periodogram = np.abs(np.fft.rfft(dev)[1: m + 1]) ** 2 / (2.0 * np.pi * n)
    reg = -np.log(4.0 * np.sin(lam / 2.0) ** 2)
    y = np.log(periodogram)
    rc = reg - reg.mean()
    d_hat = float(rc @ (y - y.mean()) / (rc @ rc))
    return MemoryEstimate(d_hat, "log_periodogram", math.pi / math.sqrt(24.0 * m),
                          {"bandwidth": m, "n": n})


# --------------------------------------------------------------------------
# partial sums
# --------------------------------------------------------------------------

def partial_sum_path(series, d, s_grid, mu=None):
    """Y_n(s) = sum_{k <= floor(n s)} (tau_k - mu) / n^{1/2 + d}."""
    if not 0.0 <= d < 0.5:
        raise ValueError("d must lie in [0, 0.5)")
    tau = np.asarray(getattr(series, "durations", series), dtype=np.float64)
    n = tau.shape[0]
    if mu is None:
        mu = tau.mean()
    s = np.asarray(s_grid, dtype=np.float64)
    if np.any((s < 0) | (s > 1)):
        raise ValueError("s_grid must lie in [0, 1]")
    csum = np.concatenate([[0.0], np.cumsum(tau - mu)])
    idx = np.floor(n * s + 1e-12).astype(np.int64)
    return csum[idx] / n ** (0.5 + d)


def _wls_slope(x, y, se_y):
    w = 1.0 / se_y ** 2
    xm = (w * x).sum() / w.sum()
    ym = (w * y).sum() / w.sum()
    sxx = (w * (x - xm) ** 2).sum()
    slope = (w * (x - xm) * (y - ym)).sum() / sxx
    return float(slope), float(math.sqrt(1.0 / sxx))


def rosenthal_moments(model, p, n_grid, reps, seed, chunk=256):
    """MC estimates of E0|y_n - E0 y_n|^p with y_n = sum tau_k / n^{1/2+d}.

    Each n uses its own independent replications. The verdict slope is a
    weighted fit of log moment on log n using delta-method SEs.
    """
    if p not in (2, 4, 6, 8):
        raise ValueError("p must be one of 2, 4, 6, 8")
    n_grid = np.asarray(n_grid, dtype=np.int64)
    d = model.memory_d
    mu = model.mean_duration
    moment = np.empty(n_grid.size)
    se = np.empty(n_grid.size)
    for idx, n in enumerate(n_grid):
        rng = np.random.default_rng(replication_seed(seed, idx))
        vals = np.empty(reps)
        for lo in range(0, reps, chunk):
            hi = min(lo + chunk, reps)
            tau = simulate_batch(model, int(n), hi - lo, rng)
            vals[lo:hi] = (tau.sum(axis=1) - n * mu) / n ** (0.5 + d)
        a = np.abs(vals) ** p
        moment[idx] = a.mean()
        se[idx] = a.std(ddof=1) / math.sqrt(reps)
    if n_grid.size >= 2:
        slope, slope_se = _wls_slope(np.log(n_grid), np.log(moment), se / moment)
    else:
        slope = slope_se = math.nan
    return PartialSumStats(n_grid, p, moment, se, reps, slope, slope_se)


def z_statistic(events, t, mu, d):
    """Z(t) = (N(t) - t / mu) / t^{1/2 + d}."""
    if not t > 0:
        raise ValueError("t must be positive")
    if not mu > 0:
        raise ValueError("mu must be positive")
    return (count(events, t) - t / mu) / t ** (0.5 + d)
