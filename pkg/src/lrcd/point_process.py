"""Event times and counts induced by a duration sequence.

Durations simulated under the Palm measure P0 put an event at the origin.
The time-stationary measure P is approximated by dropping the origin
uniformly inside the central window of a long P0 realization and
re-indexing events relative to it.
"""

import csv
from dataclasses import dataclass
import logging
import math
from typing import NamedTuple

import numpy as np

from . import _kernels
from .duration_models import simulate

log = logging.getLogger(__name__)

MIN_STATIONARY_EVENTS = 100


@dataclass(frozen=True)
class SamplingRegime:
    kind: str = "palm"
    window: tuple = (1.0 / 3.0, 2.0 / 3.0)

    def __post_init__(self):
        if self.kind not in ("palm", "stationary"):
            raise ValueError(f"unknown regime {self.kind!r}")
        lo, hi = self.window
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError(f"bad origin window {self.window}")

    @property
    def tag(self):
        return "P0" if self.kind == "palm" else "P"

    @classmethod
    def parse(cls, name):
        key = name.strip().lower()
        if key in ("palm", "p0", "palmp0"):
            return PALM
        if key in ("stationary", "p", "stationaryp"):
            return STATIONARY
        raise ValueError(f"unknown regime {name!r}")


PALM = SamplingRegime("palm")
STATIONARY = SamplingRegime("stationary")


@dataclass(frozen=True)
class EventTimes:
    """Event epochs t_1 < t_2 < ... > 0, plus the last epoch t_0 <= 0.

    ``end`` is the end of the observation window; by default the last event.
    """

    times: np.ndarray
    regime: SamplingRegime = PALM
    t0: float = 0.0
    end: float = None

    def __post_init__(self):
        t = self.times
        if t.ndim != 1:
            raise ValueError("times must be one-dimensional")
        if t.size and (t[0] <= 0 or np.any(np.diff(t) <= 0)):
            raise ValueError("event times must be positive and strictly increasing")
        if self.end is not None and t.size and self.end < t[-1]:
            raise ValueError("observation end precedes the last event")

    def __len__(self):
        return self.times.shape[0]

    @property
    def span(self):
        """Largest t for which N(t) is fully observed."""
        if self.end is not None:
            return float(self.end)
        return float(self.times[-1]) if self.times.size else 0.0

    @property
    def u(self):
        """u_1 = t_1 and u_k = tau_k for k >= 2."""
        return np.diff(self.times, prepend=0.0)

    @property
    def straddling_duration(self):
        """tau_1 = t_1 - t_0, the duration covering the origin."""
        return float(self.times[0] - self.t0)


@dataclass(frozen=True)
class CountSeries:
    delta_t: float
    counts: np.ndarray
    regime: str = "P0"
    dropped: int = 0

    def __post_init__(self):
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    def __len__(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_index", "count"])
            for i, c in enumerate(self.counts.tolist()):
                w.writerow([i, c])

    @classmethod
    def from_csv(cls, path, delta_t, regime="P0"):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["bin_index", "count"]:
            raise ValueError(f"{path}: expected header bin_index,count")
        idx = [int(r[0]) for r in rows[1:]]
        if idx != list(range(len(idx))):
            raise ValueError(f"{path}: bin_index is not 0..n-1")
        return cls(delta_t, np.array([int(r[1]) for r in rows[1:]], dtype=np.int64), regime)


def events_from_durations(series, regime=PALM, seed=None):
    durations = np.asarray(series.durations, dtype=np.float64)
    if durations.size == 0:
        raise ValueError("empty duration series")
    epochs = np.cumsum(durations)
    if regime.kind == "palm":
        return EventTimes(epochs, regime, 0.0)
    if durations.size < MIN_STATIONARY_EVENTS:
        raise ValueError(
            f"stationary regime needs at least {MIN_STATIONARY_EVENTS} events, "
            f"got {durations.size}")
    rng = np.random.default_rng(seed)
    total = epochs[-1]
    lo, hi = regime.window
    origin = rng.uniform(lo * total, hi * total)
    # an event exactly at the origin becomes t_0
    k = int(np.searchsorted(epochs, origin, side="right"))
    t0 = epochs[k - 1] - origin if k > 0 else -origin
    return EventTimes(epochs[k:] - origin, regime, float(t0))


def count(events, t):
    """N(t): number of events in (0, t]."""
    if np.ndim(t) == 0:
        if t < 0:
            raise ValueError("t must be nonnegative")
        return int(np.searchsorted(events.times, t, side="right"))
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return np.searchsorted(events.times, t, side="right").astype(np.int64)


class HorizonError(ValueError):
    """Requested horizon extends beyond the simulated span."""


def bin_counts(events, delta_t, num_bins):
    if not delta_t > 0:
        raise ValueError("delta_t must be positive")
    horizon = num_bins * delta_t
    if horizon > events.span:
        raise HorizonError(f"horizon {horizon:g} exceeds simulated span {events.span:g}")
    edges = delta_t * np.arange(num_bins + 1, dtype=np.float64)
    cum = _kernels.counts_at(events.times, edges)
    return CountSeries(float(delta_t), np.diff(cum), events.regime.tag)


def aggregate(counts, factor):
    """Non-overlapping block sums; a trailing partial block is dropped."""
    factor = int(factor)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    nblocks = len(counts) // factor
    dropped = len(counts) - nblocks * factor
    if dropped:
        log.info("aggregate: dropped %d trailing bins", dropped)
    blocks = counts.counts[: nblocks * factor].reshape(nblocks, factor).sum(axis=1)
    return CountSeries(counts.delta_t * factor, blocks, counts.regime, dropped)


class LengthBiasCheck(NamedTuple):
    stationary_mean: float
    stationary_se: float
    palm_weighted: float
    palm_weighted_se: float

    @property
    def z_score(self):
        combined = math.hypot(self.stationary_se, self.palm_weighted_se)
        if combined == 0:
            return 0.0 if self.stationary_mean == self.palm_weighted else math.inf
        return (self.stationary_mean - self.palm_weighted) / combined


def length_bias_check(model, reps, seed, n=None):
    """Both sides of E_P[tau_1] = lambda E0[tau_1^2].

    Left: mean of the duration straddling a stationary-regime origin.
    Right: ratio of sample means E0 tau^2 / E0 tau from independent P0 paths,
    with a delta-method SE computed across paths (durations within a path
    may be dependent).
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    if n is None:
        n = 256 if model.kind == "iid" else 4096
    seeds = np.random.SeedSequence(seed).spawn(3 * reps)
    straddle = np.empty(reps)
    s1 = np.empty(reps)
    s2 = np.empty(reps)
    for r in range(reps):
        ser = simulate(model, n, seeds[3 * r])
        ev = events_from_durations(ser, STATIONARY, seeds[3 * r + 1])
        straddle[r] = ev.straddling_duration
        tau = simulate(model, n, seeds[3 * r + 2]).durations
        s1[r] = tau.mean()
        s2[r] = np.mean(tau * tau)
    left = straddle.mean()
    left_se = straddle.std(ddof=1) / math.sqrt(reps)
    m1, m2 = s1.mean(), s2.mean()
    right = m2 / m1
    # delta method for a ratio of means
    cov = np.cov(np.vstack([s2, s1]), ddof=1)
    grad = np.array([1.0 / m1, -m2 / m1 ** 2])
    right_se = math.sqrt(max(grad @ cov @ grad, 0.0) / reps)
    return LengthBiasCheck(float(left), float(left_se), float(right), float(right_se))


def simulate_events(model, regime, horizon, seed, n=None, max_doublings=6):
    """Events observed at least up to ``horizon`` for one replication.

    Without an explicit ``n`` the series length is sized from the model mean
    and doubled (with fresh randomness) until the span covers the horizon.
    With an explicit ``n`` a shortfall raises :class:`HorizonError`.
    """
    rng = np.random.default_rng(seed)
    fixed = n is not None
    if n is None:
        factor = 4.5 if regime.kind == "stationary" else 1.5
        need = factor * horizon / model.mean_duration + 2 * MIN_STATIONARY_EVENTS
        n = 1 << max(8, math.ceil(math.log2(need)))
    for _ in range(max_doublings + 1):
        sim_seed, origin_seed = rng.integers(0, 2 ** 63, size=2)
        ev = events_from_durations(simulate(model, n, int(sim_seed)), regime, int(origin_seed))
        if ev.span >= horizon:
            return ev
        if fixed:
            break
        n *= 2
    raise HorizonError(f"simulated span {ev.span:g} short of horizon {horizon:g} with n={n}")
