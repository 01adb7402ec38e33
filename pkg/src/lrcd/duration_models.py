"""LMSD and ACD(1,1) duration models, simulated under the Palm measure."""

import csv
from dataclasses import dataclass, field
import math
from typing import NamedTuple, Union

import numpy as np
from scipy import integrate, special, stats

from . import _kernels
from .gaussian_lm import LongMemoryGaussianSpec, ParameterError, generate_paths


FAMILIES = ("exponential", "gamma", "degenerate")


@dataclass(frozen=True)
class InnovationSpec:
    """Unit-mean nonnegative innovation; ``shape`` is the gamma shape k."""

    family: str = "exponential"
    shape: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown innovation family {self.family!r}")
        if self.family == "gamma" and not self.shape > 0:
            raise ParameterError("gamma shape must be positive")

    @property
    def mean(self):
        return 1.0

    @property
    def variance(self):
        if self.family == "exponential":
            return 1.0
        if self.family == "gamma":
            return 1.0 / self.shape
        return 0.0

    @property
    def log_variance(self):
        """var(log eps); pi^2/6 for the unit exponential."""
        if self.family == "exponential":
            return math.pi ** 2 / 6.0
        if self.family == "gamma":
            return float(special.polygamma(1, self.shape))
        return 0.0

    def moment(self, r):
        """E[eps^r]."""
        if self.family == "exponential":
            return math.gamma(r + 1.0)
        if self.family == "gamma":
            k = self.shape
            return math.exp(special.gammaln(k + r) - special.gammaln(k) - r * math.log(k))
        return 1.0

    def cumulant(self, r):
        """r-th cumulant of eps."""
        if self.family == "exponential":
            return float(math.factorial(r - 1))
        if self.family == "gamma":
            k = self.shape
            return float(math.factorial(r - 1)) * k * k ** (-r)
        return 1.0 if r == 1 else 0.0

    def pdf(self):
        """Density as a callable, or None when there is none."""
        if self.family == "exponential":
            return stats.expon().pdf
        if self.family == "gamma":
            return stats.gamma(self.shape, scale=1.0 / self.shape).pdf
        return None

    def sample(self, rng, size):
        if self.family == "exponential":
            return rng.standard_exponential(size)
        if self.family == "gamma":
            return rng.standard_gamma(self.shape, size) / self.shape
        return np.ones(size)


@dataclass(frozen=True)
class LmsdSpec:
    gaussian: LongMemoryGaussianSpec
    innovation: InnovationSpec = field(default_factory=InnovationSpec)

    kind = "lmsd"

    @property
    def memory_d(self):
        return self.gaussian.d

    @property
    def mean_duration(self):
        return math.exp(self.gaussian.variance / 2.0) * self.innovation.mean

    @property
    def second_moment(self):
        return math.exp(2.0 * self.gaussian.variance) * self.innovation.moment(2)


@dataclass(frozen=True)
class AcdSpec:
    omega: float
    alpha: float
    beta: float
    innovation: InnovationSpec = field(default_factory=InnovationSpec)

    kind = "acd"

    def __post_init__(self):
        if not self.omega > 0:
            raise ParameterError("omega must be positive")
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if not self.beta >= 0:
            raise ParameterError("beta must be nonnegative")
        if not self.alpha + self.beta < 1:
            raise ParameterError(
                f"alpha + beta = {self.alpha + self.beta} >= 1 violates stationarity")
        if self.innovation.family == "degenerate":
            raise ParameterError("ACD innovations need a density positive near 0")

    @property
    def memory_d(self):
        return 0.0

    @property
    def persistence(self):
        return self.alpha + self.beta

    @property
    def mean_duration(self):
        return self.omega / (1.0 - self.alpha - self.beta)

    @property
    def default_burn_in(self):
        return max(1000, 10 * math.ceil(1.0 / (1.0 - self.persistence)))


@dataclass(frozen=True)
class IidRenewalSpec:
    """Renewal process with durations ``scale * eps``; unit exponential is Poisson."""

    innovation: InnovationSpec = field(default_factory=InnovationSpec)
    scale: float = 1.0

    kind = "iid"

    def __post_init__(self):
        if not self.scale > 0:
            raise ParameterError("scale must be positive")

    @property
    def memory_d(self):
        return 0.0

    @property
    def mean_duration(self):
        return self.scale * self.innovation.mean

    @property
    def second_moment(self):
        return self.scale ** 2 * self.innovation.moment(2)


DurationModel = Union[LmsdSpec, AcdSpec, IidRenewalSpec]


@dataclass(frozen=True)
class DurationSeries:
    durations: np.ndarray
    model: object
    seed: object
    regime: str = "P0"

    def __post_init__(self):
        if self.durations.ndim != 1:
            raise ValueError("durations must be one-dimensional")

    def __len__(self):
        return self.durations.shape[0]

    @property
    def mean(self):
        """Sample estimate of mu = E0 tau."""
        return float(self.durations.mean())

    @property
    def rate(self):
        """Sample estimate of lambda = 1/mu."""
        return 1.0 / self.mean


def simulate_lmsd(spec, n, seed):
    rng = np.random.default_rng(seed)
    return DurationSeries(_lmsd_draw(spec, n, rng), spec, seed)


def _lmsd_draw(spec, n, rng):
    h = generate_paths(spec.gaussian, n, 1, rng)[0]
    eps = spec.innovation.sample(rng, n)
    return np.exp(h) * eps


def simulate_acd(spec, n, seed, burn_in=None):
    if n < 1:
        raise ParameterError("n must be >= 1")
    if burn_in is None:
        burn_in = spec.default_burn_in
    if burn_in < 0:
        raise ParameterError("burn_in must be >= 0")
    rng = np.random.default_rng(seed)
    eps = spec.innovation.sample(rng, n + burn_in)
    tau = _kernels.acd_recursion(eps, spec.omega, spec.alpha, spec.beta, spec.mean_duration)
    return DurationSeries(tau[burn_in:], spec, seed)


def simulate_iid(spec, n, seed):
    rng = np.random.default_rng(seed)
    return DurationSeries(spec.scale * spec.innovation.sample(rng, n), spec, seed)


def simulate(model, n, seed):
    """Dispatch on model type."""
    if isinstance(model, LmsdSpec):
        return simulate_lmsd(model, n, seed)
    if isinstance(model, AcdSpec):
        return simulate_acd(model, n, seed)
    if isinstance(model, IidRenewalSpec):
        return simulate_iid(model, n, seed)
    raise TypeError(f"unsupported duration model {type(model).__name__}")


def acd_arma_form(spec):
    """(ar_coeff, ma_coeff, intercept) of the ARMA(1,1) representation of tau."""
    return spec.alpha + spec.beta, spec.beta, spec.omega


def acd_long_run_variance_exact(spec):
    """2 pi f_tau(0) from the ARMA(1,1) form; needs E[(alpha eps + beta)^2] < 1."""
    phi, theta, _ = acd_arma_form(spec)
    mu = spec.mean_duration
    m2 = spec.innovation.moment(2)
    ec2 = spec.alpha ** 2 * m2 + 2 * spec.alpha * spec.beta + spec.beta ** 2
    if ec2 >= 1:
        return math.inf
    psi2 = (spec.omega ** 2 + 2 * spec.omega * phi * mu) / (1.0 - ec2)
    sigma_eta2 = psi2 * spec.innovation.variance
    return sigma_eta2 * (1.0 - theta) ** 2 / (1.0 - phi) ** 2


class LongRunVariance(NamedTuple):
    value: float
    se: float
    batch_size: int
    batches: int


class EstimationError(RuntimeError):
    pass


def acd_long_run_variance(spec, reps, seed, batch_size=1024):
    """Batch-means estimate of lim n var(mean tau) from one long P0 path.

    ``reps`` batches of ``batch_size`` consecutive durations; the estimate is
    batch_size times the sample variance of the batch means.
    """
    if reps < 2:
        raise ParameterError("need at least two batches")
    series = simulate_acd(spec, reps * batch_size, seed)
    means = series.durations.reshape(reps, batch_size).mean(axis=1)
    value = batch_size * means.var(ddof=1)
    if not value > 0:
        raise EstimationError("long-run variance estimate is not positive")
    return LongRunVariance(value, value * math.sqrt(2.0 / (reps - 1)), batch_size, reps)


class MomentCheck(NamedTuple):
    holds: bool
    value: float
    se: float
    method: str


def recursion_moment(alpha, beta, innovation, order, mc_draws=200_000, seed=0):
    """E[(alpha eps + beta)^m] by quadrature, falling back to Monte Carlo."""
    if order < 1:
        raise ParameterError("order must be >= 1")
    a, b = alpha, beta
    pdf = innovation.pdf()
    if a == 0:
        value, se, method = b ** order, 0.0, "exact"
    elif pdf is not None:
        value, _ = integrate.quad(lambda x: (a * x + b) ** order * pdf(x), 0, np.inf, limit=200)
        se, method = 0.0, "quadrature"
    else:
        rng = np.random.default_rng(seed)
        draws = (a * innovation.sample(rng, mc_draws) + b) ** order
        value, se, method = draws.mean(), draws.std(ddof=1) / math.sqrt(mc_draws), "monte_carlo"
    return MomentCheck(bool(value < 1.0), float(value), float(se), method)


def acd_moment_condition(spec, order, **kwargs):
    """Whether E[(alpha eps + beta)^m] < 1, the condition for E0 tau^m < inf."""
    return recursion_moment(spec.alpha, spec.beta, spec.innovation, order, **kwargs)


def simulate_batch(model, n, reps, rng):
    """``reps`` independent P0 series of length n as a (reps, n) array."""
    if isinstance(model, LmsdSpec):
        h = generate_paths(model.gaussian, n, reps, rng)
        return np.exp(h) * model.innovation.sample(rng, (reps, n))
    if isinstance(model, AcdSpec):
        out = np.empty((reps, n))
        burn = model.default_burn_in
        for r in range(reps):
            eps = model.innovation.sample(rng, n + burn)
            out[r] = _kernels.acd_recursion(
                eps, model.omega, model.alpha, model.beta, model.mean_duration)[burn:]
        return out
    if isinstance(model, IidRenewalSpec):
        return model.scale * model.innovation.sample(rng, (reps, n))
    raise TypeError(f"unsupported duration model {type(model).__name__}")


def write_durations_csv(series, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "duration"])
        for i, t in enumerate(series.durations.tolist()):
            w.writerow([i, repr(t)])


def read_durations_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["index", "duration"]:
        raise ValueError(f"{path}: expected header index,duration")
    values = np.array([float(r[1]) for r in rows[1:]], dtype=np.float64)
    if values.size == 0 or np.any(values <= 0):
        raise ValueError(f"{path}: durations must be a nonempty positive sequence")
    return DurationSeries(values, "file", None)
