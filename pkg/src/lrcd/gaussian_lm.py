"""Long-memory Gaussian volatility process h_k = sum_j b_j e_{k-j}.

For d in (0, 1/2) the coefficients are those of the fractional integration
filter (1 - B)^{-d}, scaled by ``coeff_scale``; for d = 0 they are
geometric, b_j = coeff_scale * a**j. Both choices have closed-form
autocovariances, which lets :func:`generate_path` sample exactly by
circulant embedding.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.special import gammaln


class ParameterError(ValueError):
    """A model parameter lies outside its admissible range."""


class CirculantEmbeddingError(RuntimeError):
    """The circulant embedding of an autocovariance is not nonnegative definite."""

    def __init__(self, eigenvalue, largest):
        self.eigenvalue = eigenvalue
        self.largest = largest
        super().__init__(
            f"circulant embedding has eigenvalue {eigenvalue:.6g} "
            f"(largest {largest:.6g}); autocovariance is not embeddable"
        )


# eigenvalues below -EIG_TOL * max are an error; smaller negatives are round-off
EIG_TOL = 1e-8


@dataclass(frozen=True)
class LongMemoryGaussianSpec:
    d: float
    sigma_e: float = 1.0
    a: float = 0.0
    coeff_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.d < 0.5:
            raise ParameterError(f"d must lie in [0, 0.5), got {self.d}")
        if not self.sigma_e > 0:
            raise ParameterError(f"sigma_e must be positive, got {self.sigma_e}")
        if not abs(self.a) < 1:
            raise ParameterError(f"|a| must be < 1, got {self.a}")
        if self.coeff_scale == 0:
            raise ParameterError("coeff_scale must be nonzero")

    @classmethod
    def with_variance(cls, d, var_h, a=0.0, coeff_scale=1.0):
        """Spec whose marginal variance r_0 equals ``var_h``."""
        unit = cls(d=d, sigma_e=1.0, a=a, coeff_scale=coeff_scale)
        return cls(d=d, sigma_e=math.sqrt(var_h / unit.variance), a=a, coeff_scale=coeff_scale)

    @property
    def variance(self):
        """sigma_h^2 = r_0."""
        return float(autocovariance_h(self, 0))


@dataclass(frozen=True)
class GaussianPath:
    values: np.ndarray
    spec: LongMemoryGaussianSpec
    seed: object

    def __len__(self):
        return self.values.shape[0]


def ma_coefficients(d, count):
    """First ``count`` coefficients of (1 - B)^{-d}: b_0 = 1, b_j = b_{j-1}(j-1+d)/j."""
    if not 0.0 < d < 0.5:
        raise ParameterError(f"fractional coefficients need 0 < d < 0.5, got {d}")
    if count < 1:
        raise ParameterError("count must be >= 1")
    j = np.arange(1, count, dtype=np.float64)
    b = np.empty(count, dtype=np.float64)
    b[0] = 1.0
    b[1:] = np.cumprod((j - 1.0 + d) / j)
    return b


def autocovariance_h(spec, lag):
    """Autocovariance r_lag of h; accepts a scalar or an array of lags.

    For d > 0 this is the ARFIMA(0, d, 0) form
    r_s = c^2 sigma_e^2 Gamma(1-2d) Gamma(s+d) / (Gamma(d) Gamma(1-d) Gamma(s+1-d)).
    """
    s = np.abs(np.asarray(lag, dtype=np.float64))
    scale = spec.coeff_scale ** 2 * spec.sigma_e ** 2
    if spec.d == 0.0:
        r = scale * spec.a ** s / (1.0 - spec.a ** 2)
    else:
        d = spec.d
        logr = (gammaln(1.0 - 2.0 * d) - gammaln(d) - gammaln(1.0 - d)
                + gammaln(s + d) - gammaln(s + 1.0 - d))
        r = scale * np.exp(logr)
    if np.ndim(r) == 0:
        return float(r)
    return r


@lru_cache(maxsize=32)
def _embedding_sqrt_eigs(spec, n):
    """sqrt(lambda / 2m) for the size-2m circulant built from r_0..r_m, m = n."""
    r = autocovariance_h(spec, np.arange(n + 1))
    row = np.concatenate([r, r[-2:0:-1]])
    lam = np.fft.rfft(row).real
    top = lam.max()
    low = lam.min()
    if low < -EIG_TOL * top:
        raise CirculantEmbeddingError(low, top)
    lam = np.clip(lam, 0.0, None)
    m2 = row.shape[0]
    full = np.concatenate([lam, lam[-2:0:-1]])
    out = np.sqrt(full / m2)
    out.setflags(write=False)
    return out


def generate_paths(spec, n, reps, rng):
    """``reps`` independent exactly-stationary paths of length n, shape (reps, n).

    Uses the real and imaginary parts of one complex FFT as two independent
    paths, so half as many transforms as paths are needed.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    sq = _embedding_sqrt_eigs(spec, int(n))
    m2 = sq.shape[0]
    pairs = (reps + 1) // 2
    z = rng.standard_normal((pairs, m2)) + 1j * rng.standard_normal((pairs, m2))
    y = np.fft.fft(sq * z, axis=1)[:, :n]
    out = np.empty((2 * pairs, n), dtype=np.float64)
    out[0::2] = y.real
    out[1::2] = y.imag
    return out[:reps]


def generate_path(spec, n, seed):
    """One exactly-stationary Gaussian path; deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    values = generate_paths(spec, n, 1, rng)[0]
    return GaussianPath(values=values, spec=spec, seed=seed)
