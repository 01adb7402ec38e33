"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin. Set ``LRCD_DISABLE_NUMBA=1`` in the
environment before import to route the public names to the numpy versions
(useful for debugging and for platforms without numba). Both variants are
always importable under their suffixed names so they can be benchmarked
and cross-checked against each other.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

DISABLED = os.environ.get("LRCD_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}
USE_NUMBA = HAVE_NUMBA and not DISABLED

# rows per block in the numpy Toeplitz product; bounds the temporary to
# _ROW_BLOCK * n doubles
_ROW_BLOCK = 256
# ACD chunk length; keeps running products of (alpha*eps + beta) in range
_ACD_CHUNK = 128


# --------------------------------------------------------------------------
# ACD(1,1) recursion
# --------------------------------------------------------------------------

def acd_recursion_numpy(eps, omega, alpha, beta, psi0):
    """tau_k = psi_k eps_k with psi_k = omega + alpha tau_{k-1} + beta psi_{k-1}.

    Rewrites the recursion as psi_{k+1} = omega + c_k psi_k with
    c_k = alpha eps_k + beta and solves it chunk by chunk with cumulative
    products, carrying psi across chunk boundaries.
    """
    eps = np.asarray(eps, dtype=np.float64)
    n = eps.shape[0]
    psi = np.empty(n, dtype=np.float64)
    c = alpha * eps + beta
    start_psi = float(psi0)
    for lo in range(0, n, _ACD_CHUNK):
        hi = min(lo + _ACD_CHUNK, n)
        cc = c[lo:hi - 1]
        # prod[i] = c_lo * ... * c_{lo+i-1}, prod[0] = 1
        prod = np.empty(hi - lo, dtype=np.float64)
        prod[0] = 1.0
        np.cumprod(cc, out=prod[1:])
        inv = 1.0 / prod
        # psi_{lo+i} = prod[i] * (psi_lo + omega * sum_{l=1..i} 1/prod[l])
        acc = np.empty(hi - lo, dtype=np.float64)
        acc[0] = 0.0
        np.cumsum(inv[1:], out=acc[1:])
        psi[lo:hi] = prod * (start_psi + omega * acc)
        start_psi = omega + c[hi - 1] * psi[hi - 1]
    return psi * eps


def _acd_recursion_loop(eps, omega, alpha, beta, psi0):
    n = eps.shape[0]
    tau = np.empty(n, dtype=np.float64)
    psi = psi0
    for k in range(n):
        t = psi * eps[k]
        tau[k] = t
        psi = omega + alpha * t + beta * psi
    return tau


# --------------------------------------------------------------------------
# symmetric Toeplitz matrix-vector product: out_i = sum_j w[|i-j|] v_j
# --------------------------------------------------------------------------

def toeplitz_matvec_numpy(w, v):
    w = np.asarray(w, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    n = v.shape[0]
    out = np.empty(n, dtype=np.float64)
    j = np.arange(n)
    for lo in range(0, n, _ROW_BLOCK):
        hi = min(lo + _ROW_BLOCK, n)
        i = np.arange(lo, hi)[:, None]
        out[lo:hi] = w[np.abs(i - j)] @ v
    return out


def _toeplitz_matvec_loop(w, v):
    n = v.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 0.0
        for j in range(i):
            acc += w[i - j] * v[j]
        for j in range(i, n):
            acc += w[j - i] * v[j]
        out[i] = acc
    return out


# --------------------------------------------------------------------------
# counts of sorted event times at sorted evaluation points, (0, t] convention
# --------------------------------------------------------------------------

def counts_at_numpy(times, t):
    return np.searchsorted(times, t, side="right").astype(np.int64)


def _counts_at_loop(times, t):
    # two-pointer merge; t must be nondecreasing
    m = t.shape[0]
    n = times.shape[0]
    out = np.empty(m, dtype=np.int64)
    k = 0
    for i in range(m):
        ti = t[i]
        while k < n and times[k] <= ti:
            k += 1
        out[i] = k
    return out


if HAVE_NUMBA:
    acd_recursion_numba = njit(cache=True, nogil=True)(_acd_recursion_loop)
    toeplitz_matvec_numba = njit(cache=True, nogil=True)(_toeplitz_matvec_loop)
    counts_at_numba = njit(cache=True, nogil=True)(_counts_at_loop)
else:  # pragma: no cover
    acd_recursion_numba = _acd_recursion_loop
    toeplitz_matvec_numba = _toeplitz_matvec_loop
    counts_at_numba = _counts_at_loop


def acd_recursion(eps, omega, alpha, beta, psi0):
    eps = np.ascontiguousarray(eps, dtype=np.float64)
    if USE_NUMBA:
        return acd_recursion_numba(eps, float(omega), float(alpha), float(beta), float(psi0))
    return acd_recursion_numpy(eps, omega, alpha, beta, psi0)


def toeplitz_matvec(w, v):
    w = np.ascontiguousarray(w, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    if w.shape[0] < v.shape[0]:
        raise ValueError("kernel row shorter than vector")
    if USE_NUMBA:
        return toeplitz_matvec_numba(w, v)
    return toeplitz_matvec_numpy(w, v)


def counts_at(times, t):
    """N(t) for each entry of a nondecreasing array ``t``."""
    times = np.ascontiguousarray(times, dtype=np.float64)
    t = np.ascontiguousarray(t, dtype=np.float64)
    if USE_NUMBA:
        return counts_at_numba(times, t)
    return counts_at_numpy(times, t)
