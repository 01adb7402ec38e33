"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both variants are imported directly, so LRCD_DISABLE_NUMBA has no effect
here. The first numba call (compilation or cache load) is excluded.
"""

import argparse
import timeit

import numpy as np

from lrcd import _kernels


def cases(rng):
    eps = rng.standard_exponential(2 ** 20)
    w = np.abs(rng.standard_normal(4096))
    v = rng.random(4096)
    times = np.cumsum(rng.exponential(size=2 ** 20))
    t = np.sort(rng.uniform(0, times[-1], 2 ** 16))
    return [
        ("acd_recursion n=2^20", (eps, 0.1, 0.1, 0.8, 1.0),
         _kernels.acd_recursion_numba, _kernels.acd_recursion_numpy),
        ("toeplitz_matvec n=4096", (w, v),
         _kernels.toeplitz_matvec_numba, _kernels.toeplitz_matvec_numpy),
        ("counts_at 2^20 events, 2^16 times", (times, t),
         _kernels.counts_at_numba, _kernels.counts_at_numpy),
    ]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    print(f"{'kernel':<36} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name, argv, fast, slow in cases(np.random.default_rng(0)):
        np.testing.assert_allclose(fast(*argv), slow(*argv), rtol=1e-10)
        best = []
        for fn in (fast, slow):
            best.append(min(timeit.repeat(lambda: fn(*argv), number=1, repeat=args.repeat)))
        print(f"{name:<36} {1e3 * best[0]:>10.2f} {1e3 * best[1]:>10.2f} "
              f"{best[1] / best[0]:>7.1f}x")


if __name__ == "__main__":
    main()
