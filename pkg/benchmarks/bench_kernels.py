"""Compare the compiled kernels with the numpy fallback.

Usage:  python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel and size with the best-of-N time of each
backend and the speedup.  The ``kraus_apply`` rows show where the
dispatcher's size threshold should sit.
"""
import argparse
import timeit

import numpy as np

from epqp import _pykernels

try:
    from epqp import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _best(fn, repeat):
    t = timeit.Timer(fn)
    n, _ = t.autorange()
    return min(t.repeat(repeat, n)) / n


def cases(rng):
    for d in (16, 32, 64):
        yield "attenuator_kraus", d, (0.37, d)
        yield "amplifier_kraus", d, (1.8, d)
    for d, r in ((4, 4), (8, 8), (16, 16), (32, 32), (64, 16)):
        k = rng.standard_normal((r, d, d)) + 1j * rng.standard_normal((r, d, d))
        rho = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        yield "kraus_apply", d, (k, rho)
    for d in (16, 64, 256):
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        x /= np.linalg.norm(x)
        yield "energy_project", d, (x, np.arange(d, dtype=float)[:, None], np.array([1.0]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels unavailable; build with: python setup.py build_ext --inplace")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'size':>6}{'numpy [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for name, d, a in cases(rng):
        tp = _best(lambda: getattr(_pykernels, name)(*a), args.repeat)
        tc = _best(lambda: getattr(_ckernels, name)(*a), args.repeat)
        print(f"{name:<18}{d:>6}{tp * 1e6:>14.1f}{tc * 1e6:>14.1f}{tp / tc:>10.2f}")


if __name__ == "__main__":
    main()
