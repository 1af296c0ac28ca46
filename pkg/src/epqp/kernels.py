"""Kernel dispatch: compiled Cython core when available, numpy otherwise.

Set ``EPQP_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names the
implementation in use.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("EPQP_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def attenuator_kraus(lam, dim):
    return _impl.attenuator_kraus(float(lam), int(dim))


def amplifier_kraus(mu, dim):
    return _impl.amplifier_kraus(float(mu), int(dim))


def kraus_apply(kraus, rho):
    kraus = np.ascontiguousarray(kraus, dtype=np.complex128)
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    # the blocked BLAS path wins from about 16x16 upward (benchmarks/bench_kernels.py),
    # so only small problems go through the compiled loop
    if BACKEND == "cython" and kraus.shape[1] * kraus.shape[2] <= 64:
        return _impl.kraus_apply(kraus, rho)
    return _pykernels.kraus_apply(kraus, rho)


def energy_project(x, energies, budget):
    if BACKEND == "cython" and x.size > 128 * 128:
        return _pykernels.energy_project(x, energies, budget)
    return _impl.energy_project(
        np.ascontiguousarray(x, dtype=np.complex128),
        np.ascontiguousarray(energies, dtype=np.float64),
        np.ascontiguousarray(budget, dtype=np.float64),
    )
