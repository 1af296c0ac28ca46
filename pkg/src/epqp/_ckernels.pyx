# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels`` (same signatures)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport lgamma, exp, log, sqrt

cnp.import_array()


cdef inline double _log_binom(double n, double k) nogil:
    return lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0)


def attenuator_kraus(double lam, int dim):
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out = np.zeros((dim, dim, dim), dtype=np.complex128)
    cdef int k, n, a
    cdef double ll, lm, val
    cdef bint zl = lam <= 0.0
    cdef bint zm = lam >= 1.0
    ll = log(lam) if not zl else 0.0
    lm = log(1.0 - lam) if not zm else 0.0
    with nogil:
        for k in range(dim):
            if k > 0 and zm:
                continue
            for n in range(k, dim):
                a = n - k
                if a > 0 and zl:
                    continue
                val = 0.5 * _log_binom(n, k)
                if a > 0:
                    val += 0.5 * a * ll
                if k > 0:
                    val += 0.5 * k * lm
                out[k, a, n] = exp(val)
    return out


def amplifier_kraus(double mu, int dim):
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] out = np.zeros((dim, dim, dim), dtype=np.complex128)
    cdef int k, n
    cdef double lx, lmu, val
    cdef bint zx = mu <= 1.0
    lx = log((mu - 1.0) / mu) if not zx else 0.0
    lmu = log(mu)
    with nogil:
        for k in range(dim):
            if k > 0 and zx:
                continue
            for n in range(dim - k):
                val = 0.5 * _log_binom(n + k, k) - 0.5 * (n + 1) * lmu
                if k > 0:
                    val += 0.5 * k * lx
                out[k, n + k, n] = exp(val)
    return out


def kraus_apply(const double complex[:, :, ::1] kraus, const double complex[:, ::1] rho):
    cdef Py_ssize_t r = kraus.shape[0], m = kraus.shape[1], n = kraus.shape[2]
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out = np.zeros((m, m), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] tmp = np.empty((m, n), dtype=np.complex128)
    cdef complex[:, ::1] o = out
    cdef complex[:, ::1] t = tmp
    cdef Py_ssize_t k, i, j, l
    cdef complex acc
    with nogil:
        for k in range(r):
            for i in range(m):
                for j in range(n):
                    acc = 0
                    for l in range(n):
                        acc = acc + kraus[k, i, l] * rho[l, j]
                    t[i, j] = acc
            for i in range(m):
                for j in range(m):
                    acc = 0
                    for l in range(n):
                        acc = acc + t[i, l] * kraus[k, j, l].conjugate()
                    o[i, j] = o[i, j] + acc
    return out


def energy_project(cnp.ndarray x, cnp.ndarray energies, cnp.ndarray budget):
    cdef const double complex[:, ::1] xv = np.ascontiguousarray(x, dtype=np.complex128)
    cdef const double[:, ::1] ev = np.ascontiguousarray(energies, dtype=np.float64)
    cdef const double[::1] bv = np.ascontiguousarray(budget, dtype=np.float64)
    cdef Py_ssize_t rows = xv.shape[0], cols = xv.shape[1], nf = ev.shape[1]
    cdef Py_ssize_t i, j, f
    cdef double[::1] w = np.zeros(rows)
    cdef double[::1] load = np.zeros(nf)
    cdef double c2 = 1.0, r, moved = 0.0, s, esum
    for i in range(rows):
        s = 0.0
        for j in range(cols):
            s += xv[i, j].real * xv[i, j].real + xv[i, j].imag * xv[i, j].imag
        w[i] = s
        for f in range(nf):
            load[f] += s * ev[i, f]
    for f in range(nf):
        if load[f] > bv[f]:
            r = bv[f] / load[f]
            if r < c2:
                c2 = r
    if c2 >= 1.0:
        return x
    y = np.array(xv, copy=True)
    cdef complex[:, ::1] yv = y
    s = sqrt(c2)
    for i in range(rows):
        esum = 0.0
        for f in range(nf):
            esum += ev[i, f]
        if esum > 0:
            moved += (1.0 - c2) * w[i]
            for j in range(cols):
                yv[i, j] = yv[i, j] * s
    if w[0] > 1e-300:
        s = sqrt((w[0] + moved) / w[0])
        for j in range(cols):
            yv[0, j] = yv[0, j] * s
    else:
        yv[0, 0] = sqrt(moved)
    return y
