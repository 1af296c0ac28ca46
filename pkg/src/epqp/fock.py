"""Truncated Fock-space linear algebra.

Conventions: ``a = (x + i p)/sqrt(2)``, Hamiltonian ``H = a^* a`` (no vacuum
offset), logarithms base 2.  A coherent state labelled by the phase-space
vector ``xi`` has amplitude ``(xi[0] + 1j*xi[1])/sqrt(2)`` and energy
``|xi|^2/2``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, NumericalQualityError, TruncationError

TAIL_TOL = 1e-6
HERM_TOL = 1e-12
NEG_TOL = 1e-10


def default_cutoff(e_max):
    """Default Fock cutoff ``ceil(8 (E_max + 1))``."""
    return int(math.ceil(8.0 * (float(e_max) + 1.0)))


@dataclass(frozen=True)
class FockSpace:
    """Tensor product of ``modes`` copies of the span of ``|0>..|dim-1>``."""

    dim: int
    modes: int = 1

    def __post_init__(self):
        if int(self.dim) < 2:
            raise DomainError(f"Fock cutoff must be >= 2, got {self.dim}")
        if int(self.modes) < 1:
            raise DomainError(f"need at least one mode, got {self.modes}")

    @property
    def total_dim(self):
        return self.dim ** self.modes

    def occupations(self):
        """Array of shape (total_dim, modes) with photon numbers per mode."""
        grids = np.indices((self.dim,) * self.modes).reshape(self.modes, -1)
        return grids.T.copy()

    def energies(self):
        """Diagonal of the total number operator."""
        return self.occupations().sum(axis=1).astype(float)


def _embed(op, space, mode):
    eye = np.eye(space.dim)
    mats = [op if m == mode else eye for m in range(space.modes)]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def annihilation(space, mode=0):
    """Truncated annihilation operator on ``mode``."""
    if not 0 <= mode < space.modes:
        raise DomainError(f"mode {mode} out of range for {space.modes} modes")
    a = np.diag(np.sqrt(np.arange(1, space.dim, dtype=float)), 1).astype(complex)
    return _embed(a, space, mode)


def number_operator(space, mode=0):
    """Number operator ``a^* a`` on ``mode``, identity on the other modes."""
    if not 0 <= mode < space.modes:
        raise DomainError(f"mode {mode} out of range for {space.modes} modes")
    return _embed(np.diag(np.arange(space.dim, dtype=float)), space, mode)


def total_number(space):
    return np.diag(space.energies())


def _as_matrix(x):
    if isinstance(x, DensityOperator):
        return x.matrix
    if isinstance(x, PureState):
        return x.projector()
    return np.asarray(x)


def _clip_eigvals(w, tol=NEG_TOL):
    if w.size and w.min() < -tol:
        raise NumericalQualityError(f"eigenvalue {w.min():.3e} below -{tol:g}")
    return np.clip(w, 0.0, None)


def psd_sqrt(a):
    """Square root of a positive semidefinite matrix (tiny negatives clipped)."""
    w, v = np.linalg.eigh(a)
    w = _clip_eigvals(w, NEG_TOL * max(1.0, abs(w).max(initial=0.0)))
    return (v * np.sqrt(w)) @ v.conj().T


@dataclass(frozen=True, eq=False)
class PureState:
    """Unit vector on a truncated Fock space.

    ``tail`` is the probability mass discarded by the cutoff before the
    amplitudes were renormalized.
    """

    vector: np.ndarray
    space: FockSpace
    tail: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=complex)
        if v.shape != (self.space.total_dim,):
            raise DomainError(f"vector length {v.shape} does not match space {self.space}")
        nrm = np.linalg.norm(v)
        if abs(nrm - 1.0) > 1e-12:
            raise NumericalQualityError(f"state not normalized (|psi| = {nrm!r})")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    def projector(self):
        return np.outer(self.vector, self.vector.conj())

    def density(self):
        return DensityOperator(self.projector(), self.space, deficiency=self.tail)

    def energy(self):
        return float(np.sum(np.abs(self.vector) ** 2 * self.space.energies()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian positive matrix with trace in ``[1 - deficiency, 1]``."""

    matrix: np.ndarray
    space: FockSpace
    deficiency: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        n = self.space.total_dim
        if m.shape != (n, n):
            raise DomainError(f"matrix shape {m.shape} does not match space {self.space}")
        if np.abs(m - m.conj().T).max(initial=0.0) > HERM_TOL * max(1.0, np.abs(m).max()):
            raise NumericalQualityError("density operator is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        w = np.linalg.eigvalsh(m)
        if w.size and w.min() < -NEG_TOL:
            raise NumericalQualityError(f"density operator has eigenvalue {w.min():.3e}")
        tr = float(np.trace(m).real)
        if tr > 1.0 + 1e-9 or tr < 1.0 - self.deficiency - 1e-9:
            raise NumericalQualityError(
                f"trace {tr!r} outside [1 - {self.deficiency:g}, 1]")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self):
        return float(np.trace(self.matrix).real)

    def energy(self):
        return float(np.real(np.diag(self.matrix)) @ self.space.energies())


# ---------------------------------------------------------------- states

def fock_state(n, space):
    v = np.zeros(space.total_dim, dtype=complex)
    v[n] = 1.0
    return PureState(v, space)


def coherent_amplitudes(alpha, dim):
    """Un-normalized coherent-state amplitudes ``e^{-|a|^2/2} a^n/sqrt(n!)``."""
    n = np.arange(dim)
    r = abs(alpha)
    if r == 0.0:
        c = np.zeros(dim, dtype=complex)
        c[0] = 1.0
        return c
    logmag = -0.5 * r * r + n * math.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def _required_coherent_dim(alpha, tol):
    d = 2
    while d < 4096:
        c = coherent_amplitudes(alpha, d)
        if 1.0 - np.sum(np.abs(c) ** 2) <= tol:
            break
        d += max(1, d // 4)
    return d


def coherent_state(xi, space, tol=TAIL_TOL):
    """Coherent state ``|xi>`` with ``a = (xi_1 + i xi_2)/sqrt(2)``.

    Parameters
    ----------
    xi : array_like, shape (2,)
        Phase-space displacement ``(x, p)``.
    space : FockSpace
        Single-mode space.
    tol : float
        Maximum tail mass tolerated before raising ``TruncationError``.
    """
    if space.modes != 1:
        raise DomainError("coherent_state is single-mode")
    xi = np.asarray(xi, dtype=float)
    alpha = (xi[0] + 1j * xi[1]) / math.sqrt(2.0)
    c = coherent_amplitudes(alpha, space.dim)
    tail = max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))
    if tail > tol:
        raise TruncationError("coherent state does not fit the cutoff", tail,
                              _required_coherent_dim(alpha, tol))
    return PureState(c / np.linalg.norm(c), space, tail=tail)


def thermal_probabilities(nbar, dim):
    n = np.arange(dim)
    if nbar == 0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p
    q = nbar / (nbar + 1.0)
    return (1.0 - q) * q ** n


def thermal_state(mean_photons, space, tol=TAIL_TOL):
    """Gibbs state ``p_n ∝ (N/(N+1))^n``, truncated and renormalized."""
    if space.modes != 1:
        raise DomainError("thermal_state is single-mode")
    if mean_photons < 0:
        raise DomainError(f"mean photon number must be >= 0, got {mean_photons}")
    p = thermal_probabilities(float(mean_photons), space.dim)
    tail = max(0.0, 1.0 - float(p.sum()))
    if tail > tol:
        q = mean_photons / (mean_photons + 1.0)
        need = int(math.ceil(math.log(tol) / math.log(q)))
        raise TruncationError("thermal state does not fit the cutoff", tail, need)
    return DensityOperator(np.diag(p / p.sum()).astype(complex), space, deficiency=tail)


def random_density(space, rng, rank=None):
    """Random density operator (Ginibre ensemble of the given rank)."""
    n = space.total_dim
    k = n if rank is None else rank
    g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real, space)


def random_pure(space, rng):
    v = rng.standard_normal(space.total_dim) + 1j * rng.standard_normal(space.total_dim)
    return PureState(v / np.linalg.norm(v), space)


# -------------------------------------------------------------- functionals

def eigvalsh_clipped(rho):
    m = _as_matrix(rho)
    if np.abs(m - m.conj().T).max(initial=0.0) > 1e-9 * max(1.0, np.abs(m).max()):
        raise DomainError("entropy requires a Hermitian input")
    return _clip_eigvals(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))


def entropy_of_probs(p, cut=1e-14):
    p = np.asarray(p, dtype=float)
    p = p[p >= cut]
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho):
    """``-tr rho log2 rho`` over eigenvalues ``>= 1e-14``."""
    return entropy_of_probs(eigvalsh_clipped(rho))


def trace_norm(a):
    a = np.asarray(a)
    if np.allclose(a, a.conj().T, atol=1e-13):
        return float(np.abs(np.linalg.eigvalsh(0.5 * (a + a.conj().T))).sum())
    return float(np.linalg.svd(a, compute_uv=False).sum())


def trace_distance(rho, sigma):
    """``(1/2) ||rho - sigma||_1``."""
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch {a.shape} vs {b.shape}")
    return 0.5 * trace_norm(a - b)


def fidelity(rho, sigma):
    """Root fidelity ``tr sqrt(sqrt(rho) sigma sqrt(rho))``."""
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch {a.shape} vs {b.shape}")
    # ||sqrt(a) sqrt(b)||_1 avoids a second matrix square root
    f = np.linalg.svd(psd_sqrt(a) @ psd_sqrt(b), compute_uv=False).sum()
    return float(min(max(f, 0.0), 1.0 + 1e-12))


def partial_trace(m, dims, keep):
    """Partial trace of ``m`` over all factors not listed in ``keep``."""
    dims = list(dims)
    n = len(dims)
    t = np.asarray(m).reshape(dims + dims)
    keep = sorted(keep)
    drop = [i for i in range(n) if i not in keep]
    for count, i in enumerate(sorted(drop, reverse=True)):
        cur = n - count
        t = np.trace(t, axis1=i, axis2=i + cur)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(dk, dk)


def gentle_measure(rho, t_op):
    """Apply the measurement operator ``T`` gently.

    Returns
    -------
    out : ndarray
        The unnormalized post-measurement operator ``sqrt(T) rho sqrt(T)``.
    bound : float
        ``2 sqrt(kappa)`` with ``kappa = 1 - tr(rho T)``; the trace-norm
        disturbance ``||rho - out||_1`` never exceeds it.
    """
    r, t = _as_matrix(rho), np.asarray(t_op)
    if np.abs(t - t.conj().T).max(initial=0.0) > 1e-10:
        raise DomainError("T must be Hermitian")
    w, v = np.linalg.eigh(0.5 * (t + t.conj().T))
    if w.min() < -NEG_TOL or w.max() > 1.0 + NEG_TOL:
        raise DomainError(f"spectrum of T outside [0, 1]: [{w.min():.3e}, {w.max():.3e}]")
    s = (v * np.sqrt(np.clip(w, 0.0, 1.0))) @ v.conj().T
    kappa = max(0.0, 1.0 - float(np.trace(r @ t).real))
    return s @ r @ s, 2.0 * math.sqrt(kappa)


# ----------------------------------------------------------- serialization

def operator_to_dict(m, space):
    m = _as_matrix(m)
    return {"dim": space.dim, "modes": space.modes,
            "re": m.real.ravel().tolist(), "im": m.imag.ravel().tolist()}


def operator_from_dict(d):
    space = FockSpace(int(d["dim"]), int(d.get("modes", 1)))
    n = space.total_dim
    m = (np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)).reshape(n, -1)
    return m, space


def operator_to_json(m, space):
    return json.dumps(operator_to_dict(m, space))


def operator_from_json(s):
    return operator_from_dict(json.loads(s))
