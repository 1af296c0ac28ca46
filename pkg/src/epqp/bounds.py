"""Closed-form program-dimension bounds, Holevo quantities and the information chain.

Bounds can be astronomically large, so every report carries ``log2_value``
(always finite for valid inputs) next to ``value`` (which may overflow to
``inf``).  Logarithms are base 2 unless a name says otherwise.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, xlogy

from .errors import DomainError, NumericalQualityError
from .fock import (FockSpace, coherent_amplitudes, entropy_of_probs, von_neumann_entropy,
                   eigvalsh_clipped)
from .nets import GC_CONSTANT

LOG2E = math.log2(math.e)


@dataclass
class BoundReport:
    """One evaluated bound.

    Attributes
    ----------
    name : str
        Formula identifier, e.g. ``"phase-rotation-lower"``.
    inputs : dict
    log2_value : float
    side : str
        ``"upper"`` or ``"lower"``.
    notes : list of str
    """

    name: str
    inputs: dict
    log2_value: float
    side: str
    notes: list = field(default_factory=list)

    @property
    def value(self):
        try:
            return 2.0 ** self.log2_value
        except OverflowError:
            return math.inf

    def to_dict(self):
        return {"name": self.name, "side": self.side, "inputs": dict(self.inputs),
                "value": self.value, "log2_value": self.log2_value, "notes": list(self.notes)}


def reports_to_csv(reports):
    """Long-format CSV: one row per report, inputs flattened into columns."""
    keys = sorted({k for r in reports for k in r.inputs})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "side", *keys, "value", "log2_value"])
    for r in reports:
        w.writerow([r.name, r.side, *[r.inputs.get(k, "") for k in keys], repr(r.value), repr(r.log2_value)])
    return buf.getvalue()


def _pos(name, v):
    if not v > 0:
        raise DomainError(f"{name} must be positive, got {v}")


def _delta(delta):
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


# ----------------------------------------------------------------- entropy

def g(n):
    """Entropy in bits of a thermal state with mean photon number ``n``."""
    if n < 0:
        raise DomainError(f"mean photon number must be >= 0, got {n}")
    return float((xlogy(n + 1.0, n + 1.0) - xlogy(n, n)) / math.log(2.0))


def gibbs_entropy_g(n):
    """``g(n)`` together with a check of ``log n <= g(n) <= log(n+1) + log e``."""
    val = g(n)
    hi = math.log2(n + 1) + LOG2E
    lo = math.log2(n) if n > 0 else -math.inf
    if not (lo - 1e-12 <= val <= hi + 1e-12):
        raise NumericalQualityError(f"g({n}) = {val} violates its elementary bounds")
    return val


@dataclass
class Ensemble:
    """Finite ensemble ``{p_i, rho_i}`` (states may be vectors or density matrices)."""

    states: list
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.states):
            raise DomainError("one weight per state is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise DomainError("weights must be a probability vector")
        dims = {np.asarray(s).shape[0] for s in self.states}
        if len(dims) != 1:
            raise DomainError("all states must have the same dimension")
        self.weights = w

    def average(self):
        n = np.asarray(self.states[0]).shape[0]
        out = np.zeros((n, n), dtype=complex)
        for p, s in zip(self.weights, self.states):
            s = np.asarray(s)
            out += p * (np.outer(s, s.conj()) if s.ndim == 1 else s)
        return out


def holevo(ens):
    """``S(sum p rho) - sum p S(rho)`` in bits."""
    avg = von_neumann_entropy(ens.average())
    cond = 0.0
    for p, s in zip(ens.weights, ens.states):
        s = np.asarray(s)
        if s.ndim == 2 and p > 0:
            cond += p * von_neumann_entropy(s)
    chi = avg - cond
    if chi < -1e-9:
        raise NumericalQualityError(f"negative Holevo quantity {chi:.3e}")
    return max(chi, 0.0)


# ---------------------------------------------------------------- tables

def energy_of_dim(d):
    """``E(d)`` for the single-mode number operator (levels ``0..d-1``)."""
    return float(d - 1)


def _amp(E, alpha, beta):
    return alpha + beta / E


def table_bound(table, row, column, d, eps=None, E=None, alpha=1.0, beta=0.0, gamma=None,
                c_tilde=1.0, K=1.0, C=1.0, theta=1.0, a=None, E_d=None):
    """Finite-dimensional program-dimension bounds and their energy-constrained versions.

    Parameters
    ----------
    table : {"upper", "lower"}
    row : int
        1-based row.
    column : {"finite", "infinite"}
        ``finite`` uses ``eps``; ``infinite`` uses ``gamma`` with ``E`` (and
        ``alpha, beta`` for upper bounds, ``E_d`` for lower bounds).
    c_tilde, K, C, theta : float
        Constants left unspecified by the source bounds (default 1).
    a : float
        Exponent of the last lower-bound row, ``a < (d^2 - 1)/2``.
    """
    if table not in ("upper", "lower") or column not in ("finite", "infinite"):
        raise DomainError("table must be upper/lower and column finite/infinite")
    if d < 2:
        raise DomainError("d must be >= 2")
    notes = []
    inf = column == "infinite"
    if inf:
        _pos("gamma", gamma)
        _pos("E", E)
    else:
        _pos("eps", eps)
    name = f"table-{table}-{row}-{column}"
    inputs = {"d": d}
    inputs.update({"E": E, "gamma": gamma} if inf else {"eps": eps})
    if table == "upper":
        if inf:
            inputs.update(alpha=alpha, beta=beta)
        amp = _amp(E, alpha, beta) if inf else None
        if row == 1:
            base = 20.25 * d * amp ** 2 / gamma ** 2 if inf else d / eps ** 2
            lv = 4 * d * d * math.log2(base)
        elif row == 2:
            ex = 9 * d * d * amp / gamma if inf else 2 * d * d / eps
            lv = ex * math.log2(d)
        elif row == 3:
            base = 4.5 * c_tilde * amp / gamma if inf else c_tilde / eps
            lv = d * d * math.log2(base)
            inputs["c_tilde"] = c_tilde
            notes.append("constant c_tilde unspecified by the source")
        elif row == 4:
            base = 4.5 * c_tilde * d * d * amp / gamma if inf else c_tilde * d * d / eps
            lv = 0.5 * (d * d - 1) * math.log2(base)
            inputs["c_tilde"] = c_tilde
            notes.append("constant c_tilde unspecified by the source")
        else:
            raise DomainError(f"no upper-bound row {row}")
        return BoundReport(name, inputs, lv, "upper", notes)
    e_d = energy_of_dim(d) if E_d is None else E_d
    if inf:
        inputs["E_d"] = e_d
        scale = E / (gamma * max(e_d, E))  # plays the role of 1/eps
    else:
        scale = 1.0 / eps
    if row == 1:
        _pos("K", K)
        lv = math.log2(K) - 0.5 * (d + 1) * math.log2(d) + 0.5 * (d - 1) * math.log2(scale)
        inputs["K"] = K
        notes.append("constant K unspecified by the source")
    elif row == 2:
        lv = 2 * math.log2(d * scale)
    elif row == 3:
        _pos("C", C)
        lead = (E - gamma * max(e_d, E)) / (3 * C * E) if inf else (1 - eps) / (3 * C)
        lv = lead * d - (2.0 / 3.0) * math.log2(d)
        inputs["C"] = C
        notes.append("constant C unspecified by the source")
    elif row == 4:
        a = 1.0 if a is None else a
        if not 0 < a < (d * d - 1) / 2:
            raise DomainError(f"exponent a must lie in (0, (d^2-1)/2), got {a}")
        if inf:
            inner = theta * E / d ** 2 / (math.sqrt(gamma) * max(e_d, E))
        else:
            inner = theta / d ** 2 / math.sqrt(eps)
        lv = 2 * a * math.log2(1 + inner)
        inputs.update(theta=theta, a=a)
        notes.append("Theta(.) placeholder: theta times the displayed argument")
    else:
        raise DomainError(f"no lower-bound row {row}")
    return BoundReport(name, inputs, lv, "lower", notes)


# ------------------------------------------------------ Gaussian-channel bounds

def gauge_covariant_upper(E, beta, eps, C=GC_CONSTANT):
    """``C E^2 (2E+2)(beta+1) / eps^6`` (default ``C`` from the eps/3 split)."""
    _pos("E", E)
    _pos("eps", eps)
    if beta < 0:
        raise DomainError("beta must be >= 0")
    lv = (math.log2(C) + 2 * math.log2(E) + math.log2(2 * E + 2) + math.log2(beta + 1)
          - 6 * math.log2(eps))
    return BoundReport("gauge-covariant-upper", {"E": E, "beta": beta, "eps": eps, "C": C}, lv, "upper")


def phase_rotation_lower(E, eps, delta):
    """``delta^2 E / (8192 e (sqrt2 E + 1)^delta) * (2 eps)^{-(1-delta)/2}``."""
    _pos("E", E)
    _pos("eps", eps)
    _delta(delta)
    lv = (2 * math.log2(delta) + math.log2(E) - math.log2(8192) - LOG2E
          - delta * math.log2(math.sqrt(2) * E + 1) - 0.5 * (1 - delta) * math.log2(2 * eps))
    return BoundReport("phase-rotation-lower", {"E": E, "eps": eps, "delta": delta}, lv, "lower")


def attenuator_lower(E, eps):
    """``2^-16 (E+1)^{1/2 - 16 sqrt eps} / sqrt(ln log2(E+1))``.

    Requires ``0 <= eps < 1/1024`` and ``E >= 2^e - 1``; ``eps = 0`` gives
    the limiting value.
    """
    if not 0.0 <= eps < 1.0 / 1024:
        raise DomainError(f"eps must lie in [0, 1/1024), got {eps}")
    if E < 2 ** math.e - 1:
        raise DomainError(f"E must be >= 2^e - 1 = {2 ** math.e - 1:.6f}, got {E}")
    lv = (-16 + (0.5 - 16 * math.sqrt(eps)) * math.log2(E + 1)
          - 0.5 * math.log2(math.log(math.log2(E + 1))))
    return BoundReport("attenuator-lower", {"E": E, "eps": eps}, lv, "lower")


def gaussian_unitary_upper(E, alpha, beta, eps, M=1):
    """``(2352 (M a)^{3/2}(sqrt a + 1)(E+1)/eps^2)^{4M^2} (2 sqrt2 (sqrt(2b)+1) sqrt(aE+b+1)/eps)^{2M}``."""
    _pos("E", E)
    _pos("eps", eps)
    if alpha < 1 or beta < 0 or M < 1:
        raise DomainError("need alpha >= 1, beta >= 0, M >= 1")
    b1 = 2352 * (M * alpha) ** 1.5 * (math.sqrt(alpha) + 1) * (E + 1) / eps ** 2
    b2 = 2 * math.sqrt(2) * (math.sqrt(2 * beta) + 1) * math.sqrt(alpha * E + beta + 1) / eps
    lv = 4 * M * M * math.log2(b1) + 2 * M * math.log2(b2)
    return BoundReport("gaussian-unitary-upper",
                       {"E": E, "alpha": alpha, "beta": beta, "eps": eps, "M": M}, lv, "upper",
                       ["displayed closed form; the statement's absolute constant is not used"])


def multimode_rotation_lower(E, eps, delta, M=1):
    """``(4 (512 e)^M)^-1 (delta^2 (E/M) / (sqrt2 E/M + 1)^delta)^M (2 eps)^{-(1-delta) M/2}``."""
    _pos("E", E)
    _pos("eps", eps)
    _delta(delta)
    if M < 1:
        raise DomainError("M must be >= 1")
    em = E / M
    lv = (-2 - M * (9 + LOG2E)
          + M * (2 * math.log2(delta) + math.log2(em) - delta * math.log2(math.sqrt(2) * em + 1))
          - 0.5 * (1 - delta) * M * math.log2(2 * eps))
    return BoundReport("multimode-rotation-lower", {"E": E, "eps": eps, "delta": delta, "M": M},
                       lv, "lower")


BOUNDS = {
    "gauge-covariant-upper": gauge_covariant_upper,
    "phase-rotation-lower": phase_rotation_lower,
    "attenuator-lower": attenuator_lower,
    "gaussian-unitary-upper": gaussian_unitary_upper,
    "multimode-rotation-lower": multimode_rotation_lower,
}


# --------------------------------------------------------- information chain

def info_chain_lower_bound(chi_ideal, E, alpha, beta, eps):
    """``chi - 16 sqrt(eps) g((alpha E + beta) / (4 eps^{3/2})) - 2`` (bits).

    Lower-bounds ``log2 d_P`` for the number-operator Hamiltonian; requires
    ``4 sqrt(eps) <= 1``.
    """
    if eps < 0 or 4 * math.sqrt(eps) > 1:
        raise DomainError(f"need 0 <= 4 sqrt(eps) <= 1, got eps={eps}")
    if eps == 0:
        return chi_ideal - 2.0
    corr = 16 * math.sqrt(eps) * g((alpha * E + beta) / (4 * eps ** 1.5))
    return chi_ideal - corr - 2.0


# ----------------------------------------------------------- ensembles

@dataclass
class AttenuatorEntropy:
    numeric: float
    analytic: float
    eta: float
    eta_bound: float
    points: int
    tail: float


def _coherent_mixture(xs, ws, dim):
    # real displacement xi -> amplitude xi / sqrt 2
    vecs = np.array([coherent_amplitudes(x / math.sqrt(2), dim) for x in xs])
    tail = float(max(0.0, 1.0 - np.min(np.sum(np.abs(vecs) ** 2, axis=1))))
    return (vecs.T * ws) @ vecs.conj(), tail


def attenuator_ensemble_entropy(sigma2, E, points=201, dim=64, tol=1e-3):
    """Entropy of the truncated-Gaussian mixture of coherent states ``|xi>``, ``|xi| <= sqrt(2E)``.

    Returns the numerical entropy, the analytic value for the untruncated
    Gaussian mixture ``g((sqrt(1 + 2 sigma^2) - 1)/2)``, and the discarded
    probability ``eta = erfc(sqrt(E)/sigma)`` with its bound ``e^{-E/sigma^2}``.
    The quadrature is accepted when doubling the points changes the entropy
    by less than ``tol`` bits.
    """
    _pos("sigma2", sigma2)
    if sigma2 > E:
        raise DomainError(f"need sigma^2 <= E, got {sigma2} > {E}")
    sig = math.sqrt(sigma2)
    lim = math.sqrt(2 * E)

    def entropy(n):
        xs = np.linspace(-lim, lim, n)
        w = np.exp(-xs ** 2 / (2 * sigma2))
        w /= w.sum()
        rho, tail = _coherent_mixture(xs, w, dim)
        return entropy_of_probs(eigvalsh_clipped(rho)), tail

    s1, t1 = entropy(points)
    s2, t2 = entropy(2 * points - 1)
    if abs(s1 - s2) > tol:
        raise NumericalQualityError(f"quadrature not converged: {s1:.6f} vs {s2:.6f}")
    eta = float(erfc(math.sqrt(E) / sig))
    analytic = g((math.sqrt(1 + 2 * sigma2) - 1) / 2)
    return AttenuatorEntropy(s2, analytic, eta, math.exp(-E / sigma2), 2 * points - 1, max(t1, t2))


def balanced_partition(n, ell):
    """Most equal split of ``n`` into ``ell`` parts, lexicographically least order."""
    q, r = divmod(n, ell)
    return (q,) * (ell - r) + (q + 1,) * r


def virtual_fock_state(n, ell, dim):
    """Symmetrized ``ell``-mode number state ``|"n">`` on cutoff ``dim`` per mode."""
    base = balanced_partition(n, ell)
    if max(base) >= dim:
        raise DomainError(f"cutoff {dim} too small for |\"{n}\"> over {ell} modes")
    perms = set(itertools.permutations(base))
    v = np.zeros(dim ** ell, dtype=complex)
    for p in perms:
        idx = 0
        for k in p:
            idx = idx * dim + k
        v[idx] = 1.0
    return v / np.linalg.norm(v)


def virtual_fock_ensemble(ell, E, c, M=1, phases=None):
    """Uniform phase orbit of ``|nu> = sum_n c_n |"n">`` on ``ell`` copies of ``M`` modes.

    For ``M > 1`` the profile ``c`` is used on every mode and the orbit runs
    over the product phase grid.  ``phases`` defaults to ``4 n_max + 1``
    points per mode.
    """
    c = np.asarray(c, dtype=complex)
    c = c / np.linalg.norm(c)
    n = np.arange(c.size)
    mean = float(np.sum(n * np.abs(c) ** 2))
    if mean > ell * E / M + 1e-9:
        raise DomainError(f"profile mean photon number {mean:.6g} exceeds ell E / M")
    n_max = int(np.flatnonzero(np.abs(c) > 0).max())
    dim = n_max // ell + 2
    basis = np.array([virtual_fock_state(k, ell, dim) for k in range(c.size)])
    nu1 = c @ basis
    tot1 = FockSpace(dim, ell).energies()
    k = 4 * n_max + 1 if phases is None else int(phases)
    grid = 2 * np.pi * np.arange(k) / k
    if M == 1:
        states = [np.exp(-1j * phi * tot1) * nu1 for phi in grid]
        return Ensemble(states, np.full(k, 1.0 / k))
    nu = nu1
    tot = tot1
    for _ in range(M - 1):
        nu = np.kron(nu, nu1)
    states = []
    for phis in itertools.product(grid, repeat=M):
        ph = np.ones(1, dtype=complex)
        for p in phis:
            ph = np.kron(ph, np.exp(-1j * p * tot))
        states.append(ph * nu)
    return Ensemble(states, np.full(len(states), 1.0 / len(states)))
