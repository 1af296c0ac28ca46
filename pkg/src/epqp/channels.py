"""Kraus-represented channels on truncated Fock spaces.

Every constructor returns a :class:`KrausChannel` whose ``tp_deficiency``
records how far ``sum K^* K`` is from the identity on the guard-restricted
subspace (photon numbers ``<= D - 1 - guard``).  Amplifiers and squeezers
lose trace near the cutoff; this is reported, never renormalized away.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import kernels
from .errors import DomainError, NumericalQualityError
from .fock import FockSpace, DensityOperator, annihilation, _as_matrix

MAX_KRAUS = 10_000
OMEGA1 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def default_guard(dim):
    return int(math.ceil(dim / 4))


def guarded_indices(space, guard=None):
    """Basis indices whose total photon number is at most ``D - 1 - guard``."""
    guard = default_guard(space.dim) if guard is None else guard
    cut = space.dim - 1 - guard
    if cut < 0:
        raise DomainError(f"guard {guard} leaves an empty subspace at D={space.dim}")
    return np.flatnonzero(space.energies() <= cut)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Completely positive map ``rho -> sum_k K_k rho K_k^*``.

    Attributes
    ----------
    kraus : ndarray, shape (r, dout, din)
    label : str
    in_space, out_space : FockSpace or None
        Fock structure of input/output (None for registers without a
        Hamiltonian, e.g. a bare program register).
    tp_deficiency : float
        ``|| sum K^*K - 1 ||_inf`` on the guard-restricted input subspace
        (full space when ``in_space`` is None).
    """

    kraus: np.ndarray
    label: str = ""
    in_space: FockSpace | None = None
    out_space: FockSpace | None = None
    tp_deficiency: float = field(default=float("nan"))

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] == 0:
            raise DomainError("kraus must be a non-empty stack of matrices")
        if k.shape[0] > MAX_KRAUS:
            raise DomainError(f"{k.shape[0]} Kraus operators exceed the cap {MAX_KRAUS}")
        if self.in_space is not None and self.in_space.total_dim != k.shape[2]:
            raise DomainError("input space does not match Kraus width")
        if self.out_space is not None and self.out_space.total_dim != k.shape[1]:
            raise DomainError("output space does not match Kraus height")
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)
        s = np.einsum("kij,kil->jl", k.conj(), k)
        top = np.linalg.eigvalsh(0.5 * (s + s.conj().T)).max()
        if top > 1.0 + 1e-9:
            raise NumericalQualityError(f"sum K^*K has eigenvalue {top:.12f} > 1")
        if math.isnan(self.tp_deficiency):
            idx = (guarded_indices(self.in_space) if self.in_space is not None
                   else np.arange(k.shape[2]))
            sub = s[np.ix_(idx, idx)] - np.eye(idx.size)
            object.__setattr__(self, "tp_deficiency", float(np.abs(np.linalg.eigvalsh(sub)).max()))

    @property
    def din(self):
        return self.kraus.shape[2]

    @property
    def dout(self):
        return self.kraus.shape[1]

    @property
    def rank(self):
        return self.kraus.shape[0]

    def __call__(self, rho):
        return apply(self, rho)

    def to_dict(self):
        return {
            "label": self.label, "din": self.din, "dout": self.dout,
            "in_space": None if self.in_space is None else [self.in_space.dim, self.in_space.modes],
            "out_space": None if self.out_space is None else [self.out_space.dim, self.out_space.modes],
            "kraus": [{"re": k.real.tolist(), "im": k.imag.tolist()} for k in self.kraus],
        }

    @classmethod
    def from_dict(cls, d):
        ks = np.array([np.asarray(k["re"]) + 1j * np.asarray(k["im"]) for k in d["kraus"]])
        ks = ks.reshape(len(d["kraus"]), int(d["dout"]), int(d["din"]))
        sp = lambda v: None if v is None else FockSpace(int(v[0]), int(v[1]))  # noqa: E731
        return cls(ks, d.get("label", ""), sp(d.get("in_space")), sp(d.get("out_space")))


@dataclass(frozen=True)
class EnergyBudget:
    """Input energy ``E`` and energy-limitation constants ``(alpha, beta)``."""

    E: float
    alpha: float = 1.0
    beta: float = 0.0

    def __post_init__(self):
        if not self.E > 0:
            raise DomainError(f"energy must be positive, got {self.E}")
        if self.alpha < 1:
            raise DomainError(f"alpha must be >= 1, got {self.alpha}")
        if self.beta < 0:
            raise DomainError(f"beta must be >= 0, got {self.beta}")

    @property
    def mu_max(self):
        return self.beta + 1.0


@dataclass(frozen=True)
class GaugeCovariantParams:
    """Parameters of ``A_mu ∘ R_phi ∘ T_lambda``.

    ``mu == 1`` is accepted as the sentinel for "no amplification" (the
    class with ``beta = 0``).
    """

    lam: float
    phi: float
    mu: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.mu < 1.0:
            raise DomainError(f"mu must be >= 1, got {self.mu}")

    def check_budget(self, budget):
        if self.mu > budget.mu_max + 1e-12:
            raise DomainError(f"mu={self.mu} exceeds mu_max={budget.mu_max}")

    def to_dict(self):
        return {"lam": self.lam, "phi": self.phi, "mu": self.mu}


def symplectic_form(modes):
    return np.kron(np.eye(modes), OMEGA1)


@dataclass(frozen=True, eq=False)
class GaussianUnitaryParams:
    """Symplectic matrix ``S`` (ordering x1,p1,x2,p2,...) and displacement ``d``."""

    S: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.S, dtype=float)
        d = np.asarray(self.d, dtype=float).ravel()
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise DomainError("S must be a square matrix of even size")
        if d.shape != (s.shape[0],):
            raise DomainError("displacement length must match S")
        om = symplectic_form(s.shape[0] // 2)
        if np.abs(s.T @ om @ s - om).max() > 1e-9:
            raise DomainError("S is not symplectic")
        object.__setattr__(self, "S", s)
        object.__setattr__(self, "d", d)

    @property
    def modes(self):
        return self.S.shape[0] // 2

    def check_budget(self, budget):
        if np.linalg.norm(self.S - np.eye(self.S.shape[0]), 2) > math.sqrt(budget.alpha) + 1 + 1e-9:
            raise DomainError("||S - 1|| exceeds sqrt(alpha) + 1")
        if float(self.d @ self.d) > 2 * budget.beta + 1e-12:
            raise DomainError("|d|^2 exceeds 2 beta")

    def to_dict(self):
        return {"S": self.S.ravel().tolist(), "d": self.d.tolist(), "modes": self.modes}

    @classmethod
    def from_dict(cls, d):
        m = int(d["modes"])
        return cls(np.asarray(d["S"]).reshape(2 * m, 2 * m), np.asarray(d["d"]))


# ------------------------------------------------------------ constructors

def _single_mode(space, what):
    if space.modes != 1:
        raise DomainError(f"{what} is defined on a single mode")


def identity(space, label="id"):
    return KrausChannel(np.eye(space.total_dim)[None], label, space, space)


def unitary_channel(u, space, label="U"):
    return KrausChannel(np.asarray(u)[None], label, space, space)


def attenuator(lam, space):
    """Quantum-limited attenuator ``T_lambda`` (beam splitter with vacuum)."""
    _single_mode(space, "attenuator")
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    k = kernels.attenuator_kraus(lam, space.dim)
    return KrausChannel(k, f"att:{lam!r}", space, space)


def amplifier(mu, space):
    """Quantum-limited amplifier ``A_mu``; vacuum goes to a thermal state of mean ``mu - 1``."""
    _single_mode(space, "amplifier")
    if not mu > 1.0:
        raise DomainError(f"amplifier gain must exceed 1, got {mu}")
    k = kernels.amplifier_kraus(mu, space.dim)
    return KrausChannel(k, f"amp:{mu!r}", space, space)


def rotation_unitary(phi, space):
    return np.diag(np.exp(-1j * phi * space.energies()))


def rotation(phi, space):
    """Phase rotation ``exp(-i phi N)`` (N the total number operator)."""
    return KrausChannel(rotation_unitary(phi, space)[None], f"rot:{phi!r}", space, space)


def gauge_covariant(params, space):
    """``A_mu ∘ R_phi ∘ T_lambda``."""
    ch = compose(rotation(params.phi, space), attenuator(params.lam, space))
    if params.mu > 1.0:
        ch = compose(amplifier(params.mu, space), ch)
    return relabel(ch, f"gc:{params.lam!r},{params.phi!r},{params.mu!r}")


def displacement_generator(d, space):
    """``sum_m alpha_m a_m^* - conj(alpha_m) a_m`` with ``alpha_m = (d_x + i d_p)/sqrt 2``."""
    d = np.asarray(d, dtype=float).ravel()
    if d.size != 2 * space.modes:
        raise DomainError("displacement needs two coordinates per mode")
    g = np.zeros((space.total_dim,) * 2, dtype=complex)
    for m in range(space.modes):
        a = annihilation(space, m)
        al = (d[2 * m] + 1j * d[2 * m + 1]) / math.sqrt(2.0)
        g += al * a.conj().T - np.conj(al) * a
    return g


def displacement_unitary(d, space):
    """Weyl displacement ``D(d)``, maps the vacuum to the coherent state ``|d>``."""
    return KrausChannel(sla.expm(displacement_generator(d, space))[None],
                        f"disp:{list(np.ravel(d))!r}", space, space)


def squeezer_unitary(s, space):
    """``S(s) = exp((s/2) a^2 - (s/2) a^{*2})``; symplectic matrix ``diag(e^-s, e^s)``."""
    _single_mode(space, "squeezer")
    a = annihilation(space)
    gen = 0.5 * s * (a @ a - a.conj().T @ a.conj().T)
    return KrausChannel(sla.expm(gen)[None], f"sq:{s!r}", space, space)


def _quadratic_hamiltonian(g, space):
    """Normal-ordered truncation of ``(1/2) X^T G X`` (exact matrix elements)."""
    m = space.modes
    ops = []
    for j in range(m):
        a = annihilation(space, j)
        ops += [a, a.conj().T]
    r2 = 1.0 / math.sqrt(2.0)
    t = np.zeros((2 * m, 2 * m), dtype=complex)
    for j in range(m):
        t[2 * j, 2 * j:2 * j + 2] = [r2, r2]
        t[2 * j + 1, 2 * j:2 * j + 2] = [-1j * r2, 1j * r2]
    n = space.total_dim
    # c[l, m] = sum_jk G_jk T_jl T_km  (coefficient of b_l b_m)
    c = t.T @ g @ t
    h = np.zeros((n, n), dtype=complex)
    eye = np.eye(n)
    for l in range(2 * m):
        for q in range(2 * m):
            if abs(c[l, q]) < 1e-15:
                continue
            bl, bq = ops[l], ops[q]
            if l % 2 == 0 and q % 2 == 1:
                # annihilator before creator: reorder
                prod = bq @ bl + (eye if l // 2 == q // 2 else 0.0)
            else:
                prod = bl @ bq
            h += c[l, q] * prod
    h = 0.5 * h
    return 0.5 * (h + h.conj().T)


def symplectic_rotation(phi):
    """Symplectic matrix of ``exp(-i phi N)`` on one mode."""
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, s], [-s, c]])


def symplectic_squeeze(s):
    return np.diag([math.exp(-s), math.exp(s)])


def gaussian_unitary_matrix(params, space):
    """Unitary ``D(d) exp(-i H)`` with ``H = (1/2) X^T G X``, ``S = exp(Omega G)``."""
    if space.modes != params.modes:
        raise DomainError("space and parameters disagree on the number of modes")
    if space.modes > 3:
        raise DomainError("at most three modes are supported")
    s = params.S
    w = np.linalg.eigvals(s)
    if np.any((np.abs(w.imag) < 1e-12) & (w.real < 0)):
        raise DomainError("S has an eigenvalue on the negative real axis; "
                          "split S into two factors and compose the unitaries")
    lg = sla.logm(s)
    if np.abs(np.imag(lg)).max() > 1e-9:
        raise DomainError("principal logarithm of S is not real; split S into two factors")
    lg = np.real(lg)
    g = -symplectic_form(params.modes) @ lg
    g = 0.5 * (g + g.T)
    u = sla.expm(-1j * _quadratic_hamiltonian(g, space))
    if np.any(params.d != 0):
        u = sla.expm(displacement_generator(params.d, space)) @ u
    return u


def gaussian_unitary(params, space):
    return KrausChannel(gaussian_unitary_matrix(params, space)[None], "gauss", space, space)


def euler_decompose(S):
    """Single-mode ``S = R(theta1) diag(e^-s, e^s) R(theta2)``; returns (theta1, s, theta2)."""
    u, sv, vt = np.linalg.svd(np.asarray(S, dtype=float))
    # order singular values as (e^-s, e^s)
    if sv[0] > sv[1]:
        p = np.array([[0.0, 1.0], [1.0, 0.0]])
        u, sv, vt = u @ p, sv[::-1], p @ vt
    if np.linalg.det(u) < 0:
        f = np.diag([1.0, -1.0])
        u, vt = u @ f, f @ vt
    t1 = math.atan2(u[0, 1], u[0, 0])
    t2 = math.atan2(vt[0, 1], vt[0, 0])
    return t1, math.log(sv[1]), t2


def gaussian_unitary_euler(params, space):
    """Single-mode route ``D(d) R(theta1) S(s) R(theta2)``."""
    if params.modes != 1:
        raise DomainError("Euler route is single-mode")
    t1, s, t2 = euler_decompose(params.S)
    u = (rotation_unitary(t1, space) @ squeezer_unitary(s, space).kraus[0]
         @ rotation_unitary(t2, space))
    if np.any(params.d != 0):
        u = sla.expm(displacement_generator(params.d, space)) @ u
    return KrausChannel(u[None], "gauss-euler", space, space)


def compression_map(E, delta, space):
    """``K(rho) = P rho P + tr(rho (1-P)) |0><0|`` with ``P`` onto energies ``<= E/delta``."""
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")
    cut = E / delta
    en = space.energies()
    if cut > en.max():
        raise DomainError(f"E/delta = {cut:g} exceeds the cutoff energy {en.max():g}")
    keep = en <= cut + 1e-12
    n = space.total_dim
    p = np.diag(keep.astype(complex))
    leaks = np.flatnonzero(~keep)
    ks = np.zeros((1 + leaks.size, n, n), dtype=complex)
    ks[0] = p
    ks[1 + np.arange(leaks.size), 0, leaks] = 1.0
    return KrausChannel(ks, f"compress:{cut!r}", space, space)


# ------------------------------------------------------------- plumbing

def relabel(ch, label):
    return KrausChannel(ch.kraus, label, ch.in_space, ch.out_space, ch.tp_deficiency)


def compose(phi2, phi1, recompress_over=None):
    """``phi2 ∘ phi1``."""
    if phi2.din != phi1.dout:
        raise DomainError(f"cannot compose: {phi2.din} != {phi1.dout}")
    r = phi2.rank * phi1.rank
    if r > MAX_KRAUS:
        if recompress_over is None:
            raise DomainError(f"composition needs {r} Kraus operators (cap {MAX_KRAUS})")
    k = np.einsum("aij,bjk->abik", phi2.kraus, phi1.kraus).reshape(-1, phi2.dout, phi1.din)
    k = _drop_zero(k)
    if recompress_over is not None and k.shape[0] > recompress_over:
        k = _minimal_kraus(k)
    return KrausChannel(k, f"{phi2.label}∘{phi1.label}", phi1.in_space, phi2.out_space)


def _drop_zero(k, tol=1e-15):
    nz = np.abs(k).reshape(k.shape[0], -1).max(axis=1) > tol
    return k[nz] if nz.any() else k[:1]


def tensor(phia, phib):
    r = phia.rank * phib.rank
    if r > MAX_KRAUS:
        raise DomainError(f"tensor product needs {r} Kraus operators (cap {MAX_KRAUS})")
    k = np.einsum("aij,bkl->abikjl", phia.kraus, phib.kraus)
    k = k.reshape(r, phia.dout * phib.dout, phia.din * phib.din)

    def joint(sa, sb):
        if sa is None or sb is None or sa.dim != sb.dim:
            return None
        return FockSpace(sa.dim, sa.modes + sb.modes)

    return KrausChannel(k, f"{phia.label}⊗{phib.label}",
                        joint(phia.in_space, phib.in_space), joint(phia.out_space, phib.out_space))


def apply(ch, rho):
    m = _as_matrix(rho)
    out = kernels.kraus_apply(ch.kraus, m)
    return 0.5 * (out + out.conj().T)


def apply_dual(ch, x):
    """Heisenberg picture ``sum_k K^* X K``."""
    return np.einsum("kji,jl,klm->im", ch.kraus.conj(), x, ch.kraus)


def choi(ch):
    """Unnormalized Choi matrix ``sum_k vec(K_k) vec(K_k)^*`` (row-major vec)."""
    v = ch.kraus.reshape(ch.rank, -1)
    return v.T @ v.conj()


def _minimal_kraus(k, tol=1e-13):
    # SVD of the stacked vec(K_k): the Choi matrix is v^T conj(v)
    r, dout, din = k.shape
    v = k.reshape(r, -1)
    _, s, wh = np.linalg.svd(v, full_matrices=False)
    keep = s * s > tol * max(1.0, float(s[0] * s[0]))
    return (s[keep, None] * wh[keep]).reshape(-1, dout, din)


def recompress(ch, tol=1e-13):
    """Minimal Kraus representation from the Choi eigendecomposition."""
    return KrausChannel(_minimal_kraus(ch.kraus, tol), ch.label, ch.in_space, ch.out_space)


def choi_distance(ch1, ch2):
    """Half trace distance of the normalized Choi states (lower-bounds the diamond half-norm)."""
    if (ch1.din, ch1.dout) != (ch2.din, ch2.dout):
        raise DomainError("channel dimensions differ")
    d = choi(ch1) - choi(ch2)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(d)).sum()) / ch1.din


def restrict_channel(ch, dim_in, dim_out=None):
    """Compress a single-or-multi-mode channel onto lower cutoffs (input and output)."""
    si, so = ch.in_space, ch.out_space
    dim_out = dim_in if dim_out is None else dim_out
    ni = FockSpace(dim_in, si.modes)
    no = FockSpace(dim_out, so.modes)
    ii = np.flatnonzero(np.all(si.occupations() < dim_in, axis=1))
    oo = np.flatnonzero(np.all(so.occupations() < dim_out, axis=1))
    k = ch.kraus[:, oo][:, :, ii]
    return KrausChannel(_drop_zero(k), ch.label, ni, no)


# ---------------------------------------------------------- energy limits

@dataclass(frozen=True)
class EnergyLimitVerdict:
    passed: bool
    margin: float
    subspace_dim: int


def energy_limit_check(ch, budget, guard=None, tol=1e-8):
    """Check ``Phi^*(H) <= alpha H + beta`` on the guard-restricted subspace.

    The verdict's ``margin`` is the smallest eigenvalue of
    ``alpha H + beta - sum K^* H K`` restricted to photon numbers
    ``<= D - 1 - guard``; the check passes when it is ``>= -tol``.
    """
    if ch.in_space is None or ch.out_space is None:
        raise DomainError("energy check needs Fock structure on both sides")
    idx = guarded_indices(ch.in_space, guard)
    hout = ch.out_space.energies()
    dual = np.einsum("kji,j,kjm->im", ch.kraus.conj(), hout, ch.kraus)
    a = np.diag(budget.alpha * ch.in_space.energies() + budget.beta) - dual
    a = a[np.ix_(idx, idx)]
    margin = float(np.linalg.eigvalsh(0.5 * (a + a.conj().T)).min())
    return EnergyLimitVerdict(margin >= -tol, margin, int(idx.size))


def as_density(m, space, deficiency=0.0):
    return DensityOperator(m, space, deficiency)
