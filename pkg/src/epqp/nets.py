"""Parameter grids (epsilon-nets) over gauge-covariant and Gaussian-unitary channels.

Gauge-covariant channels ``A_mu ∘ R_phi ∘ T_lambda`` are covered by a
product of uniform one-dimensional grids.  Gaussian unitaries
``D(d) U_S`` are covered through the Bloch-Messiah parameters of ``S``
(passive generator, squeezing, passive generator) and a cubic grid on the
displacement ball; the spacing of the parameter grids is calibrated so
that rounding moves ``S`` by at most ``eps_S`` in operator norm.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import channels as chn
from .channels import EnergyBudget, GaugeCovariantParams, GaussianUnitaryParams
from .errors import DomainError, NumericalQualityError
from .processor import pet_build

DEFAULT_CAP = 10 ** 6
# each of the three gauge-covariant distance terms gets eps/3
GC_SPLIT = (288.0, 144.0, 288.0)
GC_CONSTANT = 16.0 * GC_SPLIT[0] * GC_SPLIT[1] * GC_SPLIT[2]


# ----------------------------------------------------------- gauge-covariant

def gc_resolutions(eps, E, split=GC_SPLIT):
    """Grid resolutions giving each gauge-covariant distance term ``eps/3``."""
    c_l, c_p, c_m = split
    return eps * eps / (c_l * E), eps * eps / (c_p * E), eps * eps / (c_m * (2 * E + 2))


def gc_term_bounds(E, d_lam, d_phi, d_mu):
    """The three E-constrained diamond-norm bounds (full norm, scale [0, 2])."""
    return (4 * math.sqrt(2) * math.sqrt(E * d_lam),
            4 * math.sqrt(E * d_phi),
            4 * math.sqrt(2) * math.sqrt((2 * E + 2) * d_mu))


def circular_distance(a, b):
    d = abs(a - b) % (2 * math.pi)
    return min(d, 2 * math.pi - d)


@dataclass(eq=False)
class NetSpec:
    """Grid net with its cardinality accounting.

    Attributes
    ----------
    kind : str
        ``"gauge-covariant"`` or ``"gaussian-unitary"``.
    resolutions : dict
    budget : EnergyBudget
    axes : dict
        One-dimensional grids; the net is their product (displacements are
        listed explicitly under ``"d"``).
    cardinality_bound : float
    modes : int
    """

    kind: str
    resolutions: dict
    budget: EnergyBudget
    axes: dict
    cardinality_bound: float
    modes: int = 1
    meta: dict = field(default_factory=dict)

    @property
    def size(self):
        if self.kind == "gauge-covariant":
            return len(self.axes["lam"]) * len(self.axes["phi"]) * len(self.axes["mu"])
        m = self.modes
        return (len(self.axes["h"]) ** (2 * m * m) * len(self.axes["s"]) ** m
                * len(self.axes["d"]))

    def points(self, cap=DEFAULT_CAP):
        """All net points as parameter objects."""
        if self.size > cap:
            raise DomainError(f"net has {self.size} points, above the cap {cap}")
        if self.kind == "gauge-covariant":
            return [GaugeCovariantParams(lam, phi, mu)
                    for lam, phi, mu in itertools.product(self.axes["lam"], self.axes["phi"], self.axes["mu"])]
        m = self.modes
        hs = self.axes["h"]
        out = []
        for h1 in itertools.product(hs, repeat=m * m):
            for sq in itertools.product(self.axes["s"], repeat=m):
                for h2 in itertools.product(hs, repeat=m * m):
                    s = compose_symplectic(np.array(h1), np.array(sq), np.array(h2), m)
                    out.extend(GaussianUnitaryParams(s, d) for d in self.axes["d"])
        return out

    def to_dict(self):
        return {
            "kind": self.kind, "modes": self.modes,
            "resolutions": dict(self.resolutions),
            "budget": {"E": self.budget.E, "alpha": self.budget.alpha, "beta": self.budget.beta},
            "axes": {k: np.asarray(v).tolist() for k, v in self.axes.items()},
            "cardinality_bound": self.cardinality_bound, "size": self.size,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, d):
        axes = {k: np.asarray(v, dtype=float) for k, v in d["axes"].items()}
        return cls(d["kind"], dict(d["resolutions"]), EnergyBudget(**d["budget"]), axes,
                   float(d["cardinality_bound"]), int(d.get("modes", 1)), dict(d.get("meta", {})))


def _uniform(lo, hi, step, include_hi=True):
    """Grid on ``[lo, hi]`` whose points are within ``step`` of every point."""
    k = max(1, int(math.ceil((hi - lo) / step - 1e-12)))
    return np.linspace(lo, hi, k + 1) if include_hi else lo + (hi - lo) * np.arange(k) / k


def gc_net(eps_lam, eps_phi, eps_mu, budget):
    """Product grid over ``lambda in [0, 1)``, ``phi`` on the circle and ``mu in (1, beta+1]``.

    With ``beta = 0`` the amplifier grid is the sentinel ``{1}`` (no
    amplifier).
    """
    for name, v in (("eps_lam", eps_lam), ("eps_phi", eps_phi), ("eps_mu", eps_mu)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    k_l = int(math.ceil(1.0 / eps_lam - 1e-12))
    lam = np.arange(k_l) / k_l
    k_p = int(math.ceil(2 * math.pi / eps_phi - 1e-12))
    phi = 2 * math.pi * np.arange(k_p) / k_p
    top = budget.mu_max - 1.0
    if top <= 0:
        mu = np.array([1.0])
    else:
        k_m = int(math.ceil(top / eps_mu - 1e-12))
        mu = 1.0 + top * np.arange(1, k_m + 1) / k_m
    bound = ((1 / eps_lam + 1) * (2 * math.pi / eps_phi + 1)
             * ((budget.mu_max - 1) / eps_mu + 1))
    return NetSpec("gauge-covariant", {"lam": eps_lam, "phi": eps_phi, "mu": eps_mu}, budget,
                   {"lam": lam, "phi": phi, "mu": mu}, bound)


def gc_nearest(net, target):
    ax = net.axes
    lam = ax["lam"][int(np.argmin(np.abs(ax["lam"] - target.lam)))]
    phi = ax["phi"][int(np.argmin([circular_distance(p, target.phi) for p in ax["phi"]]))]
    mu = ax["mu"][int(np.argmin(np.abs(ax["mu"] - target.mu)))]
    return GaugeCovariantParams(float(lam), float(phi), float(mu))


def gc_random(budget, rng):
    """Uniform gauge-covariant class member (``mu = 1`` when ``beta = 0``)."""
    mu = 1.0 if budget.beta == 0 else float(rng.uniform(1.0, budget.mu_max))
    return GaugeCovariantParams(float(rng.uniform(0.0, 1.0)), float(rng.uniform(0, 2 * math.pi)), mu)


# ---------------------------------------------------------- symplectic nets

def _passive_symplectic(w):
    """Real symplectic (x1,p1,...) of the passive map ``a -> w a``."""
    m = w.shape[0]
    s = np.zeros((2 * m, 2 * m))
    x, y = w.real, w.imag
    s[0::2, 0::2], s[0::2, 1::2] = x, -y
    s[1::2, 0::2], s[1::2, 1::2] = y, x
    return s


def _hermitian_from_params(p, m):
    p = np.asarray(p, dtype=float)
    h = np.diag(p[:m]).astype(complex)
    k = m
    for i in range(m):
        for j in range(i + 1, m):
            h[i, j] = p[k] + 1j * p[k + 1]
            h[j, i] = np.conj(h[i, j])
            k += 2
    return h


def _params_from_hermitian(h):
    m = h.shape[0]
    p = list(np.real(np.diag(h)))
    for i in range(m):
        for j in range(i + 1, m):
            p += [h[i, j].real, h[i, j].imag]
    return np.array(p)


def passive_symplectic(p, m):
    """Symplectic matrix of the passive unitary ``exp(-i sum h_jk a_j^* a_k)``."""
    return _passive_symplectic(sla.expm(-1j * _hermitian_from_params(p, m)))


def compose_symplectic(h1, s, h2, m):
    """``O(h1) Z(s) O(h2)`` with ``Z(s) = ⊕ diag(e^-s, e^s)``."""
    z = np.diag(np.exp(np.ravel(np.column_stack([-np.asarray(s), np.asarray(s)]))))
    return passive_symplectic(h1, m) @ z @ passive_symplectic(h2, m)


def _complex_blocks(S):
    m = S.shape[0] // 2
    s11, s12 = S[0::2, 0::2], S[0::2, 1::2]
    s21, s22 = S[1::2, 0::2], S[1::2, 1::2]
    a = 0.5 * ((s11 + s22) + 1j * (s21 - s12))
    b = 0.5 * ((s11 - s22) + 1j * (s21 + s12))
    return a, b, m


def _takagi_unitary_symmetric(w):
    """``Q`` with ``Q Q^T = w`` for a symmetric unitary ``w``."""
    x, y = w.real, w.imag
    _, o = np.linalg.eigh(x + (math.sqrt(5) - 1) / 2 * y)
    dgl = np.diag(o.T @ w @ o)
    return o @ np.diag(np.exp(0.5j * np.angle(dgl)))


def _hermitian_log(u):
    t, z = sla.schur(u, output="complex")
    ang = np.angle(np.diag(t))
    return -(z * ang) @ z.conj().T  # u = exp(-i h)


def bloch_messiah(S, tol=1e-9):
    """``S = O(h1) Z(s) O(h2)``; returns generator parameters ``(p1, s, p2)``."""
    S = np.asarray(S, dtype=float)
    a, b, m = _complex_blocks(S)
    u, c, vh = np.linalg.svd(a)
    v = vh.conj().T
    sh = np.sqrt(np.clip(c * c - 1.0, 0.0, None))
    i = 0
    while i < m:
        j = i
        while j + 1 < m and abs(c[j + 1] - c[i]) < 1e-8 * max(1.0, c[i]):
            j += 1
        blk = slice(i, j + 1)
        if sh[i] > tol:
            mb = -(u[:, blk].conj().T @ b @ v[:, blk].conj()) / sh[i]
            q = _takagi_unitary_symmetric(mb)
            u[:, blk] = u[:, blk] @ q
            v[:, blk] = v[:, blk] @ q
        i = j + 1
    s = np.arcsinh(sh)
    h1 = _hermitian_log(u)
    h2 = _hermitian_log(v.conj().T)
    p1, p2 = _params_from_hermitian(h1), _params_from_hermitian(h2)
    rec = compose_symplectic(p1, s, p2, m)
    err = np.abs(rec - S).max()
    if err > 1e-7 * max(1.0, np.abs(S).max()):
        raise NumericalQualityError(f"Bloch-Messiah reconstruction error {err:.2e}")
    return p1, s, p2


def gu_steps(eps_s, alpha, m):
    """Generator and squeezing spacings whose rounding moves ``S`` by ``<= eps_s``.

    ``||S - S'|| <= sqrt(alpha)(||dh1|| + |ds| + ||dh2||)`` with
    ``||dh|| <= (h/2) sqrt(M(2M - 1))``; each term gets ``eps_s/3``.
    """
    ra = math.sqrt(alpha)
    h_h = 2 * eps_s / (3 * ra * math.sqrt(m * (2 * m - 1)))
    h_s = 2 * eps_s / (3 * ra)
    return h_h, h_s


def _displacement_grid(radius, eps_d, m):
    if radius == 0:
        return np.zeros((1, 2 * m))
    h = 2 * eps_d / math.sqrt(2 * m)
    k = int(math.ceil((radius + eps_d) / h))
    axis = h * np.arange(-k, k + 1)
    pts = np.array(list(itertools.product(axis, repeat=2 * m)))
    nrm = np.linalg.norm(pts, axis=1)
    pts = pts[nrm <= radius + eps_d + 1e-12]
    nrm = np.linalg.norm(pts, axis=1)
    # project onto the ball (never increases the distance to a ball point)
    out = nrm > radius
    pts[out] *= (radius / nrm[out])[:, None]
    return np.unique(np.round(pts, 14), axis=0)


def gu_net(eps_s, eps_d, budget, modes=1, cap=DEFAULT_CAP):
    """Net over Gaussian unitaries with ``||S|| <= sqrt(alpha)`` and ``|d| <= sqrt(2 beta)``."""
    if modes > 3 or modes < 1:
        raise DomainError("gu_net supports 1 to 3 modes")
    if not (eps_s > 0 and eps_d > 0):
        raise DomainError("resolutions must be positive")
    m = modes
    h_h, h_s = gu_steps(eps_s, budget.alpha, m)
    hs = _uniform(-math.pi, math.pi, h_h)
    smax = 0.5 * math.log(budget.alpha)
    ss = np.array([0.0]) if smax == 0 else _uniform(0.0, smax, h_s)
    radius = math.sqrt(2 * budget.beta)
    ds = _displacement_grid(radius, eps_d, m)
    bound = ((3 * (math.sqrt(budget.alpha) + 1) / eps_s) ** (4 * m * m)
             * (1 + radius / eps_d) ** (2 * m))
    net = NetSpec("gaussian-unitary", {"S": eps_s, "d": eps_d}, budget,
                  {"h": hs, "s": ss, "d": ds}, bound, m,
                  {"h_step": float(hs[1] - hs[0]) if hs.size > 1 else 0.0,
                   "s_step": float(ss[1] - ss[0]) if ss.size > 1 else 0.0})
    if net.size > cap:
        raise DomainError(f"net would have {net.size} points, above the cap {cap}")
    return net


def _round_to(axis, v):
    v = np.atleast_1d(v)
    return axis[np.argmin(np.abs(axis[None, :] - v[:, None]), axis=1)]


def gu_nearest(net, target):
    """Net point obtained by rounding the Bloch-Messiah parameters of ``target``."""
    m = net.modes
    p1, s, p2 = bloch_messiah(target.S)
    smax = float(net.axes["s"].max())
    if s.max() > smax + 1e-9:
        raise DomainError("target squeezing exceeds the net's sqrt(alpha) cutoff")
    q1 = _round_to(net.axes["h"], p1)
    q2 = _round_to(net.axes["h"], p2)
    qs = _round_to(net.axes["s"], s)
    ds = net.axes["d"]
    dd = ds[int(np.argmin(np.linalg.norm(ds - target.d[None, :], axis=1)))]
    return GaussianUnitaryParams(compose_symplectic(q1, qs, q2, m), dd)


def gu_random(budget, rng, modes=1):
    """Random admissible Gaussian unitary (parameters drawn uniformly)."""
    m = modes
    npar = m * m
    p1 = rng.uniform(-1, 1, npar) * math.pi / max(1, m)
    p2 = rng.uniform(-1, 1, npar) * math.pi / max(1, m)
    s = rng.uniform(0.0, 0.5 * math.log(budget.alpha), m)
    d = rng.standard_normal(2 * m)
    r = math.sqrt(2 * budget.beta) * rng.uniform() ** (1 / (2 * m))
    d = d / np.linalg.norm(d) * r
    return GaussianUnitaryParams(compose_symplectic(p1, s, p2, m), d)


def gu_half_bound(E, alpha, beta, modes, dist_s, dist_d):
    """Half-norm bound ``14 (M alpha)^{3/4} sqrt(E+1) sqrt(dS) + sqrt(2) sqrt(alpha E + beta + 1) dd``."""
    return (14 * (modes * alpha) ** 0.75 * math.sqrt(E + 1) * math.sqrt(dist_s)
            + math.sqrt(2) * math.sqrt(alpha * E + beta + 1) * dist_d)


def gu_resolutions(eps, E, alpha, beta, modes):
    """``eps_S = eps^2 / (784 (M alpha)^{3/2} (E+1))`` and ``eps_d = eps / (2 sqrt2 sqrt(alpha E + beta + 1))``."""
    return (eps * eps / (784 * (modes * alpha) ** 1.5 * (E + 1)),
            eps / (2 * math.sqrt(2) * math.sqrt(alpha * E + beta + 1)))


def gaussian_channel(params, space):
    """Gaussian unitary channel built factor by factor (any symplectic ``S``)."""
    m = params.modes
    if space.modes != m:
        raise DomainError("space and parameters disagree on the number of modes")
    p1, s, p2 = bloch_messiah(params.S)
    u = _passive_unitary(p1, space) @ _squeeze_unitary(s, space) @ _passive_unitary(p2, space)
    if np.any(params.d != 0):
        u = sla.expm(chn.displacement_generator(params.d, space)) @ u
    return chn.KrausChannel(u[None], "gauss", space, space)


def _passive_unitary(p, space):
    from .fock import annihilation
    m = space.modes
    h = _hermitian_from_params(p, m)
    ops = [annihilation(space, j) for j in range(m)]
    gen = sum(h[j, k] * ops[j].conj().T @ ops[k] for j in range(m) for k in range(m))
    return sla.expm(-1j * gen)


def _squeeze_unitary(s, space):
    from .fock import annihilation
    n = space.total_dim
    gen = np.zeros((n, n), dtype=complex)
    for j, sj in enumerate(np.atleast_1d(s)):
        a = annihilation(space, j)
        gen += 0.5 * sj * (a @ a - a.conj().T @ a.conj().T)
    return sla.expm(gen)


# --------------------------------------------------------------- distances

@dataclass
class CoverResult:
    nearest: object
    bound: float
    measured: float
    terms: tuple = ()

    @property
    def passed(self):
        return self.measured <= self.bound + 1e-9


def net_cover_distance(net, target, E, space, restarts=4, seed=0, max_iter=200):
    """Nearest net point, analytic distance bound and measured lower bound.

    Both numbers are on the full diamond-norm scale ``[0, 2]``.
    """
    from .metrics import ecd_lower_bound
    if net.kind == "gauge-covariant":
        target.check_budget(net.budget)
        near = gc_nearest(net, target)
        terms = gc_term_bounds(E, abs(target.lam - near.lam), circular_distance(target.phi, near.phi),
                               abs(target.mu - near.mu))
        bound = sum(terms)
        ch1, ch2 = chn.gauge_covariant(target, space), chn.gauge_covariant(near, space)
    else:
        target.check_budget(net.budget)
        near = gu_nearest(net, target)
        b = net.budget
        ds = float(np.linalg.norm(target.S - near.S, 2))
        dd = float(np.linalg.norm(target.d - near.d))
        bound = 2 * gu_half_bound(E, b.alpha, b.beta, net.modes, ds, dd)
        terms = (ds, dd)
        ch1, ch2 = gaussian_channel(target, space), gaussian_channel(near, space)
    rep = ecd_lower_bound(ch1, ch2, E, restarts=restarts, seed=seed, max_iter=max_iter)
    return CoverResult(near, bound, rep.lower, terms)


def net_claimed_epsilon(net, E):
    """Processor error implied by the resolutions (full diamond scale)."""
    r = net.resolutions
    if net.kind == "gauge-covariant":
        t = gc_term_bounds(E, r["lam"], r["phi"], r["mu"] if net.budget.beta > 0 else 0.0)
        return sum(t)
    b = net.budget
    return 2 * gu_half_bound(E, b.alpha, b.beta, net.modes, r["S"], r["d"])


def net_to_processor(net, space, E=None, cap=DEFAULT_CAP):
    """PET processor over the net's channels; ``d_P`` equals the net size."""
    pts = net.points(cap)
    if net.kind == "gauge-covariant":
        chans = [chn.gauge_covariant(p, space) for p in pts]
        labels = [f"gc:{p.lam:.12g},{p.phi:.12g},{p.mu:.12g}" for p in pts]
    else:
        chans = [gaussian_channel(p, space) for p in pts]
        labels = [f"gu:{i}" for i in range(len(pts))]
    proc = pet_build(chans, labels)
    E = net.budget.E if E is None else E
    proc.claims = {"epsilon": net_claimed_epsilon(net, E), "E": E, "norm": "full",
                   "alpha": net.budget.alpha, "beta": net.budget.beta}
    return proc
