"""Programmable processors: a channel on ``system (x) program -> system``.

Joint indices are system-major: basis state ``|i>|p>`` sits at
``i * d_P + p``.  Program states are stored as density matrices on the
program register.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .channels import (KrausChannel, EnergyBudget, _minimal_kraus, _drop_zero,
                       choi_distance, unitary_channel)
from .errors import DomainError, NumericalQualityError
from .fock import FockSpace, trace_distance, psd_sqrt

EXACT_TOL = 1e-9
ORTHO_TOL = 1e-6
LEMMING_ETA_FLOOR = 1e-6


def _as_program(p, d_p):
    p = np.asarray(p, dtype=complex)
    if p.ndim == 1:
        p = np.outer(p, p.conj())
    if p.shape != (d_p, d_p):
        raise DomainError(f"program has shape {p.shape}, expected ({d_p}, {d_p})")
    if abs(np.trace(p).real - 1.0) > 1e-9 or np.linalg.eigvalsh(0.5 * (p + p.conj().T)).min() < -1e-10:
        raise DomainError("program is not a density matrix")
    return p


def _unitary_channel_distance(u, v):
    # Choi-state proxy for the distance between unitary channels
    return float(np.sqrt(max(0.0, 1.0 - abs(np.trace(u.conj().T @ v) / u.shape[0]) ** 2)))


@dataclass(eq=False)
class ProcessorSpec:
    """Processor channel with its program table.

    Attributes
    ----------
    channel : KrausChannel
        Kraus operators of shape (r, dout, din * d_P).
    programs : dict
        Label -> program density matrix on the program register.
    d_P : int
    in_space, out_space : FockSpace
    claims : dict
        Error claims together with the budget they refer to, e.g.
        ``{"epsilon": 0.1, "E": 1.0, "norm": "diamond"}``.
    unitaries : dict
        Optional label -> unitary matrix of the target, used to pick programs.
    """

    channel: KrausChannel
    programs: dict
    d_P: int
    in_space: FockSpace
    out_space: FockSpace
    claims: dict = field(default_factory=dict)
    unitaries: dict = field(default_factory=dict)
    selector: Callable | None = None

    def __post_init__(self):
        if self.channel.din != self.in_space.total_dim * self.d_P:
            raise DomainError("processor width does not match system and program dimensions")
        if self.channel.dout != self.out_space.total_dim:
            raise DomainError("processor height does not match the output space")
        self.programs = {k: _as_program(v, self.d_P) for k, v in self.programs.items()}

    @property
    def din(self):
        return self.in_space.total_dim

    def implemented(self, program, label=None):
        """Channel ``rho -> P(rho (x) program)`` (program: label, vector or density)."""
        if isinstance(program, str):
            label = program if label is None else label
            program = self.programs[program]
        p = _as_program(program, self.d_P)
        w, v = np.linalg.eigh(0.5 * (p + p.conj().T))
        keep = w > 1e-14
        k = self.channel.kraus.reshape(self.channel.rank, self.channel.dout, self.din, self.d_P)
        # K_j (1 (x) sqrt(w_q) |v_q>)
        out = np.einsum("kois,sq->kqoi", k, v[:, keep] * np.sqrt(w[keep]))
        out = out.reshape(-1, self.channel.dout, self.din)
        return KrausChannel(_drop_zero(out), label or "implemented", self.in_space, self.out_space)

    def program_for(self, u):
        """Program for the unitary matrix ``u`` (selector, else closest tabulated target)."""
        if self.selector is not None:
            return self.selector(u)
        if not self.unitaries:
            raise DomainError("processor has no unitary targets to select a program from")
        best = min(self.unitaries, key=lambda k: _unitary_channel_distance(self.unitaries[k], u))
        return self.programs[best]

    def to_dict(self):
        return {
            "channel": self.channel.to_dict(),
            "d_P": self.d_P,
            "in_space": [self.in_space.dim, self.in_space.modes],
            "out_space": [self.out_space.dim, self.out_space.modes],
            "programs": {k: {"re": v.real.tolist(), "im": v.imag.tolist()} for k, v in self.programs.items()},
            "unitaries": {k: {"re": v.real.tolist(), "im": v.imag.tolist()} for k, v in self.unitaries.items()},
            "claims": dict(self.claims),
        }

    @classmethod
    def from_dict(cls, d):
        cplx = lambda m: np.asarray(m["re"]) + 1j * np.asarray(m["im"])  # noqa: E731
        return cls(
            KrausChannel.from_dict(d["channel"]),
            {k: cplx(v) for k, v in d["programs"].items()},
            int(d["d_P"]),
            FockSpace(*d["in_space"]),
            FockSpace(*d["out_space"]),
            dict(d.get("claims", {})),
            {k: cplx(v) for k, v in d.get("unitaries", {}).items()},
        )


def _target_unitary(ch):
    return ch.kraus[0] if ch.rank == 1 else None


# ------------------------------------------------------------------ PET

def pet_build(targets, labels=None):
    """Processor-encoding technique: ``P(rho (x) pi) = sum_i Phi_i(rho) <i|pi|i>``."""
    targets = list(targets)
    if not targets:
        raise DomainError("PET needs at least one target channel")
    t0 = targets[0]
    for t in targets:
        if (t.din, t.dout) != (t0.din, t0.dout):
            raise DomainError("PET targets must share input and output dimensions")
    if t0.in_space is None or t0.out_space is None:
        raise DomainError("PET targets need Fock structure")
    labels = [t.label or f"t{i}" for i, t in enumerate(targets)] if labels is None else list(labels)
    if len(set(labels)) != len(labels):
        labels = [f"{lab}#{i}" for i, lab in enumerate(labels)]
    k_p = len(targets)
    ks = []
    for i, t in enumerate(targets):
        bra = np.zeros(k_p)
        bra[i] = 1.0
        ks.append(np.einsum("koi,p->koip", t.kraus, bra).reshape(t.rank, t.dout, t.din * k_p))
    ch = KrausChannel(np.concatenate(ks), f"PET[{k_p}]", None, None)
    programs = {lab: np.diag(np.eye(k_p)[i]) for i, lab in enumerate(labels)}
    unitaries = {lab: _target_unitary(t) for lab, t in zip(labels, targets) if t.rank == 1}
    return ProcessorSpec(ch, programs, k_p, t0.in_space, t0.out_space,
                         {"epsilon": 0.0, "E": math.inf}, unitaries)


def controlled_unitary_processor(unitaries, space, labels=None):
    """``tr_P [CU (rho (x) pi) CU^*]`` with ``CU = sum_i U_i (x) |i><i|``.

    Programs are the basis states of the control register.
    """
    us = [np.asarray(u, dtype=complex) for u in unitaries]
    n = len(us)
    d = space.total_dim
    cu = np.zeros((d * n, d * n), dtype=complex)
    for i, u in enumerate(us):
        proj = np.zeros((n, n))
        proj[i, i] = 1.0
        cu += np.kron(u, proj)
    # Kraus operators (1 (x) <j|) CU of the traced-out control
    ks = cu.reshape(d, n, d * n).transpose(1, 0, 2)
    ch = KrausChannel(_drop_zero(ks), f"CU[{n}]", None, None)
    labels = [f"U{i}" for i in range(n)] if labels is None else list(labels)
    return ProcessorSpec(ch, {lab: np.diag(np.eye(n)[i]) for i, lab in enumerate(labels)}, n,
                         space, space, {"epsilon": 0.0, "E": math.inf}, dict(zip(labels, us)))


@dataclass
class NoProgrammingReport:
    gram: np.ndarray
    residuals: list
    d_P: int
    passed: bool
    dimension_ok: bool


def _distinct_up_to_phase(u, v, tol=1e-9):
    return _unitary_channel_distance(u, v) > tol


def no_programming_check(proc, unitaries, labels=None, tol=ORTHO_TOL):
    """Gram matrix of the programs of exactly implemented unitaries.

    ``gram[i, j]`` is the fidelity between the programs of targets ``i`` and
    ``j``; programs of unitaries that differ beyond a phase must be
    orthogonal, so the check passes when those entries are ``<= tol``.
    """
    us = [np.asarray(u, dtype=complex) for u in unitaries]
    progs = ([proc.programs[lab] for lab in labels] if labels is not None
             else [proc.program_for(u) for u in us])
    residuals = []
    for u, p in zip(us, progs):
        r = choi_distance(proc.implemented(p), unitary_channel(u, proc.in_space))
        residuals.append(r)
        if r > EXACT_TOL:
            raise NumericalQualityError(f"processor is not exact on a target (residual {r:.3e})")
    n = len(us)
    gram = np.eye(n)
    ok = True
    for i in range(n):
        for j in range(i + 1, n):
            f = np.linalg.svd(psd_sqrt(progs[i]) @ psd_sqrt(progs[j]), compute_uv=False).sum()
            gram[i, j] = gram[j, i] = f
            if _distinct_up_to_phase(us[i], us[j]) and f > tol:
                ok = False
    n_distinct = n
    return NoProgrammingReport(gram, residuals, proc.d_P, ok, proc.d_P >= n_distinct)


# ----------------------------------------------------------------- lift

def _sorted_levels(space):
    return np.argsort(space.energies(), kind="stable")


def energy_rank(space, cut):
    """Number of basis states with energy ``<= cut``."""
    return int(np.count_nonzero(space.energies() <= cut + 1e-12))


@dataclass(eq=False)
class LiftedProcessor:
    """``P = P_d ∘ (K (x) id_P)`` with the compression ``K`` at ``delta = eps^2``."""

    processor: ProcessorSpec
    base: ProcessorSpec
    gamma: float
    delta: float
    E: float
    budget: EnergyBudget

    def lift_unitary(self, u):
        """``U_d``: unitary extension of the polar isometry of ``Pi_d U P_delta``.

        Returns ``(U_d, polar_gap)`` where ``polar_gap`` is the operator-norm
        distance between the isometry and ``Pi_d U P_delta``.
        """
        space = self.processor.in_space
        d = self.base.in_space.total_dim
        lv = _sorted_levels(space)
        hd = lv[:d]
        k = energy_rank(space, self.E / self.delta)
        a = np.asarray(u)[np.ix_(hd, hd[:k])]
        w, s, vh = np.linalg.svd(a, full_matrices=False)
        if s.min() < 1e-8:
            raise NumericalQualityError(
                f"polar decomposition is rank deficient (smallest singular value {s.min():.2e});"
                " the unitary is too far from energy-limited")
        vd = w @ vh
        gap = float(np.linalg.norm(vd - a, 2))
        if k == d:
            return vd, gap
        q = sla.null_space(vd.conj().T)
        b = q.conj().T @ np.asarray(u)[np.ix_(hd, hd[k:])]
        bw, _, bvh = np.linalg.svd(b)
        return np.hstack([vd, q @ (bw @ bvh)]), gap

    def program(self, u):
        ud, _ = self.lift_unitary(u)
        return self.base.program_for(ud)


def lift_processor(p_d, E, eps, budget, space):
    """Lift a processor on the ``d`` lowest levels to the cutoff space ``space``.

    The compression keeps energies ``<= E / eps^2`` and routes the rest to
    the vacuum; ``P_d`` then acts on the ``d`` lowest-energy basis states.
    The claimed error is ``gamma = 4.5 eps (alpha + beta/E)``.
    """
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    delta = eps * eps
    d = p_d.in_space.total_dim
    need = energy_rank(space, E / delta ** 2)
    if d < need:
        raise DomainError(f"P_d acts on {d} levels but rank(H <= E/eps^4) = {need}")
    if d > space.total_dim:
        raise DomainError(f"d = {d} exceeds the cutoff dimension {space.total_dim}")
    n = space.total_dim
    lv = _sorted_levels(space)
    hd = lv[:d]
    pos = np.empty(n, dtype=int)
    pos[lv] = np.arange(n)
    en = space.energies()
    keep = np.flatnonzero(en <= E / delta + 1e-12)
    leaks = np.flatnonzero(en > E / delta + 1e-12)
    # compression Kraus operators as maps into the d-level register
    ck = np.zeros((1 + leaks.size, d, n), dtype=complex)
    ck[0, pos[keep], keep] = 1.0
    ck[1 + np.arange(leaks.size), pos[lv[0]], leaks] = 1.0
    dp = p_d.d_P
    ak = p_d.channel.kraus  # (r, d, d*dp)
    embed = np.zeros((n, d))
    embed[hd, np.arange(d)] = 1.0
    cp = np.einsum("cij,pq->cipjq", ck, np.eye(dp)).reshape(ck.shape[0], d * dp, n * dp)
    ks = np.einsum("oa,kab,cbm->kcom", embed, ak, cp).reshape(-1, n, n * dp)
    ch = KrausChannel(_drop_zero(ks), f"lift[{p_d.channel.label}]", None, None)
    eps_d = float(p_d.claims.get("epsilon", eps))
    gamma = 4.5 * eps_d * (budget.alpha + budget.beta / E)
    lifted = ProcessorSpec(ch, dict(p_d.programs), dp, space, space,
                           {"epsilon": gamma, "E": E, "alpha": budget.alpha, "beta": budget.beta,
                            "base_epsilon": eps_d, "delta": delta})
    out = LiftedProcessor(lifted, p_d, gamma, delta, E, budget)
    lifted.selector = out.program
    return out


def restrict_processor(proc, d, E, gamma):
    """``P' = K ∘ P ∘ (V (x) id_P)`` on the ``d`` lowest-energy levels.

    Returns the restricted processor; its claim is
    ``eps = gamma max(E(d), E) / E`` with ``E(d)`` the largest energy among
    the embedded levels.
    """
    space = proc.in_space
    if d > space.total_dim or d < 1:
        raise DomainError(f"d = {d} exceeds the cutoff rank {space.total_dim}")
    lv = _sorted_levels(space)
    hd = lv[:d]
    e_d = float(space.energies()[hd].max())
    n = space.total_dim
    dp = proc.d_P
    no = proc.out_space.total_dim
    lo = _sorted_levels(proc.out_space)[:d]
    out_rest = np.setdiff1d(np.arange(no), lo)
    # compression onto the embedded levels, leakage to the ground state
    kk = np.zeros((1 + out_rest.size, d, no), dtype=complex)
    kk[0, np.arange(d), lo] = 1.0
    kk[1 + np.arange(out_rest.size), 0, out_rest] = 1.0
    pk = proc.channel.kraus.reshape(proc.channel.rank, no, n, dp)[:, :, hd, :].reshape(-1, no, d * dp)
    ks = np.einsum("cab,kbm->ckam", kk, pk).reshape(-1, d, d * dp)
    ks = _drop_zero(ks)
    if ks.shape[0] > d * d * dp:
        ks = _minimal_kraus(ks)
    sub = FockSpace(d, 1) if space.modes == 1 else None
    if sub is None:
        raise DomainError("restriction is implemented for single-mode processors")
    eps = gamma * max(e_d, E) / E
    ch = KrausChannel(ks, f"restrict[{proc.channel.label}]", None, None)

    def select(u_d):
        u = np.eye(n, dtype=complex)
        u[np.ix_(hd, hd)] = u_d
        return proc.program_for(u)

    return ProcessorSpec(ch, dict(proc.programs), dp, sub, sub,
                         {"epsilon": eps, "E": math.inf, "E_d": e_d, "gamma": gamma}, selector=select)


# ---------------------------------------------------------- replication

def stinespring_dilate(ch):
    """Isometry ``V|psi> = sum_j K_j|psi> (x) |j>``, shape (dout * r, din)."""
    return ch.kraus.transpose(1, 0, 2).reshape(ch.dout * ch.rank, ch.din)


def _recovery_kraus(v, d_sys, d_p, r, psi_p):
    """Kraus operators of ``M(rho) = tr_H W(|0><0| (x) rho)`` (maps Q -> P)."""
    # V* restricted to the ground state of the output system
    vs = v.conj().T.reshape(d_sys, d_p, d_sys, r)  # (h, p, o, q)
    part1 = vs[:, :, 0, :]  # one Kraus operator per system index h
    # rejected weight tr[(1 - Pi)(|0><0| (x) rho)] = tr[B rho]
    v0 = v.reshape(d_sys, r, d_sys * d_p)[0]  # (q, in)
    b = np.eye(r) - v0 @ v0.conj().T
    w, u = np.linalg.eigh(0.5 * (b + b.conj().T))
    keep = w > 1e-14
    part2 = np.einsum("p,mq->mpq", psi_p, (u[:, keep] * np.sqrt(w[keep])).conj().T)
    return np.concatenate([part1, part2])


@dataclass(eq=False)
class Replication:
    """Replicated processor ``P_hat`` together with the single-use pieces."""

    processor: KrausChannel
    single: KrausChannel
    recovery: KrausChannel
    program: np.ndarray
    ell: int
    space: FockSpace
    epsilon: float
    epsilon_prime: float

    @property
    def bound(self):
        return 2 * self.ell * self.epsilon_prime

    def implemented(self):
        """``rho -> P_hat(rho (x) psi_U)`` on the ``ell``-fold system."""
        d = self.space.total_dim ** self.ell
        k = self.processor.kraus.reshape(self.processor.rank, d, d, self.program.size)
        out = np.einsum("koip,p->koi", k, self.program)
        return KrausChannel(_drop_zero(out), f"rep{self.ell}", None, None)


def _is_pure(psi):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim == 1:
        return psi / np.linalg.norm(psi)
    w, v = np.linalg.eigh(0.5 * (psi + psi.conj().T))
    if w[-1] < 1 - 1e-9:
        raise DomainError("replication needs a pure program state")
    return v[:, -1]


def replication_build(proc, u, psi_u, ell, E, beta_p, epsilon):
    """Reuse one program state for ``ell`` sequential applications.

    Parameters
    ----------
    proc : ProcessorSpec
    u : ndarray
        Target unitary (used for the claimed bound only).
    psi_u : ndarray
        Pure program state (vector or rank-one density).
    ell : int
    E, beta_p : float
        Energy budget and the additive constant of the inverse unitary.
    epsilon : float
        Single-use error ``(1/2)||P(. (x) psi_U) - U||^E``.

    Returns
    -------
    Replication
        With claimed multiply constrained bound ``2 ell eps'``,
        ``eps' = (1 + beta'/E) sqrt(2 eps)``.
    """
    if ell < 1:
        raise DomainError("ell must be >= 1")
    psi = _is_pure(psi_u)
    if np.asarray(u).shape != (proc.din, proc.din):
        raise DomainError("target unitary has the wrong shape")
    d, dp, r = proc.din, proc.d_P, proc.channel.rank
    v = stinespring_dilate(proc.channel)  # (d*r, d*dp)
    mk = _recovery_kraus(v, d, dp, r, psi)
    rec = KrausChannel(_minimal_kraus(mk), "M", None, None)
    # P' = (id (x) M) ∘ V : H P -> H P
    vv = v.reshape(d, r, d * dp)
    pk = np.einsum("mpq,oqi->mopi", rec.kraus, vv).reshape(rec.rank, d * dp, d * dp)
    single = KrausChannel(_minimal_kraus(pk), "P'", None, None)
    # sequential use on copies 1..ell, keeping a minimal Kraus form
    cur = single.kraus  # acts on (H_1, P)
    for j in range(2, ell + 1):
        dj = d ** (j - 1)
        # cur: (r, dj*dp, dj*dp) on (H_1..H_{j-1}, P); extend with H_j in the middle
        a = cur.reshape(-1, dj, dp, dj, dp)
        a = np.einsum("kaqbs,xy->kaxqbys", a, np.eye(d)).reshape(-1, dj * d * dp, dj * d * dp)
        b = single.kraus.reshape(-1, d, dp, d, dp)
        b = np.einsum("mxqys,ab->maxqbys", b, np.eye(dj)).reshape(-1, dj * d * dp, dj * d * dp)
        cur = _minimal_kraus(np.einsum("mij,kjl->mkil", b, a).reshape(-1, dj * d * dp, dj * d * dp))
    # trace out the program register
    dl = d ** ell
    fin = cur.reshape(-1, dl, dp, dl * dp).transpose(0, 2, 1, 3).reshape(-1, dl, dl * dp)
    fin = _minimal_kraus(fin)
    eps_p = (1.0 + beta_p / E) * math.sqrt(2.0 * max(epsilon, 0.0))
    return Replication(KrausChannel(fin, f"P_hat[{ell}]", None, None), single, rec, psi, ell,
                       proc.in_space, float(epsilon), eps_p)


def environment_state(proc, u, psi_p, witness):
    """``phi_Q`` proportional to ``(<U psi| (x) 1_Q) V |psi>|psi_P>`` at an entangled input.

    ``witness`` is the amplitude matrix of the input on system (x) reference.
    """
    d, dp, r = proc.din, proc.d_P, proc.channel.rank
    v = stinespring_dilate(proc.channel).reshape(d, r, d, dp)
    x = np.asarray(witness, dtype=complex)
    x = x / np.linalg.norm(x)
    psi = _is_pure(psi_p)
    out = np.einsum("oqip,ia,p->oqa", v, x, psi)  # (o, q, ref)
    ux = np.asarray(u) @ x  # (o, ref)
    phi = np.einsum("oa,oqa->q", ux.conj(), out)
    nrm = np.linalg.norm(phi)
    if nrm < 1e-14:
        raise NumericalQualityError("environment overlap vanishes at this witness")
    return phi / nrm


def memory_recovery_error(rep, phi_q):
    """``(1/2)||M(phi_Q) - psi_P||_1``."""
    rho = np.outer(phi_q, phi_q.conj())
    out = np.einsum("kpq,qs,kts->pt", rep.recovery.kraus, rho, rep.recovery.kraus.conj())
    return 0.5 * float(np.abs(np.linalg.eigvalsh(out - np.outer(rep.program, rep.program.conj()))).sum())


# ------------------------------------------------------------- lemming

@dataclass
class LemmingResult:
    sigma_prime: np.ndarray
    cutoff: float
    dist_sigma: float
    dist_rho: float
    energy: float
    eta: float

    @property
    def passed(self):
        r = math.sqrt(self.eta)
        return (self.dist_sigma <= 3 * r + 1e-12 and self.dist_rho <= 4 * r + 1e-12
                and self.energy <= self.cutoff * (1 + 1e-12) + 1e-12)


def lemming_compress(rho, sigma, E, eta, space):
    """Compress ``sigma`` onto energies ``<= E/eta``, routing the rest to the vacuum.

    Preconditions: ``(1/2)||rho - sigma||_1 <= eta`` and ``tr rho H <= E``.
    The result reports both distances to compare with ``3 sqrt(eta)`` and
    ``4 sqrt(eta)``.
    """
    if eta < LEMMING_ETA_FLOOR:
        raise DomainError(f"eta = {eta:g} is below the floor {LEMMING_ETA_FLOOR:g}")
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    en = space.energies()
    if trace_distance(rho, sigma) > eta + 1e-9:
        raise DomainError("(1/2)||rho - sigma||_1 exceeds eta")
    if float(np.real(np.diag(rho)) @ en) > E + 1e-9:
        raise DomainError("tr(rho H) exceeds E")
    cut = E / eta
    keep = en <= cut + 1e-12
    sp = sigma * np.outer(keep, keep)
    leak = float(np.real(np.diag(sigma)[~keep].sum()))
    sp[0, 0] += leak
    return LemmingResult(sp, cut, trace_distance(sigma, sp), trace_distance(rho, sp),
                         float(np.real(np.diag(sp)) @ en), eta)
