"""Seeded desk-scale experiments shared by the command line and the test suite.

Every function takes explicit parameters plus a ``seed`` and returns a
plain dict of results with a ``passed`` verdict, so that a report can be
replayed from its configuration alone.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from . import bounds as bnd
from . import channels as chn
from .channels import EnergyBudget, GaugeCovariantParams, KrausChannel
from .errors import DomainError
from .fock import FockSpace, gentle_measure, random_density, thermal_state, trace_norm
from .metrics import ecd_lower_bound, multi_ecd_lower_bound, rotation_distance_exact
from .nets import (circular_distance, gc_net, gc_nearest, gc_random, gc_resolutions,
                   net_cover_distance)
from .processor import (controlled_unitary_processor, lemming_compress, lift_processor,
                        no_programming_check, pet_build, replication_build)


# ------------------------------------------------------------- gentle

def random_effect(n, rng):
    """Random operator ``0 <= T <= 1`` with uniform spectrum and Haar-like eigenbasis."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return (q * rng.uniform(0.0, 1.0, n)) @ q.conj().T


def gentle_suite(trials=1000, dims=(4, 8, 16), seed=0, tol=1e-8):
    """Check ``||rho - sqrt(T) rho sqrt(T)||_1 <= 2 sqrt(1 - tr rho T)`` on random pairs."""
    rng = np.random.default_rng(seed)
    worst, violations = -math.inf, 0
    for i in range(trials):
        n = dims[i % len(dims)]
        rho = random_density(FockSpace(n), rng).matrix
        t = random_effect(n, rng)
        out, bound = gentle_measure(rho, t)
        lhs = trace_norm(rho - out)
        worst = max(worst, lhs - bound)
        violations += lhs > bound + tol
    return {"trials": trials, "violations": int(violations), "worst_excess": worst,
            "passed": violations == 0}


# ----------------------------------------------------------------- PET

def pet_experiment(angles=(0.0, 0.4, 1.1, 2.0, 3.5), D=16):
    """PET over phase rotations plus the No-Programming Gram matrix of a controlled-unitary processor."""
    space = FockSpace(D)
    targets = [chn.rotation(a, space) for a in angles]
    proc = pet_build(targets)
    res = [chn.choi_distance(proc.implemented(lab), t) for lab, t in zip(proc.programs, targets)]
    us = [chn.rotation_unitary(a, space) for a in angles]
    cu = controlled_unitary_processor(us, space)
    npc = no_programming_check(cu, us)
    gram_dev = float(np.abs(npc.gram - np.eye(len(us))).max())
    return {"d_P": proc.d_P, "max_residual": max(res), "gram_deviation": gram_dev,
            "passed": bool(max(res) <= 1e-10 and proc.d_P == len(angles) and gram_dev <= 1e-6)}


# ---------------------------------------------------------------- lift

def rotation_net_epsilon(points, d):
    """Half-norm error of the ``points``-element rotation grid on ``d`` levels (no energy limit).

    The worst target sits halfway between grid angles, ``pi/points`` away;
    the diamond half-norm of ``R_t`` vs the identity on levels ``0..d-1`` is
    ``sin(min(pi/2, t (d-1)/2))``.
    """
    t = math.pi / points
    return math.sin(min(math.pi / 2, t * (d - 1) / 2))


def lift_experiment(E=1.0, d=8, points=8, D=32, targets=10, seed=0, restarts=8):
    """Lift a PET rotation processor on ``d`` levels to cutoff ``D`` and measure it."""
    rng = np.random.default_rng(seed)
    sub = FockSpace(d)
    grid = 2 * math.pi * np.arange(points) / points
    p_d = pet_build([chn.rotation(a, sub) for a in grid], [f"r{j}" for j in range(points)])
    eps_d = rotation_net_epsilon(points, d)
    p_d.claims = {"epsilon": eps_d, "E": math.inf, "norm": "half"}
    budget = EnergyBudget(E, 1.0, 0.0)
    space = FockSpace(D)
    lp = lift_processor(p_d, E, eps_d, budget, space)
    bound = 4.5 * eps_d * (1.0 + 0.0)
    rows = []
    for i in range(targets):
        phi = float(rng.uniform(0, 2 * math.pi))
        u = chn.rotation_unitary(phi, space)
        prog = lp.program(u)
        imp = lp.processor.implemented(prog)
        rep = ecd_lower_bound(imp, chn.rotation(phi, space), E, restarts=restarts,
                              seed=seed * 1000 + i)
        rows.append({"phi": phi, "measured": 0.5 * rep.lower, "upper_estimate": 0.5 * rep.upper})
    viol = sum(r["measured"] > bound + 1e-9 for r in rows)
    return {"epsilon_d": eps_d, "gamma": lp.gamma, "bound": bound, "delta": lp.delta,
            "rows": rows, "violations": int(viol),
            "max_measured": max(r["measured"] for r in rows), "passed": viol == 0}


# ---------------------------------------------------------- replication

def _solve_offset(eps, E, n_max):
    """Rotation offset whose exact single-use error is ``eps``."""
    if not 0 < eps < 1:
        raise DomainError(f"processor error must lie in (0, 1), got {eps}")
    f = lambda t: rotation_distance_exact(t, E, n_max) - eps  # noqa: E731
    hi = 1e-6
    while f(hi) < 0:
        hi *= 2
        if hi > math.pi:
            raise DomainError(f"no rotation offset reaches error {eps} at E={E}")
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-13)


def replication_experiment(phi, ell, E=1.0, eps_proc=None, D=24, seed=0, work_cutoff=4,
                           grid_points=4, restarts=8, beta_inverse=0.0):
    """Reuse one PET program ``ell`` times for the rotation ``R_phi``.

    The processor is PET over ``grid_points`` rotations on ``n = min(D,
    work_cutoff)`` levels.  With ``eps_proc`` the grid is shifted so that
    the selected grid angle is off by the offset whose exact single-use
    error equals ``eps_proc``; otherwise the fixed grid ``2 pi j / grid_points``
    is used and the error is that of the nearest grid angle.
    """
    n = min(D, work_cutoff)
    space = FockSpace(n)
    if eps_proc is not None:
        off = _solve_offset(eps_proc, E, n - 1)
        base = phi - off
    else:
        base = 0.0
    grid = base + 2 * math.pi * np.arange(grid_points) / grid_points
    j = int(np.argmin([circular_distance(g, phi) for g in grid]))
    proc = pet_build([chn.rotation(a, space) for a in grid], [f"r{k}" for k in range(grid_points)])
    eps = rotation_distance_exact(circular_distance(grid[j], phi), E, n - 1)
    psi = np.eye(grid_points)[j]
    u = chn.rotation_unitary(phi, space)
    rep = replication_build(proc, u, psi, ell, E, beta_inverse, eps)
    imp = rep.implemented()
    multi = FockSpace(n, ell)
    target = KrausChannel(chn.rotation_unitary(phi, multi)[None], "target", multi, multi)
    m = multi_ecd_lower_bound(imp, target, [E] * ell, restarts=restarts, seed=seed,
                              factor_energies=multi.occupations().astype(float))
    measured = 0.5 * m.value
    return {"phi": phi, "ell": ell, "E": E, "working_cutoff": n, "epsilon": eps,
            "epsilon_prime": rep.epsilon_prime, "bound": rep.bound, "measured": measured,
            "e_min_value": 0.5 * m.e_min_value, "e_sum_value": 0.5 * m.e_sum_value,
            "margin": rep.bound - measured, "passed": bool(measured <= rep.bound + 1e-9)}


def exact_replication_residual(ell, n=4, grid_points=4, j=1):
    """Choi distance of the replicated exact PET rotation from ``R^{(x) ell}``."""
    space = FockSpace(n)
    grid = 2 * math.pi * np.arange(grid_points) / grid_points
    proc = pet_build([chn.rotation(a, space) for a in grid], [f"r{k}" for k in range(grid_points)])
    rep = replication_build(proc, chn.rotation_unitary(grid[j], space), np.eye(grid_points)[j],
                            ell, 1.0, 0.0, 0.0)
    multi = FockSpace(n, ell)
    target = KrausChannel(chn.rotation_unitary(grid[j], multi)[None], "target", multi, multi)
    return chn.choi_distance(rep.implemented(), target)


# -------------------------------------------------------------- lemming

def lemming_suite(trials=1000, D=32, seed=0):
    """Random ``(rho, sigma, E, eta)`` meeting the preconditions; count conclusion failures."""
    rng = np.random.default_rng(seed)
    space = FockSpace(D)
    en = space.energies()
    viol, worst = 0, -math.inf
    for _ in range(trials):
        E = float(rng.uniform(0.25, 4.0))
        eta = float(10 ** rng.uniform(-3, -0.5))
        k = int(rng.integers(2, D))
        low = random_density(FockSpace(k), rng).matrix
        rho = np.zeros((D, D), dtype=complex)
        rho[:k, :k] = low
        e_rho = float(np.real(np.diag(rho)) @ en)
        if e_rho > E:
            s = E / e_rho
            rho *= s
            rho[0, 0] += 1 - s
        tau = random_density(space, rng).matrix
        t = eta * float(rng.uniform(0, 1))
        sigma = (1 - t) * rho + t * tau
        r = lemming_compress(rho, sigma, E, eta, space)
        root = math.sqrt(eta)
        worst = max(worst, r.dist_sigma - 3 * root, r.dist_rho - 4 * root)
        viol += not r.passed
    return {"trials": trials, "violations": int(viol), "worst_excess": worst, "passed": viol == 0}


# ---------------------------------------------------------------- cover

def cover_suite(E, eps=1.0, beta=0.0, trials=1000, measured=40, D=16, seed=0, restarts=4):
    """Nearest gauge-covariant net points and measured versus analytic distances.

    All ``trials`` targets are checked for grid rounding; the first
    ``measured`` of them are also compared with the analytic bound through
    a constrained-distance search at cutoff ``D``.
    """
    rng = np.random.default_rng(seed)
    budget = EnergyBudget(E, 1.0, beta)
    res = gc_resolutions(eps, E)
    net = gc_net(*res, budget)
    space = FockSpace(D)
    grid_bad, viol, worst = 0, 0, -math.inf
    for i in range(trials):
        tgt = gc_random(budget, rng)
        near = gc_nearest(net, tgt)
        ok = (abs(near.lam - tgt.lam) <= res[0] + 1e-15
              and circular_distance(near.phi, tgt.phi) <= res[1] + 1e-15
              and (beta == 0 or abs(near.mu - tgt.mu) <= res[2] + 1e-15))
        grid_bad += not ok
        if i < measured:
            c = net_cover_distance(net, tgt, E, space, restarts=restarts, seed=seed + i)
            worst = max(worst, c.measured - c.bound)
            viol += not c.passed
    return {"E": E, "eps": eps, "resolutions": list(res), "net_size": net.size,
            "grid_violations": int(grid_bad), "distance_violations": int(viol),
            "worst_excess": worst, "passed": grid_bad == 0 and viol == 0}


# ------------------------------------------------------------- entropy

def thermal_entropy_check(nbar, D):
    rho = thermal_state(nbar, FockSpace(D))
    from .fock import von_neumann_entropy
    s = von_neumann_entropy(rho.matrix)
    return {"nbar": nbar, "numeric": s, "analytic": bnd.g(nbar), "error": abs(s - bnd.g(nbar))}


def phase_orbit_check(c, ell=1, E=None):
    c = np.asarray(c, dtype=complex)
    p = np.abs(c) ** 2 / np.sum(np.abs(c) ** 2)
    mean = float(np.arange(p.size) @ p)
    E = mean / ell if E is None else E
    ens = bnd.virtual_fock_ensemble(ell, E, c)
    chi = bnd.holevo(ens)
    h = bnd.entropy_of_probs(p)
    return {"holevo": chi, "shannon": h, "error": abs(chi - h), "phases": len(ens.states)}


def attenuator_entropy_check(sigma2=1.0, E=8.0, D=64, points=201):
    r = bnd.attenuator_ensemble_entropy(sigma2, E, points=points, dim=D)
    return {"sigma2": sigma2, "E": E, "D": D, "numeric": r.numeric, "analytic": r.analytic,
            "error": abs(r.numeric - r.analytic), "eta": r.eta, "eta_bound": r.eta_bound,
            "points": r.points, "tail_mass": r.tail, "passed": abs(r.numeric - r.analytic) <= 0.02}


# ------------------------------------------------------------- diamond

def parse_channel(text, space):
    """Channel from a short spec: ``id``, ``rot:phi``, ``att:lam``, ``amp:mu``,
    ``gc:lam,phi,mu``, ``disp:x,p`` or ``sq:s``."""
    kind, _, arg = text.partition(":")
    vals = [float(v) for v in arg.split(",")] if arg else []
    try:
        if kind == "id" and not vals:
            return chn.identity(space), GaugeCovariantParams(1.0, 0.0, 1.0)
        if kind == "rot" and len(vals) == 1:
            return chn.rotation(vals[0], space), GaugeCovariantParams(1.0, vals[0], 1.0)
        if kind == "att" and len(vals) == 1:
            return chn.attenuator(vals[0], space), GaugeCovariantParams(vals[0], 0.0, 1.0)
        if kind == "amp" and len(vals) == 1:
            return chn.amplifier(vals[0], space), GaugeCovariantParams(1.0, 0.0, vals[0])
        if kind == "gc" and len(vals) == 3:
            p = GaugeCovariantParams(*vals)
            return chn.gauge_covariant(p, space), p
        if kind == "disp" and len(vals) == 2:
            return chn.displacement_unitary(vals, space), None
        if kind == "sq" and len(vals) == 1:
            return chn.squeezer_unitary(vals[0], space), None
    except ValueError as exc:
        raise DomainError(f"bad channel spec {text!r}: {exc}") from exc
    raise DomainError(f"unrecognized channel spec {text!r}")


def diamond_experiment(ch1, ch2, E, D=16, restarts=32, seed=0):
    """Constrained distance between two named channels, with the analytic bound when available."""
    space = FockSpace(D)
    a, pa = parse_channel(ch1, space)
    b, pb = parse_channel(ch2, space)
    rep = ecd_lower_bound(a, b, E, restarts=restarts, seed=seed)
    out = {"lower": rep.lower, "upper": rep.upper, "cb_fidelity": rep.cb_fidelity,
           "witness_energy": rep.energy, "tp_deficiency": [a.tp_deficiency, b.tp_deficiency]}
    if pa is not None and pb is not None:
        from .nets import gc_term_bounds
        terms = gc_term_bounds(E, abs(pa.lam - pb.lam), circular_distance(pa.phi, pb.phi),
                               abs(pa.mu - pb.mu))
        out["bound"] = sum(terms)
        out["margin"] = out["bound"] - rep.lower
        out["passed"] = bool(rep.lower <= out["bound"] + 1e-9)
    return out
