import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epqp import bounds as bnd
from epqp import channels as chn
from epqp.errors import DomainError
from epqp.fock import FockSpace, thermal_state, von_neumann_entropy
from epqp.processor import pet_build

GOLDEN = os.path.join(os.path.dirname(__file__), "data", "golden_bounds.json")


def _evaluate(row):
    if row["name"].startswith("table"):
        return bnd.table_bound(row["table"], row["row"], row["column"], **row["kw"])
    return bnd.BOUNDS[row["name"]](**row["kw"])


def test_golden_values():
    with open(GOLDEN) as fh:
        rows = json.load(fh)["rows"]
    assert len(rows) == 20 * (5 + 16)
    for row in rows:
        ref = float(row["log2_value"])
        rep = _evaluate(row)
        assert rep.log2_value == pytest.approx(ref, rel=1e-10, abs=1e-300), row


@pytest.mark.parametrize("n", [0.1, 0.5, 1, 3, 10, 100, 1000])
def test_g_elementary_bounds(n):
    v = bnd.gibbs_entropy_g(n)
    assert math.log2(n) <= v <= math.log2(n + 1) + math.log2(math.e)


def test_g_at_zero_and_one():
    assert bnd.g(0) == 0.0
    assert bnd.g(1.0) == pytest.approx(2.0)


@pytest.mark.parametrize("nbar", [0.3, 1.0, 2.5])
def test_thermal_entropy_is_g(nbar):
    rho = thermal_state(nbar, FockSpace(120))
    assert von_neumann_entropy(rho.matrix) == pytest.approx(bnd.g(nbar), abs=1e-6)


def test_attenuator_limit_at_E64():
    ref = 2 ** -16 * math.sqrt(65) / math.sqrt(math.log(math.log2(65)))
    assert bnd.attenuator_lower(64, 0.0).value == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("call", [
    lambda: bnd.attenuator_lower(64, 1 / 1024),
    lambda: bnd.attenuator_lower(5.0, 1e-4),
    lambda: bnd.phase_rotation_lower(1.0, 1e-3, 1.0),
    lambda: bnd.multimode_rotation_lower(1.0, 1e-3, 0.0),
    lambda: bnd.info_chain_lower_bound(3.0, 1.0, 1.0, 0.0, 0.1),
    lambda: bnd.table_bound("lower", 4, "finite", d=2, eps=0.1, a=2.0),
    lambda: bnd.table_bound("upper", 5, "finite", d=2, eps=0.1),
])
def test_preconditions_raise(call):
    with pytest.raises(DomainError):
        call()


def test_huge_bounds_keep_finite_log():
    r = bnd.table_bound("upper", 2, "infinite", d=16, E=1.0, gamma=1e-3)
    assert math.isinf(r.value) and math.isfinite(r.log2_value)


def test_unspecified_constants_are_flagged():
    r = bnd.table_bound("lower", 1, "finite", d=4, eps=0.1)
    assert any("unspecified" in n for n in r.notes)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 100), st.floats(0.1, 100), st.floats(1e-8, 0.1), st.floats(1e-8, 0.1),
       st.floats(0.05, 0.95))
def test_phase_rotation_bound_monotone(e1, e2, p1, p2, delta):
    lo_e, hi_e = sorted((e1, e2))
    lo_p, hi_p = sorted((p1, p2))
    f = lambda E, eps: bnd.phase_rotation_lower(E, eps, delta).log2_value  # noqa: E731
    assert f(lo_e, hi_p) <= f(hi_e, hi_p) + 1e-12
    assert f(lo_e, hi_p) <= f(lo_e, lo_p) + 1e-12


def test_csv_has_one_row_per_report():
    reps = [bnd.phase_rotation_lower(1.0, e, 0.5) for e in (1e-2, 1e-3)]
    lines = bnd.reports_to_csv(reps).strip().splitlines()
    assert len(lines) == 3 and lines[0].startswith("name,side")


def test_holevo_of_orthogonal_pure_states():
    ens = bnd.Ensemble([np.eye(4)[i] for i in range(4)], np.full(4, 0.25))
    assert bnd.holevo(ens) == pytest.approx(2.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2 ** 31))
def test_holevo_bounds(k, seed):
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(k):
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        m = g @ g.conj().T
        states.append(m / np.trace(m).real)
    w = rng.dirichlet(np.ones(k))
    chi = bnd.holevo(bnd.Ensemble(states, w))
    assert 0 <= chi <= math.log2(k) + 1e-9


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_phase_orbit_holevo_is_shannon(ell):
    c = np.array([0.5, 1.0, 0.2j, 0.7, 0.1])
    ens = bnd.virtual_fock_ensemble(ell, 10.0, c)
    p = np.abs(c) ** 2 / np.sum(np.abs(c) ** 2)
    assert len(ens.states) == 4 * 4 + 1
    assert bnd.holevo(ens) == pytest.approx(float(-(p * np.log2(p)).sum()), abs=1e-8)


def test_balanced_partition():
    assert bnd.balanced_partition(7, 3) == (2, 2, 3)
    assert bnd.balanced_partition(2, 3) == (0, 1, 1)


def test_virtual_fock_state_energy_per_mode():
    v = bnd.virtual_fock_state(5, 2, 4)
    sp = FockSpace(4, 2)
    occ = sp.occupations()
    assert np.allclose(np.abs(v) ** 2 @ occ, [2.5, 2.5])


def test_attenuator_ensemble_entropy():
    r = bnd.attenuator_ensemble_entropy(1.0, 8.0, dim=64)
    assert abs(r.numeric - r.analytic) <= 0.02
    assert r.eta <= r.eta_bound


def test_info_chain_below_program_dimension():
    # a PET processor over K rotations cannot carry more than log2 K bits
    K, n = 4, 4
    sp = FockSpace(n)
    angles = 2 * math.pi * np.arange(K) / K
    proc = pet_build([chn.rotation(a, sp) for a in angles])
    nu = np.ones(n) / math.sqrt(n)
    outs = [proc.implemented(lab)(np.outer(nu, nu)) for lab in proc.programs]
    chi = bnd.holevo(bnd.Ensemble(outs, np.full(K, 1 / K)))
    for eps in (0.0, 1e-4, 1e-2):
        assert bnd.info_chain_lower_bound(chi, 1.5, 1.0, 0.0, eps) <= math.log2(proc.d_P) + 1e-12
