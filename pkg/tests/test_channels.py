import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epqp import channels as chn
from epqp.channels import (EnergyBudget, GaugeCovariantParams, GaussianUnitaryParams,
                           KrausChannel)
from epqp.errors import DomainError, NumericalQualityError
from epqp.fock import FockSpace, coherent_state, random_density, thermal_state, trace_distance
from epqp.nets import compose_symplectic

SP = FockSpace(32)


def test_attenuator_maps_coherent_to_coherent():
    out = chn.apply(chn.attenuator(0.5, SP), coherent_state([1.0, 0.0], SP).projector())
    ref = coherent_state([1 / math.sqrt(2), 0.0], SP).projector()
    assert trace_distance(out, ref) < 1e-6


def test_attenuator_is_trace_preserving():
    ch = chn.attenuator(0.3, SP)
    s = np.einsum("kij,kil->jl", ch.kraus.conj(), ch.kraus)
    assert np.allclose(s, np.eye(SP.dim), atol=1e-12)


def test_amplifier_vacuum_to_thermal_on_guarded_subspace():
    out = chn.apply(chn.amplifier(2.0, SP), np.diag(np.eye(SP.dim)[0]).astype(complex))
    idx = chn.guarded_indices(SP, 8)
    ref = thermal_state(1.0, FockSpace(80)).matrix[:SP.dim, :SP.dim]
    assert np.abs(out - ref)[np.ix_(idx, idx)].max() < 1e-4


def test_amplifier_deficiency_is_recorded():
    ch = chn.amplifier(2.0, SP)
    assert 0.0 <= ch.tp_deficiency < 1.0


@pytest.mark.parametrize("l1,l2", [(0.3, 0.7), (0.9, 0.5), (0.0, 0.4)])
def test_attenuator_semigroup(l1, l2):
    a = chn.compose(chn.attenuator(l1, SP), chn.attenuator(l2, SP), recompress_over=SP.dim)
    b = chn.attenuator(l1 * l2, SP)
    assert chn.choi_distance(a, b) < 1e-7


def test_rotation_commutes_with_attenuator():
    r, t = chn.rotation(0.7, SP), chn.attenuator(0.4, SP)
    assert chn.choi_distance(chn.compose(r, t), chn.compose(t, r)) < 1e-12


def test_gauge_covariant_without_amplifier():
    p = GaugeCovariantParams(0.5, 0.3, 1.0)
    ch = chn.gauge_covariant(p, SP)
    ref = chn.compose(chn.rotation(0.3, SP), chn.attenuator(0.5, SP))
    assert chn.choi_distance(ch, ref) < 1e-12


def test_gauge_covariant_budget():
    with pytest.raises(DomainError):
        GaugeCovariantParams(0.5, 0.0, 3.0).check_budget(EnergyBudget(1.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        GaugeCovariantParams(1.5, 0.0)


def test_rejects_non_contractive_kraus():
    with pytest.raises(NumericalQualityError):
        KrausChannel(np.array([2 * np.eye(2)]))


def test_channel_round_trip():
    ch = chn.attenuator(0.25, FockSpace(6))
    back = KrausChannel.from_dict(ch.to_dict())
    assert np.array_equal(back.kraus, ch.kraus) and back.in_space == ch.in_space


def test_choi_is_positive_and_normalized():
    c = chn.choi(chn.amplifier(1.5, FockSpace(8)))
    w = np.linalg.eigvalsh(c)
    assert w.min() > -1e-12


def test_displacement_creates_coherent_state():
    sp = FockSpace(40)
    u = chn.displacement_unitary([1.0, -0.5], sp).kraus[0]
    ref = coherent_state([1.0, -0.5], sp).vector
    assert abs(abs(np.vdot(ref, u[:, 0])) - 1) < 1e-10


def test_squeezer_matches_symplectic_route():
    sp = FockSpace(40)
    s = 0.4
    params = GaussianUnitaryParams(chn.symplectic_squeeze(s), np.zeros(2))
    u1 = chn.gaussian_unitary_matrix(params, sp)
    u2 = chn.squeezer_unitary(s, sp).kraus[0]
    k = 20
    ov = abs(np.vdot(u1[:, :k].ravel(), u2[:, :k].ravel())) / k
    assert ov > 1 - 1e-8


def test_euler_route_agrees_with_logarithm_route():
    sp = FockSpace(40)
    S = compose_symplectic([0.3], [0.2], [-0.5], 1)
    params = GaussianUnitaryParams(S, np.array([0.2, 0.1]))
    u1 = chn.gaussian_unitary_matrix(params, sp)
    u2 = chn.gaussian_unitary_euler(params, sp).kraus[0]
    k = 15
    ov = abs(np.vdot(u1[:, :k].ravel(), u2[:, :k].ravel())) / k
    assert ov > 1 - 1e-8


def test_euler_decompose_reconstructs():
    S = compose_symplectic([1.1], [0.35], [-2.0], 1)
    t1, s, t2 = chn.euler_decompose(S)
    rec = chn.symplectic_rotation(t1) @ chn.symplectic_squeeze(s) @ chn.symplectic_rotation(t2)
    assert np.allclose(rec, S, atol=1e-12)


def test_gaussian_params_reject_non_symplectic():
    with pytest.raises(DomainError):
        GaussianUnitaryParams(np.diag([2.0, 2.0]), np.zeros(2))


def test_energy_limit_rotation():
    v = chn.energy_limit_check(chn.rotation(0.9, SP), EnergyBudget(1.0, 1.0, 0.0), guard=8)
    assert v.passed


def test_energy_limit_squeezer_passes_at_its_constants():
    r = 1.5
    ch = chn.squeezer_unitary(math.log(r), SP)
    assert chn.energy_limit_check(ch, EnergyBudget(1.0, r * r, (r * r - 1) / 2), guard=8).passed


def test_energy_limit_squeezer_fails_below_r_squared_at_larger_cutoff():
    # the violation grows with the photon number, so it needs a roomier cutoff
    sp = FockSpace(64)
    ch = chn.squeezer_unitary(math.log(1.5), sp)
    v = chn.energy_limit_check(ch, EnergyBudget(1.0, 2.24, 0.625), guard=8)
    assert v.margin < 0 and not v.passed


def test_energy_limit_squeezer_fails_below_r_squared():
    r = 2.0
    ch = chn.squeezer_unitary(math.log(r), FockSpace(64))
    v = chn.energy_limit_check(ch, EnergyBudget(1.0, r * r - 0.1, (r * r - 1) / 2), guard=8)
    assert not v.passed


def test_energy_limit_displacement():
    ch = chn.displacement_unitary([1.0, 0.0], SP)
    assert chn.energy_limit_check(ch, EnergyBudget(1.0, 2.0, 1.0), guard=8).passed


def test_compression_map():
    sp = FockSpace(10)
    k = chn.compression_map(2.0, 0.5, sp)
    rho = random_density(sp, np.random.default_rng(0)).matrix
    out = chn.apply(k, rho)
    assert abs(np.trace(out).real - 1) < 1e-12
    assert np.allclose(out[5:, :], 0)


def test_restrict_channel_shapes():
    ch = chn.restrict_channel(chn.attenuator(0.5, FockSpace(10)), 6)
    assert (ch.din, ch.dout) == (6, 6)


def test_tensor_product_of_rotations():
    sp = FockSpace(4)
    t = chn.tensor(chn.rotation(0.3, sp), chn.rotation(0.3, sp))
    ref = chn.rotation(0.3, FockSpace(4, 2))
    assert chn.choi_distance(t, ref) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 2 ** 31))
def test_attenuator_contracts_trace_distance(lam, seed):
    sp = FockSpace(10)
    rng = np.random.default_rng(seed)
    a, b = random_density(sp, rng).matrix, random_density(sp, rng).matrix
    ch = chn.attenuator(lam, sp)
    assert trace_distance(ch(a), ch(b)) <= trace_distance(a, b) + 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 2 ** 31))
def test_dual_map_is_adjoint(lam, seed):
    sp = FockSpace(8)
    rng = np.random.default_rng(seed)
    rho = random_density(sp, rng).matrix
    x = rng.standard_normal((8, 8))
    ch = chn.attenuator(lam, sp)
    lhs = np.trace(chn.apply(ch, rho) @ x)
    rhs = np.trace(rho @ chn.apply_dual(ch, x))
    assert abs(lhs - rhs) < 1e-10
