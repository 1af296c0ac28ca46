import math

import numpy as np
import pytest

from epqp import channels as chn
from epqp.channels import EnergyBudget, KrausChannel
from epqp.errors import DomainError, NumericalQualityError
from epqp.fock import FockSpace, random_density
from epqp.processor import (ProcessorSpec, controlled_unitary_processor, energy_rank,
                            environment_state, lemming_compress, lift_processor,
                            memory_recovery_error, no_programming_check, pet_build,
                            replication_build, restrict_processor, stinespring_dilate)

SP = FockSpace(6)


def test_pet_is_exact_with_one_program_per_target():
    targets = [chn.rotation(a, SP) for a in (0.0, 0.5, 1.0)] + [chn.attenuator(0.3, SP)]
    proc = pet_build(targets)
    assert proc.d_P == 4
    for lab, t in zip(proc.programs, targets):
        assert chn.choi_distance(proc.implemented(lab), t) < 1e-12


def test_pet_mixed_program_gives_mixture():
    a, b = chn.rotation(0.0, SP), chn.rotation(1.0, SP)
    proc = pet_build([a, b])
    rho = random_density(SP, np.random.default_rng(0)).matrix
    out = proc.implemented(np.diag([0.25, 0.75]))(rho)
    assert np.allclose(out, 0.25 * a(rho) + 0.75 * b(rho), atol=1e-12)


def test_pet_rejects_mismatched_targets():
    with pytest.raises(DomainError):
        pet_build([chn.identity(SP), chn.identity(FockSpace(5))])


def test_processor_round_trip():
    proc = pet_build([chn.rotation(a, SP) for a in (0.0, 0.7)])
    back = ProcessorSpec.from_dict(proc.to_dict())
    assert back.d_P == 2
    assert chn.choi_distance(back.implemented(list(back.programs)[1]), chn.rotation(0.7, SP)) < 1e-12


def test_no_programming_gram_is_identity():
    us = [chn.rotation_unitary(a, SP) for a in (0.1, 0.2, 0.9)]
    rep = no_programming_check(controlled_unitary_processor(us, SP), us)
    assert rep.passed and rep.dimension_ok
    assert np.allclose(rep.gram, np.eye(3), atol=1e-6)


def test_no_programming_refuses_inexact_processor():
    us = [chn.rotation_unitary(a, SP) for a in (0.1, 0.2)]
    proc = controlled_unitary_processor(us, SP)
    with pytest.raises(NumericalQualityError):
        no_programming_check(proc, [chn.rotation_unitary(0.15, SP)], labels=["U0"])


def test_stinespring_is_isometry():
    ch = chn.attenuator(0.4, SP)
    v = stinespring_dilate(ch)
    assert np.allclose(v.conj().T @ v, np.eye(SP.dim), atol=1e-12)


def test_energy_rank():
    assert energy_rank(FockSpace(5, 2), 1.0) == 3


def test_lift_reproduces_low_energy_action():
    sub = FockSpace(8)
    angles = 2 * math.pi * np.arange(8) / 8
    p_d = pet_build([chn.rotation(a, sub) for a in angles])
    p_d.claims["epsilon"] = 0.5
    lp = lift_processor(p_d, 1.0, 0.9, EnergyBudget(1.0), FockSpace(16))
    phi = angles[3]
    imp = lp.processor.implemented(lp.program(chn.rotation_unitary(phi, FockSpace(16))))
    # inputs supported on levels <= E/delta are rotated exactly
    ket = np.zeros(16, dtype=complex)
    ket[:2] = [1 / math.sqrt(2), 1 / math.sqrt(2)]
    out = imp(np.outer(ket, ket.conj()))
    ref = np.exp(-1j * phi * np.arange(16)) * ket
    assert np.allclose(out, np.outer(ref, ref.conj()), atol=1e-12)
    assert abs(lp.gamma - 4.5 * 0.5) < 1e-15


def test_lift_requires_enough_levels():
    p_d = pet_build([chn.identity(FockSpace(3))])
    with pytest.raises(DomainError):
        lift_processor(p_d, 1.0, 0.5, EnergyBudget(1.0), FockSpace(16))


def test_restrict_claim_scales_with_energy_of_levels():
    proc = pet_build([chn.rotation(a, FockSpace(10)) for a in (0.0, 1.0)])
    r = restrict_processor(proc, 4, 1.0, 0.1)
    assert abs(r.claims["epsilon"] - 0.1 * 3 / 1) < 1e-15
    assert r.d_P == 2


def _rotation_pet(n=3, points=4):
    sp = FockSpace(n)
    grid = 2 * math.pi * np.arange(points) / points
    return pet_build([chn.rotation(a, sp) for a in grid]), grid, sp


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_replication_of_exact_processor(ell):
    proc, grid, sp = _rotation_pet()
    rep = replication_build(proc, chn.rotation_unitary(grid[1], sp), np.eye(4)[1], ell, 1.0, 0.0, 0.0)
    multi = FockSpace(3, ell)
    target = KrausChannel(chn.rotation_unitary(grid[1], multi)[None], "t", multi, multi)
    assert chn.choi_distance(rep.implemented(), target) < 1e-9
    assert rep.bound == 0.0


def test_memory_recovers_program_for_exact_processor():
    proc, grid, sp = _rotation_pet()
    u = chn.rotation_unitary(grid[2], sp)
    rep = replication_build(proc, u, np.eye(4)[2], 1, 1.0, 0.0, 0.0)
    x = np.eye(3) / math.sqrt(3)
    phi = environment_state(proc, u, np.eye(4)[2], x)
    assert memory_recovery_error(rep, phi) < 1e-12


def test_replication_rejects_mixed_program():
    proc, grid, sp = _rotation_pet()
    with pytest.raises(DomainError):
        replication_build(proc, chn.rotation_unitary(0.0, sp), np.eye(4) / 4, 2, 1.0, 0.0, 0.0)


def test_lemming_conclusions():
    rng = np.random.default_rng(5)
    sp = FockSpace(16)
    rho = np.zeros((16, 16), dtype=complex)
    rho[:3, :3] = random_density(FockSpace(3), rng).matrix
    tau = random_density(sp, rng).matrix
    sigma = 0.95 * rho + 0.05 * tau
    E = float(np.real(np.diag(rho)) @ sp.energies())
    r = lemming_compress(rho, sigma, E, 0.05, sp)
    assert r.passed
    assert abs(np.trace(r.sigma_prime).real - 1) < 1e-12
    assert r.energy <= E / 0.05


def test_lemming_precondition_violations():
    sp = FockSpace(8)
    rho = np.diag(np.eye(8)[0]).astype(complex)
    far = np.diag(np.eye(8)[5]).astype(complex)
    with pytest.raises(DomainError):
        lemming_compress(rho, far, 1.0, 0.1, sp)
    with pytest.raises(DomainError):
        lemming_compress(rho, rho, 1.0, 1e-9, sp)
