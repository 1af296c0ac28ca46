import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epqp.errors import DomainError, NumericalQualityError, TruncationError
from epqp.fock import (FockSpace, DensityOperator, annihilation, coherent_state, default_cutoff,
                       fidelity, fock_state, gentle_measure, number_operator, operator_from_json,
                       operator_to_json, partial_trace, random_density, thermal_state,
                       trace_distance, von_neumann_entropy)


def test_ladder_commutator_below_cutoff():
    sp = FockSpace(12)
    a = annihilation(sp)
    c = a @ a.conj().T - a.conj().T @ a
    assert np.allclose(np.diag(c)[:-1], 1.0)
    assert np.allclose(number_operator(sp), a.conj().T @ a)


def test_multimode_occupations():
    sp = FockSpace(3, 2)
    occ = sp.occupations()
    assert occ.shape == (9, 2)
    assert list(occ[5]) == [1, 2]
    assert np.allclose(sp.energies(), occ.sum(axis=1))


def test_default_cutoff():
    assert default_cutoff(1) == 16


def test_coherent_mean_photon_number():
    sp = FockSpace(40)
    psi = coherent_state([1.0, 2.0], sp)
    assert abs(psi.energy() - (1 + 4) / 2) < 1e-10


def test_coherent_truncation_error_suggests_cutoff():
    with pytest.raises(TruncationError) as exc:
        coherent_state([8.0, 0.0], FockSpace(10))
    assert exc.value.required_dim > 10


def test_thermal_mean():
    rho = thermal_state(1.5, FockSpace(80))
    assert abs(rho.energy() - 1.5) < 1e-8


def test_density_rejects_negative_spectrum():
    with pytest.raises(NumericalQualityError):
        DensityOperator(np.diag([1.5, -0.5]), FockSpace(2))


def test_density_rejects_wrong_shape():
    with pytest.raises(DomainError):
        DensityOperator(np.eye(3) / 3, FockSpace(2))


def test_trace_distance_orthogonal_states():
    sp = FockSpace(4)
    assert abs(trace_distance(fock_state(0, sp).density(), fock_state(3, sp).density()) - 1) < 1e-12


def test_fidelity_of_identical_states():
    rho = random_density(FockSpace(5), np.random.default_rng(1)).matrix
    assert abs(fidelity(rho, rho) - 1) < 1e-7


def test_partial_trace_of_product():
    rng = np.random.default_rng(2)
    a = random_density(FockSpace(2), rng).matrix
    b = random_density(FockSpace(3), rng).matrix
    assert np.allclose(partial_trace(np.kron(a, b), (2, 3), [0]), a)
    assert np.allclose(partial_trace(np.kron(a, b), (2, 3), [1]), b)


def test_entropy_maximally_mixed():
    assert abs(von_neumann_entropy(np.eye(8) / 8) - 3) < 1e-12


def test_operator_json_round_trip():
    rng = np.random.default_rng(3)
    sp = FockSpace(4)
    rho = random_density(sp, rng).matrix
    m, sp2 = operator_from_json(operator_to_json(rho, sp))
    assert np.array_equal(m, rho) and sp2 == sp


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2 ** 32 - 1))
def test_gentle_measurement_bound(n, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(FockSpace(n), rng).matrix
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(g)
    t = (q * rng.uniform(0, 1, n)) @ q.conj().T
    out, bound = gentle_measure(rho, t)
    assert np.abs(np.linalg.eigvalsh(rho - out)).sum() <= bound + 1e-8


def test_gentle_rejects_non_effect():
    with pytest.raises(DomainError):
        gentle_measure(np.eye(2) / 2, 2 * np.eye(2))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
def test_trace_distance_metric_properties(n, seed):
    rng = np.random.default_rng(seed)
    sp = FockSpace(n)
    a, b, c = (random_density(sp, rng).matrix for _ in range(3))
    dab, dbc, dac = trace_distance(a, b), trace_distance(b, c), trace_distance(a, c)
    assert 0 <= dab <= 1 + 1e-12
    assert abs(dab - trace_distance(b, a)) < 1e-12
    assert dac <= dab + dbc + 1e-12
    # Fuchs-van de Graaf
    f = fidelity(a, b)
    assert 1 - f <= dab + 1e-9 and dab <= math.sqrt(max(0.0, 1 - f * f)) + 1e-9
