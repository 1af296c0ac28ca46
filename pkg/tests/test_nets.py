import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from epqp import channels as chn
from epqp.channels import EnergyBudget, GaugeCovariantParams, GaussianUnitaryParams
from epqp.errors import DomainError
from epqp.fock import FockSpace
from epqp.nets import (GC_CONSTANT, NetSpec, bloch_messiah, circular_distance, compose_symplectic,
                       gaussian_channel, gc_nearest, gc_net, gc_random, gc_resolutions,
                       gc_term_bounds, gu_half_bound, gu_nearest, gu_net, gu_random,
                       gu_resolutions, net_claimed_epsilon, net_cover_distance, net_to_processor,
                       passive_symplectic)


def test_gc_split_reproduces_eps():
    E, eps = 2.0, 0.3
    terms = gc_term_bounds(E, *gc_resolutions(eps, E))
    assert np.allclose(terms, [eps / 3] * 3, rtol=1e-12)
    assert GC_CONSTANT == 16 * 288 * 144 * 288


def test_gc_net_without_amplifier_uses_sentinel():
    net = gc_net(0.1, 0.5, 0.1, EnergyBudget(1.0, 1.0, 0.0))
    assert list(net.axes["mu"]) == [1.0]
    assert net.size == 10 * 13


def test_gc_net_cardinality_bound():
    for eps in (0.5, 0.2, 0.05):
        net = gc_net(eps, eps, eps, EnergyBudget(1.0, 1.0, 1.0))
        assert net.size <= net.cardinality_bound


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_gc_nearest_within_resolution(seed):
    rng = np.random.default_rng(seed)
    b = EnergyBudget(1.0, 1.0, 2.0)
    net = gc_net(0.07, 0.11, 0.13, b)
    t = gc_random(b, rng)
    n = gc_nearest(net, t)
    assert abs(n.lam - t.lam) <= 0.07
    assert circular_distance(n.phi, t.phi) <= 0.11
    assert abs(n.mu - t.mu) <= 0.13


def test_net_spec_round_trip():
    net = gc_net(0.2, 0.3, 0.4, EnergyBudget(1.0, 1.0, 1.0))
    back = NetSpec.from_dict(net.to_dict())
    assert back.size == net.size and back.kind == net.kind
    assert all(np.array_equal(back.axes[k], net.axes[k]) for k in net.axes)


def test_points_respect_cap():
    net = gc_net(0.01, 0.01, 0.01, EnergyBudget(1.0, 1.0, 1.0))
    with pytest.raises(DomainError):
        net.points(cap=1000)


def test_net_processor_has_one_program_per_point():
    net = gc_net(0.5, 2.0, 0.5, EnergyBudget(1.0, 1.0, 0.0))
    proc = net_to_processor(net, FockSpace(6))
    assert proc.d_P == net.size
    assert proc.claims["epsilon"] == pytest.approx(net_claimed_epsilon(net, 1.0))


def test_cover_distance_respects_bound():
    net = gc_net(0.2, 0.3, 0.2, EnergyBudget(1.0, 1.0, 0.0))
    res = net_cover_distance(net, GaugeCovariantParams(0.55, 1.0, 1.0), 1.0, FockSpace(12),
                             restarts=3, seed=0)
    assert res.passed and res.measured >= 0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 3))
def test_bloch_messiah_round_trip(seed, m):
    rng = np.random.default_rng(seed)
    S = gu_random(EnergyBudget(1.0, 6.0, 1.0), rng, m).S
    p1, s, p2 = bloch_messiah(S)
    assert np.allclose(compose_symplectic(p1, s, p2, m), S, atol=1e-8)
    assert np.all(s >= -1e-12)


def test_bloch_messiah_degenerate_squeezing():
    m = 2
    S = compose_symplectic([0.3, -0.2, 0.1, 0.4], [0.5, 0.5], [1.0, 0.2, -0.7, 0.3], m)
    p1, s, p2 = bloch_messiah(S)
    assert np.allclose(compose_symplectic(p1, s, p2, m), S, atol=1e-8)


def test_passive_symplectic_is_orthogonal_symplectic():
    o = passive_symplectic([0.3, 0.5, 0.2, -0.1], 2)
    om = chn.symplectic_form(2)
    assert np.allclose(o.T @ o, np.eye(4)) and np.allclose(o.T @ om @ o, om)


def test_gu_resolutions_invert_half_bound():
    E, a, b, m, eps = 1.0, 2.0, 0.5, 1, 0.1
    es, ed = gu_resolutions(eps, E, a, b, m)
    assert gu_half_bound(E, a, b, m, es, ed) == pytest.approx(eps)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_gu_nearest_within_resolution(seed):
    rng = np.random.default_rng(seed)
    b = EnergyBudget(1.0, 2.0, 0.5)
    net = gu_net(0.3, 0.3, b)
    t = gu_random(b, rng)
    n = gu_nearest(net, t)
    assert np.linalg.norm(n.S - t.S, 2) <= 0.3 + 1e-9
    assert np.linalg.norm(n.d - t.d) <= 0.3 + 1e-9


def test_gu_net_cardinality_bound_with_doubled_radius():
    # a cubic grid projected onto the ball needs more points than (1 + R/eps)^{2M}
    b = EnergyBudget(1.0, 2.0, 2.0)
    for eps in (0.5, 0.25):
        net = gu_net(0.6, eps, b)
        r = math.sqrt(2 * b.beta)
        assert len(net.axes["d"]) <= (1 + 2 * r / eps) ** 2


def test_gaussian_channel_matches_matrix_route():
    sp = FockSpace(30)
    S = compose_symplectic([0.4], [0.15], [-0.3], 1)
    p = GaussianUnitaryParams(S, np.array([0.3, -0.2]))
    u1 = gaussian_channel(p, sp).kraus[0]
    u2 = chn.gaussian_unitary_matrix(p, sp)
    k = 10
    assert abs(np.vdot(u1[:, :k].ravel(), u2[:, :k].ravel())) / k > 1 - 1e-8
