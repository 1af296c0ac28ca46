import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from epqp import channels as chn
from epqp.errors import DomainError
from epqp.fock import FockSpace
from epqp.metrics import (distance_at, ecd_lower_bound, multi_ecd_lower_bound,
                          rotation_distance_exact)

SP = FockSpace(12)


def _rotation_oracle_hull(delta, E, n_max):
    """Distance from the origin to the image of the feasible photon-number distributions.

    Vertices of ``{p >= 0, sum p = 1, n.p <= E}`` have at most two nonzero
    entries, so the image of the polytope under ``p -> sum p_n e^{-i delta n}``
    is the convex hull of the vertex images; the minimum modulus over it is a
    point-to-polygon distance.
    """
    z = lambda k: np.exp(-1j * delta * k)  # noqa: E731
    pts = [z(k) for k in range(n_max + 1) if k <= E]
    for j in range(n_max + 1):
        for k in range(j + 1, n_max + 1):
            if j <= E < k:
                t = (E - j) / (k - j)
                pts.append((1 - t) * z(j) + t * z(k))
    xy = np.array([[p.real, p.imag] for p in pts])
    hull = ConvexHull(xy)
    if np.all(hull.equations[:, -1] <= 1e-14):
        return 1.0  # origin inside the hull
    best = np.inf
    for a, b in hull.simplices:
        p, q = xy[a], xy[b]
        t = np.clip(-p @ (q - p) / ((q - p) @ (q - p)), 0, 1)
        best = min(best, np.linalg.norm(p + t * (q - p)))
    return math.sqrt(max(0.0, 1 - best * best))


@pytest.mark.parametrize("delta,E", [(0.1, 1.0), (0.5, 0.5), (2.0, 0.5), (1.0, 2.0), (0.3, 3.7)])
def test_rotation_exact_against_hull_oracle(delta, E):
    assert abs(rotation_distance_exact(delta, E, 8) - _rotation_oracle_hull(delta, E, 8)) < 1e-7


def test_rotation_lower_bound_never_exceeds_exact():
    for delta in (0.05, 0.3, 1.2):
        rep = ecd_lower_bound(chn.rotation(delta, SP), chn.identity(SP), 1.0, restarts=8, seed=1)
        exact = 2 * rotation_distance_exact(delta, 1.0, SP.dim - 1)
        assert rep.lower <= exact + 1e-7
        assert rep.lower >= exact - 0.05


def test_lower_below_upper_and_energy_feasible():
    a, b = chn.attenuator(0.6, SP), chn.identity(SP)
    rep = ecd_lower_bound(a, b, 1.5, restarts=6, seed=3)
    assert rep.lower <= rep.upper + 1e-12
    assert rep.energy <= 1.5 * (1 + 1e-9)
    assert abs(distance_at(a, b, rep.witness) - rep.lower) < 1e-9


@pytest.mark.parametrize("lam,phi", [(0.6, 0.0), (0.9, 0.7), (1.0, 2.0)])
def test_fidelity_sandwich(lam, phi):
    a = chn.compose(chn.rotation(phi, SP), chn.attenuator(lam, SP))
    rep = ecd_lower_bound(a, chn.identity(SP), 1.0, restarts=4, seed=0)
    assert rep.cb_fidelity >= 1 - 0.5 * rep.lower - 1e-9
    assert rep.lower <= 2 * math.sqrt(max(0.0, 1 - rep.cb_fidelity ** 2)) + 1e-9


def test_identical_channels_distance_zero():
    rep = ecd_lower_bound(chn.rotation(0.3, SP), chn.rotation(0.3, SP), 1.0, restarts=4, seed=0)
    assert rep.lower < 1e-10


def test_seeded_search_is_deterministic():
    a, b = chn.attenuator(0.4, SP), chn.rotation(0.2, SP)
    r1 = ecd_lower_bound(a, b, 1.0, restarts=5, seed=11)
    r2 = ecd_lower_bound(a, b, 1.0, restarts=5, seed=11)
    assert r1.lower == r2.lower and np.array_equal(r1.witness, r2.witness)


def test_unconstrained_orthogonal_unitaries():
    sp = FockSpace(4)
    u = np.roll(np.eye(4), 1, axis=0)
    a = chn.unitary_channel(u, sp)
    rep = ecd_lower_bound(a, chn.identity(sp), math.inf, restarts=4, seed=0)
    assert abs(rep.lower - 2.0) < 1e-6


def test_distance_monotone_in_energy():
    a, b = chn.rotation(0.4, SP), chn.identity(SP)
    vals = [ecd_lower_bound(a, b, E, restarts=6, seed=2).lower for E in (0.25, 1.0, 3.0)]
    assert vals[0] <= vals[1] + 1e-9 <= vals[2] + 2e-9


def test_multi_constrained_sandwich():
    sp = FockSpace(4, 2)
    a, b = chn.rotation(0.3, sp), chn.identity(sp)
    rep = multi_ecd_lower_bound(a, b, [0.5, 0.5], restarts=4, seed=0)
    assert rep.sandwich_ok


def test_negative_energy_rejected():
    with pytest.raises(DomainError):
        ecd_lower_bound(chn.identity(SP), chn.identity(SP), -1.0)
