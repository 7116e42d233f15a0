import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from entspec.entanglement import (EntanglementSnapshot, fix_phases, match_modes, particle2_spectrum,
                                  purity_entropy, reduced_density, reduced_density_oracle, schmidt_spectrum,
                                  swap_events, track_modes)


def random_state(rng, n=15, m=15):
    psi = rng.normal(size=(n, m)) + 1j * rng.normal(size=(n, m))
    return psi / np.linalg.norm(psi)


def test_product_state():
    u = np.exp(1j * np.arange(6)) * np.array([1, 2, 3, 0, 1, 1.0])
    v = np.array([0.5, -1, 2, 0.1, 0, 1j])
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    snap = schmidt_spectrum(np.outer(u, v), 4)
    assert snap.p[0] == pytest.approx(1.0, abs=1e-14)
    assert np.all(snap.p[1:] < 1e-28)
    assert abs(abs(np.vdot(snap.modes[:, 0], u)) - 1) < 1e-14


def test_bell_like():
    psi = np.diag([math.sqrt(0.5), math.sqrt(0.5)])
    np.testing.assert_allclose(schmidt_spectrum(psi, 2).p, [0.5, 0.5], atol=1e-15)


def test_projector_for_product():
    rng = np.random.default_rng(0)
    u = rng.normal(size=8) + 1j * rng.normal(size=8)
    rho = reduced_density(np.outer(u / np.linalg.norm(u), np.eye(8)[2]))
    assert np.max(np.abs(rho @ rho - rho)) < 1e-10


def test_residual_and_sum_rule():
    rng = np.random.default_rng(5)
    snap = schmidt_spectrum(random_state(rng, 12, 9), 4)
    assert snap.K == 4
    assert math.fsum(snap.p) + snap.residual == pytest.approx(1.0, abs=1e-13)


def test_rectangular_and_particle_two():
    rng = np.random.default_rng(2)
    psi = random_state(rng, 10, 6)
    p1 = schmidt_spectrum(psi, 10).p
    assert p1.shape == (6,)
    np.testing.assert_allclose(particle2_spectrum(psi), p1, atol=1e-14)


def test_oracle_rejects_bad_input(monkeypatch):
    import entspec.entanglement as ent
    monkeypatch.setattr(ent, "reduced_density", lambda psi: np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        reduced_density_oracle(np.eye(2), 2)


@pytest.mark.parametrize("seed", range(10))
def test_matches_oracle(seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng)
    a, b = schmidt_spectrum(psi, 15), reduced_density_oracle(psi, 15)
    np.testing.assert_allclose(a.p, b.p, atol=1e-12, rtol=0)
    overlaps = np.abs(np.sum(a.modes.conj() * b.modes, axis=0))
    assert np.all(overlaps >= 1 - 1e-8)


def test_phase_convention():
    rng = np.random.default_rng(9)
    m = fix_phases(rng.normal(size=(7, 3)) + 1j * rng.normal(size=(7, 3)))
    lead = m[np.argmax(np.abs(m), axis=0), np.arange(3)]
    assert np.all(lead.real > 0) and np.all(np.abs(lead.imag) < 1e-15)


def snap(modes, p=None):
    K = modes.shape[1]
    return EntanglementSnapshot(0.0, np.ones(K) if p is None else p, modes, 0.0)


def test_duplicate_snapshot_is_identity():
    rng = np.random.default_rng(4)
    q, _ = np.linalg.qr(rng.normal(size=(9, 5)))
    tr = track_modes([snap(q), snap(q)])[0]
    assert tr.permutation.tolist() == list(range(5))
    np.testing.assert_allclose(tr.overlaps, 1.0, atol=1e-12)
    assert tr.ambiguous == []


def test_swap_detected():
    e = np.eye(6)[:, :4]
    swapped = e[:, [1, 0, 2, 3]]
    tracks = track_modes([snap(e), snap(swapped), snap(swapped)])
    assert tracks[0].permutation.tolist() == [1, 0, 2, 3]
    assert swap_events(tracks) == [0]


def test_ambiguous_flag():
    a = np.eye(4)[:, :2]
    b = (np.eye(4)[:, 2:] + np.eye(4)[:, :2] * 0.1) / math.sqrt(1.01)
    assert track_modes([snap(a), snap(b)])[0].ambiguous == [0, 1]


def test_track_needs_consistent_snapshots():
    with pytest.raises(ValueError):
        track_modes([snap(np.eye(3))])
    with pytest.raises(ValueError):
        track_modes([snap(np.eye(3)), snap(np.eye(3)[:, :2])])


def test_greedy_assignment_is_permutation():
    rng = np.random.default_rng(11)
    perm, best = match_modes(rng.normal(size=(8, 5)), rng.normal(size=(8, 5)))
    assert sorted(perm.tolist()) == list(range(5))
    assert np.all(best >= 0)


class TestPurityEntropy:
    def test_pure(self):
        assert purity_entropy([1.0]) == (1.0, 0.0)

    def test_half(self):
        pur, ent = purity_entropy([0.5, 0.5])
        assert pur == 0.5 and ent == pytest.approx(math.log(2), abs=1e-15)

    def test_55_45_against_high_precision(self):
        mpmath.mp.dps = 40
        exact = -sum(mpmath.mpf(x) * mpmath.log(mpmath.mpf(x)) for x in ("0.55", "0.45"))
        pur, ent = purity_entropy([0.55, 0.45])
        assert pur == pytest.approx(0.505, abs=1e-15)
        assert ent == pytest.approx(float(exact), abs=1e-15)
        assert ent == pytest.approx(0.688138813713588, abs=1e-14)

    def test_zeros_ignored(self):
        assert purity_entropy([0.7, 0.3, 0.0, 0.0]) == purity_entropy([0.7, 0.3])

    @given(arrays(np.float64, st.integers(1, 30), elements=st.floats(0, 1)))
    @settings(max_examples=80, deadline=None)
    def test_bounds(self, w):
        if w.sum() == 0:
            return
        p = np.sort(w / w.sum())[::-1]
        pur, ent = purity_entropy(p)
        assert 1 / len(p) - 1e-12 <= pur <= 1 + 1e-12
        assert -1e-12 <= ent <= math.log(len(p)) + 1e-12


@given(st.integers(2, 10), st.integers(2, 10), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_svd_oracle_property(n, m, seed):
    psi = random_state(np.random.default_rng(seed), n, m)
    k = min(n, m)
    a, b = schmidt_spectrum(psi, k), reduced_density_oracle(psi, k)
    np.testing.assert_allclose(a.p, b.p[:k], atol=1e-12)
    assert np.all(np.diff(a.p) <= 0)
