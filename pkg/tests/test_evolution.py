import numpy as np
import pytest

from entspec.blocks import NumericalError, solve_blocks
from entspec.evolution import (ConservedReport, assemble_matrix, check_drift, conserved_report, drift_summary,
                               evolve_chunks, evolve_series, evolve_to, momentum_scale)
from entspec.lattice import sample_times
from entspec.wavepacket import initial_state, project_to_blocks

from helpers import small


@pytest.fixture(scope="module")
def setup():
    cfg = small(n_max=12, A=60.0, sigma=0.8, nc=3.0, n_samples=9)
    blocks = solve_blocks(cfg)
    psi0 = initial_state(cfg)
    return cfg, blocks, psi0, project_to_blocks(psi0, blocks)


def test_zero_time_is_identity(setup):
    cfg, blocks, psi0, a0 = setup
    for x, y in zip(evolve_to(a0, blocks, 0.0), a0):
        assert np.array_equal(x, y)
    assert np.max(np.abs(assemble_matrix(a0, blocks, cfg.grid_size).psi - psi0)) < 1e-12


def test_phases_keep_norm(setup):
    _, blocks, _, a0 = setup
    before = sum(np.sum(np.abs(a) ** 2) for a in a0)
    after = sum(np.sum(np.abs(a) ** 2) for a in evolve_to(a0, blocks, 0.37))
    assert abs(after - before) < 1e-14


def test_negative_time_rejected(setup):
    _, blocks, _, a0 = setup
    with pytest.raises(ValueError):
        evolve_to(a0, blocks, -1.0)


def test_series_matches_pointwise(setup, monkeypatch):
    cfg, blocks, _, a0 = setup
    times = sample_times(cfg)
    import entspec.evolution as ev
    monkeypatch.setattr(ev, "CHUNK_BYTES", 3 * cfg.grid_size**2 * 16)  # force several chunks
    chunks = list(evolve_chunks(a0, blocks, times, cfg.grid_size, threads=2))
    assert [len(c) for c in chunks] == [3, 3, 3]
    series = [s for c in chunks for s in c]
    for state, t in zip(series, times):
        direct = assemble_matrix(evolve_to(a0, blocks, t), blocks, cfg.grid_size, t)
        assert state.t == t
        assert np.max(np.abs(state.psi - direct.psi)) < 1e-13


def test_free_evolution_stays_product():
    cfg = small(n_max=10, A=0.0, sigma=0.8, nc=3.0)
    blocks = solve_blocks(cfg)
    a0 = project_to_blocks(initial_state(cfg), blocks)
    for t in (0.001, 0.01, 0.3):
        s = np.linalg.svd(assemble_matrix(evolve_to(a0, blocks, t), blocks, cfg.grid_size).psi, compute_uv=False)
        assert s[1] < 1e-12


def test_conservation(setup):
    cfg, blocks, psi0, a0 = setup
    states = list(evolve_series(a0, blocks, sample_times(cfg), cfg.grid_size))
    reports = conserved_report(states, a0, blocks, cfg)
    assert all(np.allclose(r.momentum, 0.0, atol=1e-12) for r in reports)  # symmetric head-on set-up
    summary = check_drift(reports, momentum_scale(psi0, cfg))
    assert summary.norm <= 1e-10
    assert max(summary.energy, summary.energy_reassembled, summary.momentum) <= 1e-9


def test_conserved_report_needs_series(setup):
    cfg, blocks, _, a0 = setup
    with pytest.raises(ValueError):
        conserved_report([assemble_matrix(a0, blocks, cfg.grid_size)], a0, blocks, cfg)


def test_drift_flags():
    good = ConservedReport(0.0, 1.0, 10.0, 10.0, np.zeros(1))
    bad = ConservedReport(1.0, 1.0 + 1e-8, 10.0 + 1e-6, 10.0, np.array([1e-3]))
    summary = drift_summary([good, bad], p_scale=1.0)
    flags = summary.flags()
    assert len(flags) == 3
    with pytest.raises(NumericalError):
        check_drift([good, bad], 1.0)
