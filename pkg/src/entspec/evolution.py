"""Exact spectral time evolution of the block-expanded two-particle state."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import MomentumBlock, NumericalError
from .lattice import SimConfig, momentum_grid
from .parallel import pmap

NORM_TOL = 1e-10
DRIFT_TOL = 1e-9
# cap on the (n_times, G, G) complex buffer built per chunk of sample times
CHUNK_BYTES = 256 * 2**20


@dataclass
class CoefficientMatrix:
    psi: np.ndarray  # rows: particle-1 grid index, columns: particle-2 grid index
    t: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))


@dataclass
class ConservedReport:
    t: float
    norm: float
    energy: float  # sum E |a|^2 over block eigencoefficients
    energy_reassembled: float  # same, after re-projecting the reassembled matrix
    momentum: np.ndarray  # <P_tot>, one entry per dimension


def _rmatmul(U: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Real ``U`` times complex ``X`` without promoting ``U`` to complex."""
    X = np.ascontiguousarray(X, dtype=complex)
    shape = X.shape
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    out = (U @ X.view(float)).view(complex)
    return out.reshape((U.shape[0],) + shape[1:])


def evolve_to(coeffs, blocks, t: float, hbar: float = 1.0) -> list[np.ndarray]:
    """Phase each eigencoefficient by ``exp(-i E t / hbar)``."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    return [a * np.exp(-1j * blk.E * (t / hbar)) for a, blk in zip(coeffs, blocks)]


def assemble_matrix(coeffs, blocks, G: int, t: float = 0.0) -> CoefficientMatrix:
    psi = np.zeros((G, G), dtype=complex)
    for a, blk in zip(coeffs, blocks):
        psi[blk.idx1, blk.idx2] = _rmatmul(blk.U, a)
    return CoefficientMatrix(psi, t)


def evolve_chunks(coeffs, blocks: list[MomentumBlock], times, G: int, hbar: float = 1.0,
                  threads: int = 1):
    """Yield lists of ``CoefficientMatrix``, covering the sample times in order.

    Each block maps its coefficients to all of a chunk's times with one real
    matrix product and scatters the result into a shared buffer; the buffer is
    capped at ``CHUNK_BYTES``.
    """
    times = np.asarray(times, dtype=float)
    chunk = max(1, min(len(times), CHUNK_BYTES // (G * G * 16)))
    work = list(zip(coeffs, blocks))
    for start in range(0, len(times), chunk):
        ts = times[start:start + chunk]

        def block_columns(item, ts=ts):
            a, blk = item
            phased = a[:, None] * np.exp(-1j * np.outer(blk.E, ts / hbar))
            return _rmatmul(blk.U, phased)

        cols = pmap(block_columns, work, threads)
        buf = np.zeros((len(ts), G, G), dtype=complex)
        for (_, blk), c in zip(work, cols):
            buf[:, blk.idx1, blk.idx2] = c.T
        yield [CoefficientMatrix(buf[j], float(t)) for j, t in enumerate(ts)]


def evolve_series(coeffs, blocks, times, G: int, hbar: float = 1.0, threads: int = 1):
    """Yield ``CoefficientMatrix`` for every sample time, in order."""
    for chunk in evolve_chunks(coeffs, blocks, times, G, hbar, threads):
        yield from chunk


def block_energy(coeffs, blocks) -> float:
    # fixed block order keeps the reduction reproducible
    parts = np.array([float(np.dot(blk.E, np.abs(a) ** 2)) for a, blk in zip(coeffs, blocks)])
    return float(math.fsum(parts))


def total_momentum(psi: np.ndarray, cfg: SimConfig) -> np.ndarray:
    grid = momentum_grid(cfg).astype(float)
    prob = np.abs(psi) ** 2
    w1 = prob.sum(axis=1)
    w2 = prob.sum(axis=0)
    return (2.0 * math.pi * cfg.hbar / cfg.L) * (w1 @ grid + w2 @ grid)


def momentum_scale(psi: np.ndarray, cfg: SimConfig) -> float:
    """``<|p1| + |p2|>``, the yardstick for total-momentum drift."""
    grid = momentum_grid(cfg).astype(float)
    mag = np.linalg.norm(grid, axis=1)
    prob = np.abs(psi) ** 2
    return (2.0 * math.pi * cfg.hbar / cfg.L) * float(prob.sum(axis=1) @ mag + prob.sum(axis=0) @ mag)


def conserved_quantities(state: CoefficientMatrix, coeffs_t, blocks, cfg: SimConfig) -> ConservedReport:
    reprojected = [_rmatmul(blk.U.T, state.psi[blk.idx1, blk.idx2]) for blk in blocks]
    return ConservedReport(
        t=state.t,
        norm=state.norm,
        energy=block_energy(coeffs_t, blocks),
        energy_reassembled=block_energy(reprojected, blocks),
        momentum=total_momentum(state.psi, cfg),
    )


def conserved_report(states, coeffs0, blocks, cfg: SimConfig) -> list[ConservedReport]:
    """Conserved quantities for a series of states evolved from ``coeffs0``."""
    states = list(states)
    if len(states) < 2:
        raise ValueError("need at least two samples")
    return [conserved_quantities(s, evolve_to(coeffs0, blocks, s.t, cfg.hbar), blocks, cfg) for s in states]


@dataclass
class DriftSummary:
    norm: float
    energy: float
    energy_reassembled: float
    momentum: float

    def flags(self, norm_tol=NORM_TOL, drift_tol=DRIFT_TOL) -> list[str]:
        out = []
        if self.norm > norm_tol:
            out.append(f"norm drift {self.norm:.3e} > {norm_tol:g}")
        for name in ("energy", "energy_reassembled", "momentum"):
            val = getattr(self, name)
            if val > drift_tol:
                out.append(f"{name} relative drift {val:.3e} > {drift_tol:g}")
        return out


def drift_summary(reports: list[ConservedReport], p_scale: float) -> DriftSummary:
    """Worst deviations over the run.

    Norm drift is ``max |norm - 1|``.  Energy drift is relative to ``|<H>(0)|``;
    momentum drift is relative to ``max(|<P>(0)|, p_scale)`` since the symmetric
    set-up has ``<P_tot> = 0``.
    """
    first = reports[0]
    e0 = abs(first.energy) or 1.0
    p0 = max(float(np.linalg.norm(first.momentum)), p_scale) or 1.0
    return DriftSummary(
        norm=max(abs(r.norm - 1.0) for r in reports),
        energy=max(abs(r.energy - first.energy) for r in reports) / e0,
        energy_reassembled=max(abs(r.energy_reassembled - first.energy) for r in reports) / e0,
        momentum=max(float(np.linalg.norm(r.momentum - first.momentum)) for r in reports) / p0,
    )


def check_drift(reports, p_scale: float, norm_tol=NORM_TOL, drift_tol=DRIFT_TOL) -> DriftSummary:
    summary = drift_summary(reports, p_scale)
    bad = summary.flags(norm_tol, drift_tol)
    if bad:
        raise NumericalError("; ".join(bad))
    return summary
