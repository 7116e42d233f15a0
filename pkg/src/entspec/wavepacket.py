"""Initial Gaussian packets in the momentum basis and their block projections."""
from __future__ import annotations

import math

import numpy as np

from .lattice import TAIL_MASS_LIMIT, ConfigError, PacketSpec, SimConfig, envelope_tail_mass, momentum_grid


def packet_coefficients(spec: PacketSpec, cfg: SimConfig) -> np.ndarray:
    """Normalised amplitudes ``c_n`` on the truncated grid.

    ``c_n ~ exp(-(N_c - n)**2 / (2 sigma)**2) * exp(-2 pi i X_c . n / L)``, with
    the global phase chosen so the amplitude at the grid point nearest ``N_c``
    is real and positive.
    """
    tail = envelope_tail_mass(spec.N_c, spec.sigma, cfg.n_max)
    if tail >= TAIL_MASS_LIMIT:
        raise ConfigError(f"packet envelope mass {tail:.3e} falls outside the grid (n_max={cfg.n_max})")
    grid = momentum_grid(cfg).astype(float)
    N_c = np.asarray(spec.N_c, dtype=float)
    X_c = np.asarray(spec.X_c, dtype=float)
    envelope = np.exp(-np.sum((N_c - grid) ** 2, axis=1) / (2.0 * spec.sigma) ** 2)
    nearest = np.floor(N_c + 0.5)
    phase = np.exp(-2j * math.pi * ((grid - nearest) @ X_c) / cfg.L)
    c = envelope * phase
    return c / np.linalg.norm(c)


def product_state(c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    return np.outer(c1, c2)


def project_to_blocks(psi: np.ndarray, blocks) -> list[np.ndarray]:
    """Coefficients of ``psi`` in each block's Hamiltonian eigenbasis."""
    return [blk.U.T @ psi[blk.idx1, blk.idx2] for blk in blocks]


def reconstruct(coeffs, blocks, G: int) -> np.ndarray:
    """Inverse of :func:`project_to_blocks`."""
    psi = np.zeros((G, G), dtype=complex)
    for a, blk in zip(coeffs, blocks):
        psi[blk.idx1, blk.idx2] = blk.U @ a
    return psi


def initial_state(cfg: SimConfig) -> np.ndarray:
    return product_state(packet_coefficients(cfg.packet1, cfg), packet_coefficients(cfg.packet2, cfg))
