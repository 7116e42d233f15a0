"""Entanglement spectrum of the two-particle state and tracking of its modes.

The state matrix ``psi[n1, n2]`` has the singular value decomposition
``psi = sum_n s_n u_n v_n^T``; the reduced density operator of particle 1 is
``psi psi^dagger`` with eigenvalues ``p_n = s_n**2`` and eigenvectors ``u_n``.
The SVD route is the production path; forming ``psi psi^dagger`` is kept as an
independent check for small grids.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10
AMBIGUOUS_OVERLAP = 0.5


@dataclass
class EntanglementSnapshot:
    t: float
    p: np.ndarray  # descending, length K
    modes: np.ndarray  # (G, K) particle-1 momentum-basis eigenvectors, as columns
    residual: float  # spectral weight beyond the K tracked values

    @property
    def K(self) -> int:
        return self.p.shape[0]


@dataclass
class ModeTrack:
    step: int  # matches snapshot step -> step + 1
    permutation: np.ndarray  # permutation[i] = rank at step+1 of the mode ranked i at step
    overlaps: np.ndarray  # |<mode_i(step) | mode_perm[i](step+1)>|
    ambiguous: list[int]  # ranks whose best overlap was below AMBIGUOUS_OVERLAP


def fix_phases(modes: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real and positive."""
    lead = np.argmax(np.abs(modes), axis=0)
    vals = modes[lead, np.arange(modes.shape[1])]
    mag = np.abs(vals)
    rot = np.where(mag > 0, np.conj(vals) / np.where(mag > 0, mag, 1.0), 1.0)
    return modes * rot


def schmidt_spectrum(psi: np.ndarray, K: int, t: float = 0.0) -> EntanglementSnapshot:
    U, s, _ = np.linalg.svd(psi, full_matrices=False)
    p = s**2
    K = min(K, p.shape[0])
    return EntanglementSnapshot(t, p[:K].copy(), fix_phases(U[:, :K]), float(math.fsum(p[K:])))


def particle2_spectrum(psi: np.ndarray) -> np.ndarray:
    """Spectrum of the other particle, ``psi^T conj(psi)`` eigenvalues, via the transpose."""
    return np.linalg.svd(psi.T, compute_uv=False) ** 2


def reduced_density(psi: np.ndarray) -> np.ndarray:
    """``rho1[n1, n1'] = sum_n2 psi[n1, n2] conj(psi[n1', n2])``."""
    return psi @ psi.conj().T


def reduced_density_oracle(psi: np.ndarray, K: int, t: float = 0.0) -> EntanglementSnapshot:
    """Top-K eigenpairs of the explicitly formed reduced density matrix."""
    rho = reduced_density(psi)
    asym = float(np.max(np.abs(rho - rho.conj().T)))
    if asym > HERMITIAN_TOL:
        raise ValueError(f"reduced density matrix is not Hermitian (deviation {asym:.2e})")
    rho = 0.5 * (rho + rho.conj().T)
    w, V = np.linalg.eigh(rho)
    if w[0] < -HERMITIAN_TOL:
        raise ValueError(f"reduced density matrix has negative eigenvalue {w[0]:.2e}")
    w, V = w[::-1], V[:, ::-1]
    K = min(K, w.shape[0])
    return EntanglementSnapshot(t, w[:K].copy(), fix_phases(V[:, :K]), float(math.fsum(w[K:])))


def match_modes(before: np.ndarray, after: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Greedy maximum-overlap assignment between two sets of mode columns."""
    O = np.abs(before.conj().T @ after)
    K = O.shape[0]
    perm = np.full(K, -1, dtype=np.int64)
    best = np.zeros(K)
    work = O.copy()
    for _ in range(K):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        perm[i], best[i] = j, O[i, j]
        work[i, :] = -1.0
        work[:, j] = -1.0
    return perm, best


def track_modes(snapshots: list[EntanglementSnapshot]) -> list[ModeTrack]:
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    if len({s.K for s in snapshots}) != 1:
        raise ValueError("snapshots track different numbers of modes")
    out = []
    for j in range(len(snapshots) - 1):
        perm, best = match_modes(snapshots[j].modes, snapshots[j + 1].modes)
        amb = [int(i) for i in np.flatnonzero(best < AMBIGUOUS_OVERLAP)]
        out.append(ModeTrack(j, perm, best, amb))
    return out


def swap_events(tracks: list[ModeTrack], a: int = 0, b: int = 1) -> list[int]:
    """Steps at which the modes ranked ``a`` and ``b`` (0-based) exchange ranks."""
    return [tr.step for tr in tracks if tr.permutation[a] == b and tr.permutation[b] == a]


def purity_entropy(p, r: float = 0.0) -> tuple[float, float]:
    """Purity ``sum p**2`` and von Neumann entropy ``-sum p ln p`` of the tracked values.

    The untracked weight ``r`` does not enter either number.
    """
    p = np.asarray(p, dtype=float)
    pos = p[p > 0]
    return float(math.fsum(p**2)), float(-math.fsum(pos * np.log(pos)))
