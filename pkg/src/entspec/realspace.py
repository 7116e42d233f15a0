"""Position-space densities of momentum-basis modes and their peak structure."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import SimConfig, resolution

PEAK_THRESHOLD = 0.1
SIDE_FRACTION = 0.9


@dataclass
class ModeDensity:
    t: float
    rank: int  # 1-based
    p: float
    M: int
    x: np.ndarray  # coordinates along each axis, [-L/2, L/2)
    density: np.ndarray  # (M,) or (M, M), axis 0 = first coordinate
    weighted: bool = False  # True: p * |psi|**2

    @property
    def d(self) -> int:
        return self.density.ndim

    def integral(self) -> float:
        dx = self.x[1] - self.x[0]
        return float(self.density.sum() * dx**self.d)


def position_grid(L: float, M: int) -> np.ndarray:
    return -L / 2 + L * np.arange(M) / M


def position_amplitude(mode: np.ndarray, cfg: SimConfig, M: int | None = None) -> np.ndarray:
    """``psi(x) = sum_n c_n exp(2 pi i n.x / L) / L**(d/2)`` on the uniform grid.

    With ``x_j = -L/2 + j L / M`` each exponential factors into
    ``(-1)**n exp(2 pi i n j / M)``, so the sum is an inverse FFT of the
    sign-alternated coefficients placed at ``n mod M``.
    """
    M = resolution(cfg) if M is None else M
    if M < 2 * (2 * cfg.n_max + 1):
        raise ValueError(f"M = {M} aliases the grid; need M >= {2 * (2 * cfg.n_max + 1)}")
    side = 2 * cfg.n_max + 1
    n = np.arange(-cfg.n_max, cfg.n_max + 1)
    c = np.asarray(mode, dtype=complex).reshape((side,) * cfg.d)
    spec = np.zeros((M,) * cfg.d, dtype=complex)
    signs = (-1.0) ** np.abs(n)
    if cfg.d == 1:
        spec[n % M] = c * signs
    else:
        spec[np.ix_(n % M, n % M)] = c * np.outer(signs, signs)
    return np.fft.ifftn(spec) * (M**cfg.d / cfg.L ** (cfg.d / 2))


def mode_to_position(mode: np.ndarray, cfg: SimConfig, M: int | None = None, *, t: float = 0.0,
                     rank: int = 1, p: float = 1.0, weighted: bool = False) -> ModeDensity:
    M = resolution(cfg) if M is None else M
    dens = np.abs(position_amplitude(mode, cfg, M)) ** 2
    if weighted:
        dens = p * dens
    return ModeDensity(t, rank, p, M, position_grid(cfg.L, M), dens, weighted)


def _values(density) -> np.ndarray:
    return density.density if isinstance(density, ModeDensity) else np.asarray(density, dtype=float)


def count_peaks(density, threshold_frac: float = PEAK_THRESHOLD) -> int:
    """Strict local maxima at least ``threshold_frac`` of the global maximum.

    Neighbours wrap around the periodic box; in 2D all eight neighbours count.
    """
    vals = _values(density)
    if vals.ndim not in (1, 2):
        raise ValueError("density must be 1D or 2D")
    is_peak = vals >= threshold_frac * vals.max()
    if vals.ndim == 1:
        shifts = [(-1,), (1,)]
    else:
        shifts = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]
    axes = tuple(range(vals.ndim))
    for s in shifts:
        is_peak &= vals > np.roll(vals, s, axis=axes)
    return int(is_peak.sum())


def split_transmitted_reflected(density: ModeDensity, t: float, cfg: SimConfig,
                                fraction: float = SIDE_FRACTION) -> str:
    """Classify a late-time particle-1 mode by which side of the collision point holds its mass.

    The collision point is the midpoint of the two initial packet centres.
    ``transmitted`` means at least ``fraction`` of the mass lies on the side
    particle 1 was heading towards, ``reflected`` the opposite side.
    """
    if density.d != 1:
        raise ValueError("side splitting is defined for 1D densities")
    centre = 0.5 * (cfg.packet1.X_c[0] + cfg.packet2.X_c[0])
    heading = math.copysign(1.0, cfg.packet1.N_c[0]) if cfg.packet1.N_c[0] != 0 else 0.0
    vals = density.density
    total = vals.sum()
    if total <= 0 or heading == 0:
        return "mixed"
    ahead = vals[(density.x - centre) * heading > 0].sum() / total
    if ahead >= fraction:
        return "transmitted"
    if 1.0 - ahead >= fraction:
        return "reflected"
    return "mixed"
