"""Configuration, units, the truncated momentum grid and derived physical scales."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .potential import PotentialSpec, reduced_mass

# envelope mass allowed outside the truncated grid
TAIL_MASS_LIMIT = 1e-12
SPREADING_RATIO_LIMIT = 0.25


class ConfigError(ValueError):
    """Configuration is invalid (bad value, violated invariant, parse failure)."""


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian packet: central momentum and width in grid units, position in length units."""

    N_c: tuple[float, ...]
    X_c: tuple[float, ...]
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "N_c", tuple(float(v) for v in np.atleast_1d(self.N_c)))
        object.__setattr__(self, "X_c", tuple(float(v) for v in np.atleast_1d(self.X_c)))
        object.__setattr__(self, "sigma", float(self.sigma))


@dataclass(frozen=True)
class SimConfig:
    d: int = 1
    L: float = 1.0
    m1: float = 1.0
    m2: float = 1.0
    hbar: float = 1.0
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    packet1: PacketSpec = field(default_factory=lambda: PacketSpec((-10.0,), (0.25,), 1.5))
    packet2: PacketSpec = field(default_factory=lambda: PacketSpec((10.0,), (-0.25,), 1.5))
    n_max: int = 101
    # None selects the collision-free window, see default_t_end
    t_end: float | None = None
    n_samples: int = 81
    K: int = 20
    # real-space grid points per axis for mode densities; None -> default_resolution
    M: int | None = None
    mode_samples: tuple[int, ...] = (-1,)
    mode_ranks: int = 6

    @property
    def grid_size(self) -> int:
        return (2 * self.n_max + 1) ** self.d

    @property
    def mu(self) -> float:
        return reduced_mass(self.m1, self.m2)

    def with_changes(self, **kw) -> "SimConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class DerivedScales:
    delta_p: float
    delta_x: float
    v_central: float
    t0: float
    ratio_sigma_nc: float


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "ERROR" or "WARNING"
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


def _packet_mass(which: int, cfg: SimConfig) -> tuple[PacketSpec, float]:
    if which in (1, "1", "packet1"):
        return cfg.packet1, cfg.m1
    if which in (2, "2", "packet2"):
        return cfg.packet2, cfg.m2
    raise ValueError(f"particle must be 1 or 2, got {which!r}")


def derived_scales(cfg: SimConfig, which=1) -> DerivedScales:
    """Momentum/position uncertainty, central velocity and the coincidence time t0.

    ``n_c`` and ``x_c`` are the magnitudes of the first components of the
    packet's ``N_c`` and ``X_c``.
    """
    pk, m = _packet_mass(which, cfg)
    n_c = abs(pk.N_c[0])
    x_c = abs(pk.X_c[0])
    if n_c == 0:
        raise ValueError("t0 needs head-on motion: first component of N_c is zero")
    two_pi_hbar = 2.0 * math.pi * cfg.hbar
    return DerivedScales(
        delta_p=two_pi_hbar * pk.sigma / cfg.L,
        delta_x=cfg.L / (4.0 * math.pi * pk.sigma),
        v_central=two_pi_hbar * n_c / (cfg.L * m),
        t0=x_c * cfg.L * m / (two_pi_hbar * n_c),
        ratio_sigma_nc=pk.sigma / n_c,
    )


def default_t_end(cfg: SimConfig) -> float:
    """End of the sampled window when ``cfg.t_end`` is unset.

    In the periodic box the relative coordinate starts ``2 x_c`` from the
    collision point and reaches its next image a further ``L`` later, so the
    first re-collision happens at ``t0 (1 + L / (2 x_c))``.  The default stops
    halfway between the collision and the re-collision, at
    ``t0 (1 + L / (4 x_c))`` (``2 t0`` for ``x_c = L/4``).
    """
    t0 = derived_scales(cfg, 1).t0
    x_c = abs(cfg.packet1.X_c[0])
    return t0 * (1.0 + cfg.L / (4.0 * x_c))


def resolved_t_end(cfg: SimConfig) -> float:
    return default_t_end(cfg) if cfg.t_end is None else cfg.t_end


def sample_times(cfg: SimConfig) -> np.ndarray:
    t_end = resolved_t_end(cfg)
    return np.array([j * t_end / (cfg.n_samples - 1) for j in range(cfg.n_samples)])


def default_resolution(cfg: SimConfig) -> int:
    """Smallest power of two that clears the aliasing limit ``2 (2 n_max + 1)``."""
    need = 2 * (2 * cfg.n_max + 1)
    return 1 << (need - 1).bit_length()


def resolution(cfg: SimConfig) -> int:
    return default_resolution(cfg) if cfg.M is None else cfg.M


def momentum_grid(cfg: SimConfig) -> np.ndarray:
    """All integer momentum vectors of the truncated grid, lexicographic, shape (G**d, d)."""
    axis = range(-cfg.n_max, cfg.n_max + 1)
    return np.array(list(itertools.product(axis, repeat=cfg.d)), dtype=np.int64).reshape(-1, cfg.d)


def grid_index(vectors, n_max: int) -> np.ndarray:
    """Position of momentum vectors in :func:`momentum_grid` (mixed radix)."""
    v = np.asarray(vectors, dtype=np.int64)
    if v.ndim == 1:
        v = v[:, None]
    side = 2 * n_max + 1
    idx = np.zeros(v.shape[0], dtype=np.int64)
    for c in range(v.shape[1]):
        idx = idx * side + (v[:, c] + n_max)
    return idx


def grid_vector(index, n_max: int, d: int) -> np.ndarray:
    """Inverse of :func:`grid_index`."""
    idx = np.asarray(index, dtype=np.int64).copy()
    side = 2 * n_max + 1
    out = np.empty(idx.shape + (d,), dtype=np.int64)
    for c in reversed(range(d)):
        out[..., c] = idx % side - n_max
        idx //= side
    return out


def envelope_tail_mass(N_c, sigma: float, n_max: int) -> float:
    """Fraction of the squared Gaussian envelope lying outside ``[-n_max, n_max]^d``.

    The full-lattice normalisation is summed over a window wide enough that the
    neglected remainder is below double precision.
    """
    log_inside = 0.0
    reach = int(math.ceil(40.0 * sigma)) + 2
    for centre in np.atleast_1d(N_c):
        base = int(math.floor(centre))
        n = np.arange(min(base - reach, -n_max), max(base + reach, n_max) + 1)
        w = np.exp(-((n - centre) ** 2) / (2.0 * sigma**2))
        outside = w[(n < -n_max) | (n > n_max)].sum() / w.sum()
        log_inside += math.log1p(-outside)
    return -math.expm1(log_inside)


def _free_width(delta_x0: float, hbar: float, m: float, t: float) -> float:
    return delta_x0 * math.sqrt(1.0 + (hbar * t / (2.0 * m * delta_x0**2)) ** 2)


def validate_config(cfg: SimConfig) -> list[Diagnostic]:
    """Check hard invariants (ERROR) and the scattering-regime assumptions (WARNING)."""
    out: list[Diagnostic] = []

    def err(msg):
        out.append(Diagnostic("ERROR", msg))

    def warn(msg):
        out.append(Diagnostic("WARNING", msg))

    if cfg.d not in (1, 2):
        err(f"dimension d must be 1 or 2, got {cfg.d}")
        return out
    for name in ("L", "m1", "m2", "hbar"):
        if not getattr(cfg, name) > 0:
            err(f"{name} must be positive, got {getattr(cfg, name)}")
    if not isinstance(cfg.n_max, (int, np.integer)) or cfg.n_max < 1:
        err(f"n_max must be an integer >= 1, got {cfg.n_max}")
    if cfg.n_samples < 2:
        err(f"n_samples must be >= 2, got {cfg.n_samples}")
    if cfg.t_end is not None and not cfg.t_end > 0:
        err(f"t_end must be positive, got {cfg.t_end}")
    if cfg.mode_ranks < 0:
        err(f"mode_ranks must be >= 0, got {cfg.mode_ranks}")
    pot = cfg.potential
    if pot.kind == "gaussian" and not pot.width > 0:
        err("gaussian potential requires width > 0")
    if pot.renormalize and cfg.d != 1:
        err("cutoff renormalisation of the delta coupling is defined for d = 1 only")
    if out:
        return out

    G = cfg.grid_size
    if not 1 <= cfg.K <= G:
        err(f"K must lie in [1, {G}], got {cfg.K}")
    if cfg.M is not None and cfg.M < 2 * (2 * cfg.n_max + 1):
        err(f"M = {cfg.M} aliases the grid; need M >= {2 * (2 * cfg.n_max + 1)}")
    for j in cfg.mode_samples:
        if not -cfg.n_samples <= j < cfg.n_samples:
            err(f"mode sample index {j} outside the time grid of {cfg.n_samples} samples")

    for label, pk in (("packet1", cfg.packet1), ("packet2", cfg.packet2)):
        if len(pk.N_c) != cfg.d or len(pk.X_c) != cfg.d:
            err(f"{label}: N_c and X_c need {cfg.d} components")
            continue
        if not pk.sigma > 0:
            err(f"{label}: sigma must be positive, got {pk.sigma}")
            continue
        for c, nc in enumerate(pk.N_c):
            if not -cfg.n_max < nc < cfg.n_max:
                err(f"{label}: N_c component {c} = {nc} is not strictly inside [-{cfg.n_max}, {cfg.n_max}]")
        for c, xc in enumerate(pk.X_c):
            if not abs(xc) < cfg.L / 2:
                err(f"{label}: X_c component {c} = {xc} is not inside (-L/2, L/2)")
        if any(e.level == "ERROR" for e in out):
            continue
        tail = envelope_tail_mass(pk.N_c, pk.sigma, cfg.n_max)
        if tail >= TAIL_MASS_LIMIT:
            err(f"{label}: packet envelope mass {tail:.3e} lies outside the momentum grid "
                f"(limit {TAIL_MASS_LIMIT:g}); increase n_max or move N_c inward")
    if out:
        return out

    if pot.kind == "gaussian" and not pot.width < cfg.L / 10:
        warn(f"potential width {pot.width} is not short-range (needs w < L/10 = {cfg.L / 10})")

    scales = []
    for which, pk, m in ((1, cfg.packet1, cfg.m1), (2, cfg.packet2, cfg.m2)):
        n_c = abs(pk.N_c[0])
        if n_c == 0 or pk.sigma / n_c > SPREADING_RATIO_LIMIT:
            ratio = math.inf if n_c == 0 else pk.sigma / n_c
            warn(f"packet{which}: wavepacket spreading regime violated "
                 f"(sigma/n_c = {ratio:.3g} > {SPREADING_RATIO_LIMIT})")
            continue
        scales.append((pk, m, derived_scales(cfg, which)))

    dx_max = max(cfg.L / (4.0 * math.pi * pk.sigma) for pk in (cfg.packet1, cfg.packet2))
    sep = np.array(cfg.packet1.X_c) - np.array(cfg.packet2.X_c)
    sep -= cfg.L * np.round(sep / cfg.L)
    if float(np.linalg.norm(sep)) < 4.0 * dx_max:
        warn(f"packets overlap initially: centre separation {np.linalg.norm(sep):.4g} < 4 dx = {4 * dx_max:.4g}")

    if len(scales) == 2:
        t_end = resolved_t_end(cfg)
        for which, (pk, m, sc) in enumerate(scales, start=1):
            velocity = 2.0 * math.pi * cfg.hbar * np.array(pk.N_c) / (cfg.L * m)
            reach = float(np.max(np.abs(np.array(pk.X_c) + velocity * t_end)))
            reach += 2.0 * _free_width(sc.delta_x, cfg.hbar, m, t_end)
            if reach > cfg.L / 2:
                warn(f"packet{which} approaches the periodic boundary by t_end "
                     f"(|X_c| + travel + 2 dx(t) = {reach:.4g} > L/2)")
    return out


def errors(diags: list[Diagnostic]) -> list[Diagnostic]:
    return [x for x in diags if x.level == "ERROR"]


def require_valid(cfg: SimConfig) -> list[Diagnostic]:
    """Raise :class:`ConfigError` on any ERROR diagnostic; return the warnings."""
    diags = validate_config(cfg)
    bad = errors(diags)
    if bad:
        raise ConfigError("; ".join(str(x) for x in bad))
    return diags


def scale_box(cfg: SimConfig, factor: int) -> SimConfig:
    """Same physical experiment in a box ``factor`` times larger.

    Physical momenta and positions are held fixed: grid-unit momenta, widths and
    ``n_max`` scale with the box while ``X_c``, the potential and the time
    window stay as they are.
    """
    if factor < 1 or int(factor) != factor:
        raise ValueError("box scale factor must be a positive integer")
    factor = int(factor)

    def grow(pk):
        return PacketSpec(tuple(v * factor for v in pk.N_c), pk.X_c, pk.sigma * factor)

    return replace(
        cfg,
        L=cfg.L * factor,
        n_max=cfg.n_max * factor,
        packet1=grow(cfg.packet1),
        packet2=grow(cfg.packet2),
        t_end=resolved_t_end(cfg),
        M=None if cfg.M is None else cfg.M * factor,
    )
