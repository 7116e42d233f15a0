"""Conserved-total-momentum sectors of the two-particle Hamiltonian.

Two-particle basis states ``|n1, n2>`` are labelled by particle-1 and particle-2
grid momenta.  The interaction only changes the relative momentum, so each
sector of fixed ``N_tot = n1 + n2`` is invariant and is diagonalised on its own.
Blocks are real symmetric: the potential coefficients are real and even.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .lattice import SimConfig, grid_index, momentum_grid
from .parallel import pmap, resolve_threads, single_threaded_blas
from .potential import bare_delta_strength, fourier_coefficient

RESIDUAL_TOL = 1e-8


class NumericalError(RuntimeError):
    """A numerical contract (residual, conservation, normalisation) was violated."""


@dataclass
class MomentumBlock:
    key: tuple[int, ...]
    basis: np.ndarray  # (s, d) particle-1 momenta
    idx1: np.ndarray  # grid positions of n1
    idx2: np.ndarray  # grid positions of n2 = N_tot - n1
    E: np.ndarray | None = None
    U: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.basis.shape[0]


def block_size(key, n_max: int) -> int:
    return math.prod(2 * n_max + 1 - abs(int(k)) for k in key)


def enumerate_blocks(cfg: SimConfig) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """All ``(N_tot, basis)`` sectors, keys and bases in lexicographic order."""
    n = cfg.n_max
    out = []
    for key in itertools.product(range(-2 * n, 2 * n + 1), repeat=cfg.d):
        ranges = [range(max(-n, k - n), min(n, k + n) + 1) for k in key]
        basis = np.array(list(itertools.product(*ranges)), dtype=np.int64).reshape(-1, cfg.d)
        out.append((key, basis))
    return out


def total_dimension(cfg: SimConfig) -> int:
    """Sum of block sizes, counted without materialising the bases."""
    n = cfg.n_max
    side = sum(2 * n + 1 - abs(k) for k in range(-2 * n, 2 * n + 1))
    return side**cfg.d


def make_block(cfg: SimConfig, key, basis) -> MomentumBlock:
    key = tuple(int(k) for k in key)
    partner = np.asarray(key, dtype=np.int64)[None, :] - basis
    return MomentumBlock(key, basis, grid_index(basis, cfg.n_max), grid_index(partner, cfg.n_max))


def interaction_strength(cfg: SimConfig) -> float:
    """Coupling that enters the matrix elements (bare coupling when renormalised)."""
    pot = cfg.potential
    if pot.renormalize:
        return bare_delta_strength(pot.strength, cfg.mu, cfg.n_max, cfg.L, cfg.hbar)
    return pot.strength


def kinetic_energy(cfg: SimConfig, n1, n2) -> np.ndarray:
    n1 = np.asarray(n1, dtype=float).reshape(-1, cfg.d)
    n2 = np.asarray(n2, dtype=float).reshape(-1, cfg.d)
    pref = 2.0 * math.pi**2 * cfg.hbar**2 / cfg.L**2
    return pref * (np.sum(n1**2, axis=1) / cfg.m1 + np.sum(n2**2, axis=1) / cfg.m2)


def assemble_block(cfg: SimConfig, key, basis, strength: float | None = None) -> np.ndarray:
    """Dense real-symmetric Hamiltonian of one sector."""
    basis = np.asarray(basis, dtype=np.int64).reshape(-1, cfg.d)
    A = interaction_strength(cfg) if strength is None else strength
    offsets = basis[None, :, :] - basis[:, None, :]
    H = np.array(fourier_coefficient(cfg.potential, offsets, cfg.L, cfg.d, strength=A), dtype=float)
    H = H.reshape(basis.shape[0], basis.shape[0])
    partner = np.asarray(key, dtype=np.int64)[None, :] - basis
    H[np.diag_indices_from(H)] += kinetic_energy(cfg, basis, partner)
    return H


def fix_signs(U: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry positive (first one on ties)."""
    lead = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[lead, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def diagonalize_block(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and sign-fixed orthonormal eigenvectors."""
    H = np.asarray(H, dtype=float)
    if H.shape == (1, 1):
        return H[0].copy(), np.ones((1, 1))
    E, U = np.linalg.eigh(H)
    U = fix_signs(U)
    scale = max(float(np.max(np.abs(H))), np.finfo(float).tiny)
    resid = float(np.max(np.abs(H @ U - U * E)))
    if resid > RESIDUAL_TOL * scale:
        raise NumericalError(f"eigen-residual {resid:.3e} exceeds {RESIDUAL_TOL:g} * |H|")
    return E, U


def solve_blocks(cfg: SimConfig, threads: int | None = None) -> list[MomentumBlock]:
    """Enumerate, assemble and diagonalise every sector."""
    strength = interaction_strength(cfg)

    def work(item):
        key, basis = item
        blk = make_block(cfg, key, basis)
        blk.E, blk.U = diagonalize_block(assemble_block(cfg, key, basis, strength))
        return blk

    with single_threaded_blas():
        return pmap(work, enumerate_blocks(cfg), resolve_threads(threads))


def full_hamiltonian(cfg: SimConfig) -> np.ndarray:
    """Whole truncated two-particle Hamiltonian, straight from the matrix-element formula.

    Row/column ``i1 * G + i2`` is ``|n1, n2>``.  Only meant for tiny grids.
    """
    grid = momentum_grid(cfg)
    G = grid.shape[0]
    n1 = np.repeat(grid, G, axis=0)
    n2 = np.tile(grid, (G, 1))
    total = n1 + n2
    same_total = np.all(total[:, None, :] == total[None, :, :], axis=-1)
    dn1 = n1[None, :, :] - n1[:, None, :]
    V = np.asarray(fourier_coefficient(cfg.potential, dn1, cfg.L, cfg.d, strength=interaction_strength(cfg)))
    H = np.where(same_total, V, 0.0)
    H[np.diag_indices_from(H)] += kinetic_energy(cfg, n1, n2)
    return H


# --- on-disk block-spectrum cache -------------------------------------------------

CACHE_FORMAT = 1


def cache_key(cfg: SimConfig) -> str:
    """Content hash of everything that determines the block spectra."""
    physics = {
        "d": cfg.d, "L": cfg.L, "m1": cfg.m1, "m2": cfg.m2, "hbar": cfg.hbar,
        "n_max": cfg.n_max, "potential": asdict(cfg.potential), "format": CACHE_FORMAT,
    }
    blob = json.dumps(physics, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def save_blocks(root, cfg: SimConfig, blocks: list[MomentumBlock]) -> Path:
    """Write ``<root>/<hash>/blocks.bin`` (E then U per block, float64) plus a JSON manifest."""
    target = Path(root) / cache_key(cfg)
    target.mkdir(parents=True, exist_ok=True)
    records = []
    offset = 0
    tmp = target / "blocks.bin.tmp"
    with tmp.open("wb") as fh:
        for blk in blocks:
            E = np.ascontiguousarray(blk.E, dtype="<f8")
            U = np.ascontiguousarray(blk.U, dtype="<f8")
            fh.write(E.tobytes())
            fh.write(U.tobytes())
            records.append({"key": list(blk.key), "size": blk.size, "offset": offset})
            offset += E.nbytes + U.nbytes
    tmp.replace(target / "blocks.bin")
    manifest = {"format": CACHE_FORMAT, "key": cache_key(cfg), "d": cfg.d, "n_max": cfg.n_max,
                "dtype": "<f8", "blocks": records}
    (target / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return target


def load_blocks(root, cfg: SimConfig) -> list[MomentumBlock] | None:
    """Blocks for ``cfg`` from the cache, or None on a miss."""
    target = Path(root) / cache_key(cfg)
    man_path, bin_path = target / "manifest.json", target / "blocks.bin"
    if not (man_path.exists() and bin_path.exists()):
        return None
    manifest = json.loads(man_path.read_text(encoding="utf-8"))
    if manifest.get("format") != CACHE_FORMAT:
        return None
    raw = np.fromfile(bin_path, dtype="<f8")
    layout = dict((tuple(k), b) for k, b in enumerate_blocks(cfg))
    out = []
    for rec in manifest["blocks"]:
        key = tuple(rec["key"])
        s = rec["size"]
        start = rec["offset"] // 8
        blk = make_block(cfg, key, layout[key])
        blk.E = raw[start:start + s].copy()
        blk.U = raw[start + s:start + s + s * s].reshape(s, s).copy()
        out.append(blk)
    return out


def cached_solve_blocks(cfg: SimConfig, cache_dir=None, threads: int | None = None) -> list[MomentumBlock]:
    if cache_dir is not None:
        hit = load_blocks(cache_dir, cfg)
        if hit is not None:
            return hit
    blocks = solve_blocks(cfg, threads)
    if cache_dir is not None:
        save_blocks(cache_dir, cfg, blocks)
    return blocks
