"""Run orchestration, convergence harness and deterministic output files."""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .blocks import NumericalError, block_size, cached_solve_blocks, interaction_strength, total_dimension
from .configfile import emit_config, relative_momentum
from .entanglement import (EntanglementSnapshot, ModeTrack, purity_entropy, schmidt_spectrum, swap_events,
                           track_modes)
from .evolution import (DRIFT_TOL, NORM_TOL, ConservedReport, DriftSummary, conserved_quantities, drift_summary,
                        evolve_chunks, evolve_to, momentum_scale)
from .lattice import ConfigError, SimConfig, derived_scales, require_valid, resolution, resolved_t_end, sample_times, \
    scale_box
from .parallel import pmap, resolve_threads, single_threaded_blas
from .potential import delta_transmission, gaussian_transmission, truncated_delta_transmission
from .realspace import ModeDensity, mode_to_position
from .wavepacket import initial_state, project_to_blocks

CONVERGENCE_TOL = 5e-3
CONVERGENCE_RANKS = 5
SUM_RULE_TOL = 1e-10


@dataclass
class SpectrumSeries:
    t: np.ndarray
    t_over_t0: np.ndarray
    p: np.ndarray  # (n_samples, K)
    purity: np.ndarray
    entropy: np.ndarray
    residual: np.ndarray

    @property
    def K(self) -> int:
        return self.p.shape[1]

    def header(self) -> list[str]:
        return ["t", "t_over_t0"] + [f"p{k}" for k in range(1, self.K + 1)] + ["purity", "entropy", "residual"]

    def rows(self):
        for j in range(len(self.t)):
            yield [self.t[j], self.t_over_t0[j], *self.p[j], self.purity[j], self.entropy[j], self.residual[j]]


@dataclass
class RunResult:
    cfg: SimConfig
    series: SpectrumSeries
    snapshots: list[EntanglementSnapshot]
    tracks: list[ModeTrack]
    conserved: list[ConservedReport]
    drift: DriftSummary
    densities: list[ModeDensity]
    manifest: dict
    warnings: list[str] = field(default_factory=list)
    blocks: list | None = None

    @property
    def t0(self) -> float:
        return self.manifest["time_grid"]["t0"]


def _fmt(x) -> str:
    return "%.17g" % float(x)


def scattering_oracle(cfg: SimConfig) -> dict:
    """Analytic (delta) or integrated (1D gaussian) transmission at the central momentum."""
    p = relative_momentum(cfg)
    pot = cfg.potential
    out = {"relative_momentum": p, "reduced_mass": cfg.mu}
    if p == 0:
        return out
    if pot.kind == "delta":
        cont = delta_transmission(pot.strength, cfg.mu, p, cfg.hbar)
        out.update(T=cont.transmission, R=cont.reflection)
        if cfg.d == 1:
            trunc = truncated_delta_transmission(interaction_strength(cfg), cfg.mu, p, cfg.n_max, cfg.L, cfg.hbar)
            out.update(T_truncated=trunc.transmission, R_truncated=trunc.reflection)
    elif cfg.d == 1:
        g = gaussian_transmission(pot.strength, pot.width, cfg.mu, p, cfg.hbar)
        out.update(T=g.transmission, R=g.reflection)
    return out


def _scales_dict(cfg: SimConfig) -> dict:
    out = {}
    for which in (1, 2):
        try:
            out[f"particle{which}"] = asdict(derived_scales(cfg, which))
        except ValueError as exc:
            out[f"particle{which}"] = {"error": str(exc)}
    return out


def run_simulation(cfg: SimConfig, threads: int | None = None, cache_dir=None, keep_blocks: bool = False,
                   check: bool = True) -> RunResult:
    """Blocks -> projection -> evolution -> entanglement spectrum -> mode densities.

    With ``check`` a violated conservation or sum-rule tolerance raises
    :class:`NumericalError`.
    """
    warnings = [str(w) for w in require_valid(cfg)]
    threads = resolve_threads(threads)
    timings = {}
    phase = "setup"
    try:
        with single_threaded_blas():
            phase = "blocks"
            t_start = time.perf_counter()
            blocks = cached_solve_blocks(cfg, cache_dir, threads)
            timings["blocks"] = time.perf_counter() - t_start

            phase = "projection"
            t_start = time.perf_counter()
            psi0 = initial_state(cfg)
            coeffs0 = project_to_blocks(psi0, blocks)
            timings["projection"] = time.perf_counter() - t_start

            phase = "evolution"
            times = sample_times(cfg)
            t0 = derived_scales(cfg, 1).t0
            G = cfg.grid_size
            snapshots: list[EntanglementSnapshot] = []
            conserved: list[ConservedReport] = []
            t_evolve = t_spectrum = 0.0
            t_start = time.perf_counter()
            for chunk in evolve_chunks(coeffs0, blocks, times, G, cfg.hbar, threads):
                t_evolve += time.perf_counter() - t_start
                t_start = time.perf_counter()

                def analyse(state):
                    snap = schmidt_spectrum(state.psi, cfg.K, state.t)
                    rep = conserved_quantities(state, evolve_to(coeffs0, blocks, state.t, cfg.hbar), blocks, cfg)
                    return snap, rep

                for snap, rep in pmap(analyse, chunk, threads):
                    snapshots.append(snap)
                    conserved.append(rep)
                t_spectrum += time.perf_counter() - t_start
                t_start = time.perf_counter()
            timings["evolution"] = t_evolve
            timings["spectrum"] = t_spectrum

            phase = "tracking"
            tracks = track_modes(snapshots)
            drift = drift_summary(conserved, momentum_scale(psi0, cfg))
            sum_rule = max(abs(float(np.sum(s.p)) + s.residual - 1.0) for s in snapshots)
            if check:
                problems = drift.flags()
                if sum_rule > SUM_RULE_TOL:
                    problems.append(f"spectrum sum rule violated by {sum_rule:.3e}")
                if problems:
                    raise NumericalError("; ".join(problems))

            phase = "realspace"
            t_start = time.perf_counter()
            densities = _densities(cfg, snapshots, times)
            timings["realspace"] = time.perf_counter() - t_start
    except (ConfigError, NumericalError, OSError):
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the failing phase attached
        raise NumericalError(f"{phase} phase failed: {exc}") from exc

    pe = [purity_entropy(s.p, s.residual) for s in snapshots]
    series = SpectrumSeries(
        t=times,
        t_over_t0=times / t0,
        p=np.array([s.p for s in snapshots]),
        purity=np.array([x[0] for x in pe]),
        entropy=np.array([x[1] for x in pe]),
        residual=np.array([s.residual for s in snapshots]),
    )
    sizes = [blk.size for blk in blocks]
    manifest = {
        "version": __version__,
        "config": emit_config(cfg),
        "derived_scales": _scales_dict(cfg),
        "time_grid": {
            "t0": t0, "t_end": float(times[-1]), "t_end_over_t0": float(times[-1] / t0),
            "n_samples": cfg.n_samples, "t_end_rule": "configured" if cfg.t_end is not None else "auto",
        },
        "blocks": {"count": len(blocks), "max_size": max(sizes), "total_dimension": int(sum(sizes)),
                   "grid_size": cfg.grid_size, "interaction_strength": interaction_strength(cfg)},
        "scattering": scattering_oracle(cfg),
        "conservation": asdict(drift) | {"sum_rule": sum_rule},
        "tolerances": {"norm": NORM_TOL, "drift": DRIFT_TOL, "sum_rule": SUM_RULE_TOL,
                       "peak_threshold": 0.1, "mode_resolution": resolution(cfg)},
        "rank12_swaps": [{"step": s, "t_over_t0": float(times[s + 1] / t0)} for s in swap_events(tracks)],
        "ambiguous_tracking_steps": sum(1 for tr in tracks if tr.ambiguous),
        "timings_seconds": timings,
        "threads": threads,
        "warnings": warnings,
    }
    return RunResult(cfg, series, snapshots, tracks, conserved, drift, densities, manifest, warnings,
                     blocks if keep_blocks else None)


def _densities(cfg: SimConfig, snapshots, times) -> list[ModeDensity]:
    out = []
    ranks = min(cfg.mode_ranks, cfg.K)
    M = resolution(cfg)
    seen = set()
    for j in cfg.mode_samples:
        j = j % len(times)
        if j in seen:
            continue
        seen.add(j)
        snap = snapshots[j]
        for k in range(ranks):
            out.append(mode_to_position(snap.modes[:, k], cfg, M, t=float(times[j]), rank=k + 1,
                                        p=float(snap.p[k])))
    return out


def mode_densities(cfg: SimConfig, samples, ranks, cache_dir=None, threads: int | None = None):
    """Densities for chosen sample indices and 1-based ranks, reusing cached blocks."""
    require_valid(cfg)
    threads = resolve_threads(threads)
    times = sample_times(cfg)
    samples = [j % len(times) for j in samples]
    ranks = list(ranks)
    if any(not 1 <= r <= cfg.grid_size for r in ranks):
        raise ConfigError(f"ranks must lie in [1, {cfg.grid_size}]")
    K = max(ranks)
    with single_threaded_blas():
        blocks = cached_solve_blocks(cfg, cache_dir, threads)
        coeffs0 = project_to_blocks(initial_state(cfg), blocks)
        out = []
        for chunk in evolve_chunks(coeffs0, blocks, times[samples], cfg.grid_size, cfg.hbar, threads):
            for state in chunk:
                snap = schmidt_spectrum(state.psi, K, state.t)
                out.append(snap)
    dens = []
    for j, snap in zip(samples, out):
        for r in ranks:
            dens.append((j, mode_to_position(snap.modes[:, r - 1], cfg, t=snap.t, rank=r, p=float(snap.p[r - 1]))))
    return dens


# --- convergence harness -----------------------------------------------------------


@dataclass
class ConvergenceReport:
    base_n_max: int
    refined_n_max: int
    deviation_refined: float
    deviation_doubled: float
    tolerance: float = CONVERGENCE_TOL
    ranks: int = CONVERGENCE_RANKS

    @property
    def passed_refined(self) -> bool:
        return self.deviation_refined <= self.tolerance

    @property
    def passed_doubled(self) -> bool:
        return self.deviation_doubled <= self.tolerance

    @property
    def passed(self) -> bool:
        return self.passed_refined and self.passed_doubled


def spectrum_deviation(a: SpectrumSeries, b: SpectrumSeries, ranks: int = CONVERGENCE_RANKS) -> float:
    """Largest ``|p_k^a(t) - p_k^b(t)|`` over the shared time grid and the first ``ranks`` values."""
    if a.p.shape[0] != b.p.shape[0] or not np.allclose(a.t, b.t, rtol=1e-12, atol=0):
        raise ValueError("series are sampled on different time grids")
    k = min(ranks, a.K, b.K)
    return float(np.max(np.abs(a.p[:, :k] - b.p[:, :k])))


def convergence_variants(cfg: SimConfig) -> tuple[SimConfig, SimConfig, SimConfig]:
    base = replace(cfg, t_end=resolved_t_end(cfg), mode_ranks=0, M=None)
    refined = replace(base, n_max=int(math.floor(1.5 * cfg.n_max)))
    doubled = scale_box(base, 2)
    return base, refined, doubled


def convergence_check(cfg: SimConfig, threads: int | None = None) -> tuple[ConvergenceReport, dict]:
    """Compare ``cfg`` with ``n_max * 1.5`` and with the box doubled at fixed physics."""
    base, refined, doubled = convergence_variants(cfg)
    runs = {name: run_simulation(c, threads) for name, c in
            (("base", base), ("refined", refined), ("doubled", doubled))}
    report = ConvergenceReport(
        base_n_max=base.n_max,
        refined_n_max=refined.n_max,
        deviation_refined=spectrum_deviation(runs["base"].series, runs["refined"].series),
        deviation_doubled=spectrum_deviation(runs["base"].series, runs["doubled"].series),
    )
    return report, runs


# --- output files -------------------------------------------------------------------


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_text(path: Path, text: str, created: list[Path]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    created.append(tmp)
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    tmp.replace(path)
    created.append(path)


def spectrum_csv(series: SpectrumSeries) -> str:
    lines = [",".join(series.header())]
    lines += [",".join(_fmt(v) for v in row) for row in series.rows()]
    return "\n".join(lines) + "\n"


def density_csv(dens: ModeDensity) -> str:
    if dens.d == 1:
        lines = ["x,density"] + [f"{_fmt(x)},{_fmt(v)}" for x, v in zip(dens.x, dens.density)]
    else:
        lines = ["x,y,density"]
        for i, x in enumerate(dens.x):
            row = dens.density[i]
            lines += [f"{_fmt(x)},{_fmt(y)},{_fmt(v)}" for y, v in zip(dens.x, row)]
    return "\n".join(lines) + "\n"


def density_name(sample: int, rank: int) -> str:
    return f"t{sample}_r{rank}.csv"


def write_outputs(series: SpectrumSeries | None, modes, manifest: dict, out_dir) -> list[Path]:
    """Write ``spectrum.csv``, ``modes/t<index>_r<rank>.csv`` and ``manifest.json``.

    ``modes`` is a sequence of ``(sample_index, ModeDensity)``.  On any error,
    files created by this call are removed before the exception propagates.
    """
    out_dir = Path(out_dir)
    created: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if series is not None:
            path = out_dir / "spectrum.csv"
            _write_text(path, spectrum_csv(series), created)
            written.append(path)
        for sample, dens in modes:
            path = out_dir / "modes" / density_name(sample, dens.rank)
            _write_text(path, density_csv(dens), created)
            written.append(path)
        manifest = dict(manifest)
        manifest["outputs"] = {str(p.relative_to(out_dir)): _sha256(p) for p in written}
        path = out_dir / "manifest.json"
        _write_text(path, json.dumps(manifest, sort_keys=True, indent=2, ensure_ascii=False, default=_json_default) + "\n",
                    created)
        written.append(path)
        return written
    except BaseException:
        for p in reversed(created):
            try:
                p.unlink()
            except FileNotFoundError:
                pass
        modes_dir = out_dir / "modes"
        if modes_dir.exists() and not any(modes_dir.iterdir()):
            modes_dir.rmdir()
        raise


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def result_mode_files(result: RunResult) -> list[tuple[int, ModeDensity]]:
    """Pair each density of a run with its sample index."""
    index = {float(t): j for j, t in enumerate(result.series.t)}
    return [(index[d.t], d) for d in result.densities]


def write_run(result: RunResult, out_dir) -> list[Path]:
    return write_outputs(result.series, result_mode_files(result), result.manifest, out_dir)


def block_statistics(cfg: SimConfig) -> dict:
    """Count, largest size and total dimension of the block decomposition, without building it."""
    keys = range(-2 * cfg.n_max, 2 * cfg.n_max + 1)
    return {"count": len(keys) ** cfg.d, "max_size": block_size((0,) * cfg.d, cfg.n_max),
            "total_dimension": total_dimension(cfg)}
