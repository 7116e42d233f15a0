"""Figures rendered from a run directory's CSV files.

Only reads ``spectrum.csv`` and ``modes/*.csv``; the simulation code never
imports this module.
"""
from __future__ import annotations

import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_MODE_FILE = re.compile(r"t(-?\d+)_r(\d+)\.csv$")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def plot_spectrum(path, out_dir: Path) -> list[Path]:
    header, data = read_csv(path)
    cols = {name: j for j, name in enumerate(header)}
    ranks = [h for h in header if re.fullmatch(r"p\d+", h)]
    x = data[:, cols["t_over_t0"]]
    written = []
    for scale in ("linear", "log"):
        fig, ax = plt.subplots(figsize=(6, 4))
        for name in ranks:
            y = data[:, cols[name]]
            if scale == "log":
                y = np.where(y > 0, y, np.nan)
            ax.plot(x, y, lw=1.2, label=name if int(name[1:]) <= 6 else None)
        ax.set_yscale(scale)
        ax.set_xlabel("t / t0")
        ax.set_ylabel("p_n")
        if scale == "log":
            ax.set_ylim(bottom=1e-16)
        ax.legend(fontsize=8, loc="best")
        fig.tight_layout()
        target = out_dir / f"spectrum_{scale}.png"
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(target)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, data[:, cols["entropy"]], label="entropy")
    ax.plot(x, data[:, cols["purity"]], label="purity")
    ax.set_xlabel("t / t0")
    ax.legend()
    fig.tight_layout()
    target = out_dir / "entropy.png"
    fig.savefig(target, dpi=120)
    plt.close(fig)
    written.append(target)
    return written


def plot_modes(mode_dir: Path, out_dir: Path) -> list[Path]:
    groups: dict[int, list[tuple[int, Path]]] = {}
    for path in sorted(mode_dir.glob("t*_r*.csv")):
        m = _MODE_FILE.search(path.name)
        if m:
            groups.setdefault(int(m.group(1)), []).append((int(m.group(2)), path))
    written = []
    for sample, items in sorted(groups.items()):
        items.sort()
        header, first = read_csv(items[0][1])
        if len(header) == 2:
            fig, ax = plt.subplots(figsize=(6, 4))
            for rank, path in items:
                _, data = read_csv(path)
                ax.plot(data[:, 0], data[:, 1], lw=1.0, label=f"rank {rank}")
            ax.set_xlabel("x")
            ax.set_ylabel("|phi_n(x)|^2")
            ax.legend(fontsize=8)
        else:
            n = len(items)
            fig, axes = plt.subplots(1, n, figsize=(3 * n, 3), squeeze=False)
            for ax, (rank, path) in zip(axes[0], items):
                _, data = read_csv(path)
                M = int(round(np.sqrt(data.shape[0])))
                grid = data[:, 2].reshape(M, M)
                lo, hi = data[0, 0], data[-1, 0]
                ax.imshow(grid.T, origin="lower", extent=(lo, hi, lo, hi), cmap="viridis")
                ax.set_title(f"rank {rank}", fontsize=9)
                ax.set_xticks([])
                ax.set_yticks([])
        fig.tight_layout()
        target = out_dir / f"modes_t{sample}.png"
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(target)
    return written


def render_run(run_dir, figures=None) -> list[Path]:
    run_dir = Path(run_dir)
    out_dir = Path(figures) if figures is not None else run_dir / "figures"
    spectrum = run_dir / "spectrum.csv"
    mode_dir = run_dir / "modes"
    if not spectrum.exists() and not mode_dir.is_dir():
        raise FileNotFoundError(f"no spectrum.csv or modes/ in {run_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if spectrum.exists():
        written += plot_spectrum(spectrum, out_dir)
    if mode_dir.is_dir():
        written += plot_modes(mode_dir, out_dir)
    return written
