"""Command line entry point: ``entspec simulate|oracle|converge|modes|plot``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 numerical or
runtime failure (including a failed convergence check), 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .blocks import NumericalError
from .configfile import emit_config, load_config
from .lattice import ConfigError, derived_scales, resolved_t_end, validate_config
from .runner import (block_statistics, convergence_check, mode_densities, run_simulation, scattering_oracle,
                     write_outputs, write_run)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _int_list(raw: str) -> list[int]:
    try:
        return [int(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}") from None


def _positive(raw: str) -> int:
    try:
        val = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {raw!r}") from None
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entspec", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("config", help="experiment file")
        if out:
            p.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
        p.add_argument("--threads", type=_positive, default=None,
                       help="worker threads (default: $ENTSPEC_THREADS or 1)")
        p.add_argument("--k", type=_positive, default=None, help="number of tracked Schmidt values")

    p = sub.add_parser("simulate", help="run a simulation and write spectrum, mode densities and manifest")
    common(p)
    p.add_argument("--cache", type=Path, default=None, help="directory for cached block spectra")
    p.add_argument("--plot", action="store_true", help="also render figures from the written CSVs")

    p = sub.add_parser("oracle", help="print analytic transmission and derived scales")
    p.add_argument("config")

    p = sub.add_parser("converge", help="compare against n_max x 1.5 and a doubled box")
    common(p)

    p = sub.add_parser("modes", help="write position densities for chosen samples and ranks")
    common(p)
    p.add_argument("--times", type=_int_list, required=True, help="sample indices, e.g. 0,40,-1")
    p.add_argument("--ranks", type=_int_list, required=True, help="1-based ranks, e.g. 1,2,3")
    p.add_argument("--cache", type=Path, default=None)

    p = sub.add_parser("plot", help="render figures from a simulate output directory")
    p.add_argument("run_dir", type=Path)
    p.add_argument("--figures", type=Path, default=None, help="figure directory (default: <run_dir>/figures)")
    return ap


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "k", None) is not None:
        cfg = cfg.with_changes(K=args.k)
    return cfg


def cmd_simulate(args) -> int:
    result = run_simulation(_load(args), args.threads, args.cache)
    for w in result.warnings:
        print(w, file=sys.stderr)
    write_run(result, args.out)
    last = result.series.p[-1]
    print(f"wrote {args.out}  t/t0 = {result.series.t_over_t0[-1]:.4g}  p1 = {last[0]:.6g}"
          + (f"  p2 = {last[1]:.6g}" if len(last) > 1 else ""))
    if args.plot:
        from .plots import render_run
        for path in render_run(args.out):
            print(f"wrote {path}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    diags = validate_config(cfg)
    for d in diags:
        print(d, file=sys.stderr)
    info = {"scattering": scattering_oracle(cfg), "blocks": block_statistics(cfg)}
    for which in (1, 2):
        try:
            info[f"particle{which}"] = asdict(derived_scales(cfg, which))
        except ValueError as exc:
            info[f"particle{which}"] = {"error": str(exc)}
    try:
        info["t_end"] = resolved_t_end(cfg)
    except ValueError as exc:
        info["t_end"] = str(exc)
    for section, vals in info.items():
        if isinstance(vals, dict):
            for key, val in vals.items():
                print(f"{section}.{key} = {val!r}")
        else:
            print(f"{section} = {vals!r}")
    return EXIT_CONFIG if any(d.level == "ERROR" for d in diags) else EXIT_OK


def cmd_converge(args) -> int:
    cfg = _load(args)
    report, _ = convergence_check(cfg, args.threads)
    payload = asdict(report) | {"passed": report.passed, "config": emit_config(cfg)}
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "convergence.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n",
                                               encoding="utf-8")
    for name, dev, ok in (("n_max x1.5", report.deviation_refined, report.passed_refined),
                          ("box x2", report.deviation_doubled, report.passed_doubled)):
        print(f"{name:<11} max|dp| = {dev:.3e}  {'PASS' if ok else 'FAIL'} (tol {report.tolerance:g})")
    return EXIT_OK if report.passed else EXIT_NUMERIC


def cmd_modes(args) -> int:
    cfg = _load(args)
    dens = mode_densities(cfg, args.times, args.ranks, args.cache, args.threads)
    manifest = {"config": emit_config(cfg), "samples": args.times, "ranks": args.ranks}
    for path in write_outputs(None, dens, manifest, args.out):
        print(f"wrote {path}")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plots import render_run
    for path in render_run(args.run_dir, args.figures):
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "oracle": cmd_oracle, "converge": cmd_converge, "modes": cmd_modes,
            "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
