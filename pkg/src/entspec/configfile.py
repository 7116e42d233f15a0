"""Line-oriented ``key = value`` experiment files.

Sections: ``[physics]``, ``[potential]``, ``[packet1]``, ``[packet2]``, ``[run]``.
Unknown sections or keys are errors.  A missing ``[packet2]`` mirrors packet 1
(``N_c -> -N_c``, ``X_c -> -X_c``), which is the head-on symmetric set-up.

Two convenience keys are resolved at parse time and never emitted:
``T`` in ``[potential]`` (target transmission at the central relative
momentum, replaces ``A``) and ``t_end_t0`` in ``[run]`` (``t_end`` in units of
the coincidence time).
"""
from __future__ import annotations

import configparser
import math
import re

from .lattice import ConfigError, PacketSpec, SimConfig, derived_scales
from .potential import PotentialSpec, solve_gaussian_strength_for_T, solve_strength_for_T

SECTIONS = {
    "physics": {"d", "L", "m1", "m2", "hbar", "n_max"},
    "potential": {"kind", "A", "T", "w", "renormalize"},
    "packet1": {"N_c", "X_c", "sigma"},
    "packet2": {"N_c", "X_c", "sigma"},
    "run": {"t_end", "t_end_t0", "n_samples", "K", "M", "mode_samples", "mode_ranks"},
}


class ConfigParseError(ConfigError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


def _locate(text: str, section: str, key: str | None = None) -> int | None:
    """1-based line of ``[section]`` or of ``key`` inside it."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section:
            m = re.match(r"^([^=:#;]+?)\s*[=:]", line)
            if m and m.group(1) == key:
                return lineno
    return None


def _read(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(strict=True, interpolation=None,
                                       inline_comment_prefixes=("#", ";"), empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigParseError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, exc.option) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigParseError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("key outside any section", exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigParseError("malformed line (expected key = value)", lineno) from None
    return parser


def parse_config(text: str) -> SimConfig:
    parser = _read(text)
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigParseError(f"unknown section [{section}]", _locate(text, section))
        for key in parser[section]:
            if key not in SECTIONS[section]:
                raise ConfigParseError(f"unknown key {key!r} in [{section}]", _locate(text, section, key), key)

    def get(section, key, conv, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            raise ConfigParseError(f"bad value for {key!r}: {raw!r} ({exc})",
                                   _locate(text, section, key), key) from None

    def vector(raw):
        parts = [v.strip() for v in raw.split(",")]
        if not parts or any(not v for v in parts):
            raise ValueError("expected comma-separated numbers")
        return tuple(float(v) for v in parts)

    def boolean(raw):
        low = raw.lower()
        if low in ("1", "yes", "true", "on"):
            return True
        if low in ("0", "no", "false", "off"):
            return False
        raise ValueError("expected true/false")

    def optional(conv):
        return lambda raw: None if raw.lower() in ("auto", "none", "") else conv(raw)

    def int_list(raw):
        return tuple(int(v) for v in raw.split(","))

    def packet(section, mirror=None):
        if not parser.has_section(section):
            if mirror is None:
                raise ConfigParseError(f"missing section [{section}]")
            return PacketSpec(tuple(-v for v in mirror.N_c), tuple(-v for v in mirror.X_c), mirror.sigma)
        for key in ("N_c", "X_c", "sigma"):
            if not parser.has_option(section, key):
                raise ConfigParseError(f"[{section}] needs {key!r}", _locate(text, section), key)
        return PacketSpec(get(section, "N_c", vector), get(section, "X_c", vector), get(section, "sigma", float))

    p1 = packet("packet1")
    p2 = packet("packet2", mirror=p1)

    kind = get("potential", "kind", str, "delta")
    width = get("potential", "w", float, 0.0)
    renorm = get("potential", "renormalize", boolean, False)
    has_A = parser.has_option("potential", "A")
    has_T = parser.has_option("potential", "T")
    if has_A and has_T:
        raise ConfigParseError("give either 'A' or 'T', not both", _locate(text, "potential", "T"), "T")
    try:
        potential = PotentialSpec(kind, get("potential", "A", float, 0.0), width, renorm)
    except ValueError as exc:
        raise ConfigParseError(str(exc), _locate(text, "potential")) from None

    cfg = SimConfig(
        d=get("physics", "d", int, 1),
        L=get("physics", "L", float, 1.0),
        m1=get("physics", "m1", float, 1.0),
        m2=get("physics", "m2", float, 1.0),
        hbar=get("physics", "hbar", float, 1.0),
        n_max=get("physics", "n_max", int, 101),
        potential=potential,
        packet1=p1,
        packet2=p2,
        t_end=get("run", "t_end", optional(float)),
        n_samples=get("run", "n_samples", int, 81),
        K=get("run", "K", int, 20),
        M=get("run", "M", optional(int)),
        mode_samples=get("run", "mode_samples", int_list, (-1,)),
        mode_ranks=get("run", "mode_ranks", int, 6),
    )

    if has_T:
        T = get("potential", "T", float)
        try:
            A = strength_for_transmission(cfg, T)
        except ValueError as exc:
            raise ConfigParseError(str(exc), _locate(text, "potential", "T"), "T") from None
        cfg = cfg.with_changes(potential=PotentialSpec(kind, A, width, renorm))
    if parser.has_option("run", "t_end_t0"):
        if parser.has_option("run", "t_end"):
            raise ConfigParseError("give either 't_end' or 't_end_t0', not both",
                                   _locate(text, "run", "t_end_t0"), "t_end_t0")
        factor = get("run", "t_end_t0", float)
        try:
            cfg = cfg.with_changes(t_end=factor * derived_scales(cfg, 1).t0)
        except ValueError as exc:
            raise ConfigParseError(str(exc), _locate(text, "run", "t_end_t0"), "t_end_t0") from None
    return cfg


def relative_momentum(cfg: SimConfig) -> float:
    """Central relative momentum ``|m2 p1 - m1 p2| / (m1 + m2)`` along the collision axis."""
    unit = 2.0 * math.pi * cfg.hbar / cfg.L
    p1 = unit * cfg.packet1.N_c[0]
    p2 = unit * cfg.packet2.N_c[0]
    return abs(cfg.m2 * p1 - cfg.m1 * p2) / (cfg.m1 + cfg.m2)


def strength_for_transmission(cfg: SimConfig, T: float) -> float:
    """Strength giving transmission ``T`` at the central relative momentum (1D scattering)."""
    p = relative_momentum(cfg)
    if cfg.potential.kind == "delta":
        return solve_strength_for_T(T, cfg.mu, p, cfg.hbar)
    if cfg.d != 1:
        raise ValueError("'T' for the gaussian potential is resolved with the 1D scattering solver; use d = 1")
    return solve_gaussian_strength_for_T(T, cfg.potential.width, cfg.mu, p, cfg.hbar)


def _num(x: float) -> str:
    return repr(float(x))


def _vec(v) -> str:
    return ", ".join(_num(x) for x in v)


def emit_config(cfg: SimConfig) -> str:
    """Serialise ``cfg``; ``parse_config(emit_config(cfg)) == cfg``."""
    pot = cfg.potential
    lines = [
        "[physics]",
        f"d = {cfg.d}",
        f"L = {_num(cfg.L)}",
        f"m1 = {_num(cfg.m1)}",
        f"m2 = {_num(cfg.m2)}",
        f"hbar = {_num(cfg.hbar)}",
        f"n_max = {cfg.n_max}",
        "",
        "[potential]",
        f"kind = {pot.kind}",
        f"A = {_num(pot.strength)}",
        f"w = {_num(pot.width)}",
        f"renormalize = {'true' if pot.renormalize else 'false'}",
        "",
    ]
    for name, pk in (("packet1", cfg.packet1), ("packet2", cfg.packet2)):
        lines += [f"[{name}]", f"N_c = {_vec(pk.N_c)}", f"X_c = {_vec(pk.X_c)}", f"sigma = {_num(pk.sigma)}", ""]
    lines += [
        "[run]",
        f"t_end = {'auto' if cfg.t_end is None else _num(cfg.t_end)}",
        f"n_samples = {cfg.n_samples}",
        f"K = {cfg.K}",
        f"M = {'auto' if cfg.M is None else cfg.M}",
        f"mode_samples = {', '.join(str(j) for j in cfg.mode_samples)}",
        f"mode_ranks = {cfg.mode_ranks}",
    ]
    return "\n".join(lines) + "\n"


def load_config(path) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
