"""Interaction potentials, their momentum-space coefficients and 1D scattering oracles.

The two particles interact through a central potential ``V(|x1 - x2|)``.  In the
periodic box the interaction enters the Hamiltonian only through the Fourier
coefficients

    V_hat(dn) = (1 / L**d) * integral d^d x  V(|x|) exp(2 pi i dn . x / L)

which are real and even for every potential here.  The Gaussian closed forms
use the infinite-line transform; the periodic-image error is of order
``exp(-L**2 / (8 w**2))``, about 4e-6 at ``w = L/10`` and below 1e-40 for
``w <= L/(20 sqrt 2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

KINDS = ("delta", "gaussian")


@dataclass(frozen=True)
class PotentialSpec:
    """Interaction potential.

    ``strength`` is ``A`` in ``V = A delta(x)`` or
    ``V = A / (sqrt(2 pi) w) * exp(-r**2 / (2 w**2))``.  With ``renormalize``
    set (1D delta only) ``A`` is read as the continuum coupling and the
    Hamiltonian uses the bare coupling matched to the momentum cutoff, see
    :func:`bare_delta_strength`.
    """

    kind: str = "delta"
    strength: float = 0.0
    width: float = 0.0
    renormalize: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "gaussian" and not self.width > 0:
            raise ValueError("gaussian potential requires width > 0")
        if self.renormalize and self.kind != "delta":
            raise ValueError("renormalize applies to the delta potential only")


@dataclass(frozen=True)
class ScatteringOracle:
    reduced_mass: float
    momentum: float
    transmission: float
    reflection: float


def reduced_mass(m1: float, m2: float) -> float:
    return m1 * m2 / (m1 + m2)


def fourier_coefficient(spec: PotentialSpec, dn, L: float, d: int, strength: float | None = None):
    """Closed-form ``V_hat(dn)`` for integer offsets ``dn``.

    ``dn`` is a scalar or an array whose last axis has length ``d`` (for
    ``d == 1`` a plain integer array is accepted too).  Returns a float or a
    float array with the component axis removed.  ``strength`` overrides
    ``spec.strength`` (used for the cutoff-matched delta coupling).
    """
    A = spec.strength if strength is None else strength
    dn = np.asarray(dn, dtype=float)
    if d == 1 and (dn.ndim == 0 or dn.shape[-1] != 1):
        sq = dn**2
    else:
        if dn.shape[-1] != d:
            raise ValueError(f"offset has {dn.shape[-1]} components, expected {d}")
        sq = np.sum(dn**2, axis=-1)

    if spec.kind == "delta":
        out = np.full(np.shape(sq), A / L**d)
    elif d == 1:
        w = spec.width
        out = (A / L) * np.exp(-2.0 * math.pi**2 * w**2 * sq / L**2)
    elif d == 2:
        w = spec.width
        out = (A * math.sqrt(2.0 * math.pi) * w / L**2) * np.exp(-2.0 * math.pi**2 * w**2 * sq / L**2)
    else:
        raise ValueError(f"unsupported dimension d={d}")
    return float(out) if np.ndim(out) == 0 else out


def potential_profile(spec: PotentialSpec, r, d: int = 1):
    """Real-space ``V(r)`` for the Gaussian kind (the delta has no profile)."""
    if spec.kind != "gaussian":
        raise ValueError("only the gaussian potential has a pointwise profile")
    w = spec.width
    return spec.strength / (math.sqrt(2.0 * math.pi) * w) * np.exp(-np.asarray(r) ** 2 / (2.0 * w**2))


def delta_transmission(A: float, mu: float, p: float, hbar: float = 1.0) -> ScatteringOracle:
    """Transmission through ``A delta(x)`` at relative momentum ``p``."""
    if p == 0:
        raise ValueError("transmission is undefined at zero momentum")
    beta = mu * A / (hbar * p)
    T = 1.0 / (1.0 + beta**2)
    return ScatteringOracle(mu, p, T, 1.0 - T)


def solve_strength_for_T(T_target: float, mu: float, p: float, hbar: float = 1.0) -> float:
    """Repulsive delta strength giving transmission ``T_target`` at momentum ``p``."""
    if not 0.0 < T_target < 1.0:
        raise ValueError(f"T_target must lie in (0, 1), got {T_target}")
    if p == 0:
        raise ValueError("strength is undefined at zero momentum")
    return (hbar * abs(p) / mu) * math.sqrt(1.0 / T_target - 1.0)


def cutoff_shift(mu: float, n_cut: int, L: float, hbar: float = 1.0) -> float:
    """Shift of ``1/A`` produced by truncating relative momenta at ``n_cut``.

    Dropping the plane waves with ``|n| > n_cut`` removes the high-momentum part
    of the two-body propagator.  To leading order in ``p/Lambda`` this adds
    ``2 mu / (pi hbar Lambda)`` to the inverse coupling, with
    ``Lambda = 2 pi hbar (n_cut + 1/2) / L`` (midpoint estimate of the
    discarded tail sum).
    """
    cutoff = 2.0 * math.pi * hbar * (n_cut + 0.5) / L
    return 2.0 * mu / (math.pi * hbar * cutoff)


def bare_delta_strength(A: float, mu: float, n_cut: int, L: float, hbar: float = 1.0) -> float:
    """Bare coupling that makes the truncated basis scatter like ``A delta(x)``."""
    if A == 0:
        return 0.0
    return 1.0 / (1.0 / A + cutoff_shift(mu, n_cut, L, hbar))


def truncated_delta_transmission(A_bare: float, mu: float, p: float, n_cut: int, L: float,
                                 hbar: float = 1.0) -> ScatteringOracle:
    """Transmission seen by the truncated basis for a bare coupling ``A_bare``."""
    if A_bare == 0:
        return delta_transmission(0.0, mu, p, hbar)
    inv = 1.0 / A_bare - cutoff_shift(mu, n_cut, L, hbar)
    return delta_transmission(1.0 / inv, mu, p, hbar)


def gaussian_transmission(A: float, w: float, mu: float, p: float, hbar: float = 1.0) -> ScatteringOracle:
    """Transmission through the 1D Gaussian potential by direct integration.

    Integrates the relative-coordinate Schrodinger equation from the far right,
    where the wave is purely outgoing, back through the potential and reads off
    the incoming amplitude on the left.
    """
    if p == 0:
        raise ValueError("transmission is undefined at zero momentum")
    k = abs(p) / hbar
    if A == 0:
        return ScatteringOracle(mu, p, 1.0, 0.0)
    spec = PotentialSpec("gaussian", A, w)
    edge = 12.0 * w
    scale = 2.0 * mu / hbar**2

    def rhs(x, y):
        phi, dphi = y[0] + 1j * y[1], y[2] + 1j * y[3]
        dd = (scale * float(potential_profile(spec, x)) - k**2) * phi
        return [dphi.real, dphi.imag, dd.real, dd.imag]

    start = np.exp(1j * k * edge)
    y0 = [start.real, start.imag, (1j * k * start).real, (1j * k * start).imag]
    sol = integrate.solve_ivp(rhs, (edge, -edge), y0, method="DOP853", rtol=1e-11, atol=1e-13)
    if not sol.success:
        raise RuntimeError(f"scattering integration failed: {sol.message}")
    phi = sol.y[0, -1] + 1j * sol.y[1, -1]
    dphi = sol.y[2, -1] + 1j * sol.y[3, -1]
    x = -edge
    # phi = a e^{ikx} + b e^{-ikx} left of the potential
    a = 0.5 * (phi + dphi / (1j * k)) * np.exp(-1j * k * x)
    T = 1.0 / abs(a) ** 2
    return ScatteringOracle(mu, p, T, 1.0 - T)


def solve_gaussian_strength_for_T(T_target: float, w: float, mu: float, p: float,
                                  hbar: float = 1.0) -> float:
    """Invert :func:`gaussian_transmission` for a repulsive strength."""
    if not 0.0 < T_target < 1.0:
        raise ValueError(f"T_target must lie in (0, 1), got {T_target}")

    def miss(A):
        return gaussian_transmission(A, w, mu, p, hbar).transmission - T_target

    # delta-limit strength is a lower bound: smoothing only reduces reflection
    hi = max(solve_strength_for_T(T_target, mu, p, hbar), 1e-12)
    while miss(hi) > 0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("could not bracket the requested transmission")
    return optimize.brentq(miss, 0.0, hi, xtol=1e-12, rtol=1e-13)
