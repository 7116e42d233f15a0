import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from entspec.potential import (PotentialSpec, bare_delta_strength, cutoff_shift, delta_transmission,
                               fourier_coefficient, gaussian_transmission, potential_profile, reduced_mass,
                               solve_gaussian_strength_for_T, solve_strength_for_T, truncated_delta_transmission)

W_2D = 1 / (20 * math.sqrt(2))
P_CENTRAL = 200.0 / 3.0  # 2 pi n_c / L with n_c = 100 / (3 pi)


def quad_1d(spec, dn, L=1.0):
    # oscillatory quadrature of V(x) cos(2 pi dn x / L) over one period
    f = lambda x: float(potential_profile(spec, x))
    val, _ = integrate.quad(f, -L / 2, L / 2, weight="cos", wvar=2 * math.pi * dn / L, limit=400,
                            epsabs=1e-13, epsrel=1e-12)
    return val / L


def quad_2d(spec, dn, L=1.0):
    # V(r) of the 2D gaussian factorises into two 1D gaussians
    w = spec.width
    g = lambda x: math.exp(-x**2 / (2 * w**2))
    parts = []
    for k in dn:
        v, _ = integrate.quad(g, -L / 2, L / 2, weight="cos", wvar=2 * math.pi * k / L, limit=400,
                              epsabs=1e-13, epsrel=1e-12)
        parts.append(v)
    return spec.strength / (math.sqrt(2 * math.pi) * w) * parts[0] * parts[1] / L**2


def transfer_matrix_T(A, w, mu, p, steps=20000):
    """Piecewise-constant transfer matrices across [-12w, 12w], propagated from the outgoing side."""
    xs = np.linspace(-12 * w, 12 * w, steps + 1)
    h = xs[1] - xs[0]
    V = A / (math.sqrt(2 * math.pi) * w) * np.exp(-(0.5 * (xs[1:] + xs[:-1])) ** 2 / (2 * w**2))
    psi = np.exp(1j * p * xs[-1])
    dpsi = 1j * p * psi
    for v in V[::-1]:
        q = np.sqrt(complex(2 * mu * v - p**2))
        c, s = np.cosh(q * h), np.sinh(q * h)
        psi, dpsi = psi * c - dpsi * s / q, -psi * q * s + dpsi * c
    a = 0.5 * (psi + dpsi / (1j * p)) * np.exp(-1j * p * xs[0])
    return 1 / abs(a) ** 2


class TestFourierCoefficient:
    def test_delta_constant(self):
        spec = PotentialSpec("delta", 140.0)
        assert fourier_coefficient(spec, 7, 1.0, 1) == 140.0
        assert fourier_coefficient(PotentialSpec("delta", 0.0), 3, 1.0, 1) == 0.0
        assert fourier_coefficient(spec, (1, 2), 2.0, 2) == 35.0

    def test_gaussian_example_value(self):
        # frozen from 30-digit quadrature of the real-space integrand
        spec = PotentialSpec("gaussian", 1.0, W_2D)
        assert fourier_coefficient(spec, 10, 1.0, 1) == pytest.approx(0.0848049724711138, abs=1e-12)

    @pytest.mark.parametrize("dn", [0, 1, 5, 10, 17, 40])
    @pytest.mark.parametrize("w", [0.01, W_2D, 0.05])
    def test_gaussian_1d_matches_quadrature(self, dn, w):
        spec = PotentialSpec("gaussian", 3.0, w)
        assert fourier_coefficient(spec, dn, 1.0, 1) == pytest.approx(quad_1d(spec, dn), abs=1e-10)

    @pytest.mark.parametrize("dn", [(0, 0), (1, 0), (3, -4), (7, 7), (-9, 2)])
    def test_gaussian_2d_matches_quadrature(self, dn):
        spec = PotentialSpec("gaussian", 100.0, W_2D)
        got = fourier_coefficient(spec, dn, 1.0, 2)
        assert got == pytest.approx(quad_2d(spec, dn), abs=1e-10 * max(1.0, abs(got)))

    def test_vectorised_and_even(self):
        spec = PotentialSpec("gaussian", 2.0, 0.02)
        dn = np.arange(-5, 6)
        vals = fourier_coefficient(spec, dn, 1.0, 1)
        assert vals.shape == (11,)
        np.testing.assert_array_equal(vals, vals[::-1])

    def test_gaussian_approaches_delta_as_width_shrinks(self):
        gaps = [abs(fourier_coefficient(PotentialSpec("gaussian", 5.0, w), 12, 1.0, 1) - 5.0)
                for w in (0.05, 0.02, 0.01, 0.001)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 0.02

    def test_periodic_image_error_bound(self):
        # closed form is the infinite-line transform; the box truncation costs ~exp(-L^2 / (8 w^2))
        spec = PotentialSpec("gaussian", 1.0, 0.08)
        gap = abs(fourier_coefficient(spec, 3, 1.0, 1) - quad_1d(spec, 3))
        assert gap < 2 * math.exp(-1 / (8 * 0.08**2))

    def test_rejects_wrong_component_count(self):
        with pytest.raises(ValueError):
            fourier_coefficient(PotentialSpec("gaussian", 1.0, 0.01), (1, 2, 3), 1.0, 2)


class TestPotentialSpec:
    def test_bad_kind(self):
        with pytest.raises(ValueError):
            PotentialSpec("square", 1.0)

    def test_gaussian_needs_width(self):
        with pytest.raises(ValueError):
            PotentialSpec("gaussian", 1.0, 0.0)

    def test_renormalize_delta_only(self):
        with pytest.raises(ValueError):
            PotentialSpec("gaussian", 1.0, 0.01, renormalize=True)


class TestDeltaScattering:
    def test_midpoint(self):
        mu, p = 0.5, 3.0
        assert delta_transmission(p / mu, mu, p).transmission == pytest.approx(0.5, abs=1e-15)

    def test_free(self):
        o = delta_transmission(0.0, 0.5, 10.0)
        assert (o.transmission, o.reflection) == (1.0, 0.0)

    def test_zero_momentum(self):
        with pytest.raises(ValueError):
            delta_transmission(1.0, 0.5, 0.0)

    def test_half_strength_is_2p(self):
        assert solve_strength_for_T(0.5, 0.5, P_CENTRAL) == pytest.approx(2 * P_CENTRAL, rel=1e-15)

    def test_strength_for_045(self):
        # frozen: (p / mu) sqrt(1/T - 1) evaluated at 30 digits
        A = solve_strength_for_T(0.45, 0.5, P_CENTRAL)
        assert A == pytest.approx(147.405546238018, abs=1e-9)
        assert delta_transmission(A, 0.5, P_CENTRAL).transmission == pytest.approx(0.45, abs=1e-14)

    @pytest.mark.parametrize("T", [0.71, 0.45, 0.004])
    def test_round_trip(self, T):
        A = solve_strength_for_T(T, 0.5, P_CENTRAL)
        assert delta_transmission(A, 0.5, P_CENTRAL).transmission == pytest.approx(T, abs=1e-14)

    def test_strength_vanishes_as_T_to_one(self):
        As = [solve_strength_for_T(T, 0.5, P_CENTRAL) for T in (0.9, 0.99, 0.999999, 1 - 1e-12)]
        assert all(a > b > 0 for a, b in zip(As, As[1:]))
        assert As[-1] < 1e-3

    @pytest.mark.parametrize("T", [0.0, 1.0, -0.1, 1.5])
    def test_bad_target(self, T):
        with pytest.raises(ValueError):
            solve_strength_for_T(T, 0.5, 1.0)

    @given(st.floats(1e-3, 0.999), st.floats(0.1, 5.0), st.floats(0.5, 200.0))
    @settings(max_examples=60, deadline=None)
    def test_round_trip_property(self, T, mu, p):
        A = solve_strength_for_T(T, mu, p)
        assert delta_transmission(A, mu, p).transmission == pytest.approx(T, abs=1e-12)


class TestCutoffMatching:
    def test_bare_weaker_than_continuum(self):
        A = 147.4
        bare = bare_delta_strength(A, 0.5, 202, 1.0)
        assert 0 < bare < A
        assert 1 / bare - 1 / A == pytest.approx(cutoff_shift(0.5, 202, 1.0), rel=1e-12)

    def test_truncated_inverts_bare(self):
        A = solve_strength_for_T(0.45, 0.5, P_CENTRAL)
        bare = bare_delta_strength(A, 0.5, 202, 1.0)
        o = truncated_delta_transmission(bare, 0.5, P_CENTRAL, 202, 1.0)
        assert o.transmission == pytest.approx(0.45, abs=1e-12)

    def test_zero(self):
        assert bare_delta_strength(0.0, 0.5, 10, 1.0) == 0.0
        assert truncated_delta_transmission(0.0, 0.5, 1.0, 10, 1.0).transmission == 1.0

    def test_shift_falls_with_cutoff(self):
        assert cutoff_shift(0.5, 400, 1.0) < cutoff_shift(0.5, 200, 1.0)


class TestGaussianScattering:
    def test_narrow_gaussian_tends_to_delta(self):
        A = solve_strength_for_T(0.45, 0.5, P_CENTRAL)
        g = gaussian_transmission(A, 1e-5, 0.5, P_CENTRAL)
        assert g.transmission == pytest.approx(0.45, abs=2e-3)

    @pytest.mark.parametrize("w", [0.01, 0.003, 0.001])
    def test_matches_transfer_matrix(self, w):
        A = solve_strength_for_T(0.45, 0.5, P_CENTRAL)
        got = gaussian_transmission(A, w, 0.5, P_CENTRAL).transmission
        assert got == pytest.approx(transfer_matrix_T(A, w, 0.5, P_CENTRAL), abs=1e-6)

    def test_no_potential(self):
        assert gaussian_transmission(0.0, 0.01, 0.5, 10.0).transmission == 1.0

    def test_flux_conserving_below_barrier_top(self):
        o = gaussian_transmission(50.0, 0.01, 0.5, P_CENTRAL)
        assert 0 < o.transmission < 1

    def test_solver_round_trip(self):
        A = solve_gaussian_strength_for_T(0.5, 0.01, 0.5, P_CENTRAL)
        assert gaussian_transmission(A, 0.01, 0.5, P_CENTRAL).transmission == pytest.approx(0.5, abs=1e-9)


def test_reduced_mass():
    assert reduced_mass(1.0, 1.0) == 0.5
    assert reduced_mass(2.0, 6.0) == 1.5
