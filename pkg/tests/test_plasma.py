from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import besselj, mp, mpf, quad

from deepspace_sim import antenna
from deepspace_sim import plasma as P
from deepspace_sim.constants import CONSTANTS

LAM = 0.03
K = 2 * math.pi / LAM
RE = CONSTANTS.classical_electron_radius


def _disc(radius: float, spacing: float = 1.0):
    return antenna.lattice_geometry(radius, radius, spacing)


def _ellipse_stub(a: float, b: float):
    return antenna.ReflectarrayGeometry(np.zeros((1, 3)), 1.0, np.array([0.0, 1.0, 0.0]),
                                        9.0, 1.0, (a, b))


# -- density and permittivity -------------------------------------------------

def test_electron_density_examples():
    assert P.electron_density(1.0) == pytest.approx(2.2255e14, rel=1e-12)
    assert P.electron_density(10.0) == pytest.approx(7.98940212122e9, rel=1e-10)
    r = np.linspace(1, 300, 500)
    assert np.all(np.diff(P.electron_density(r)) < 0)
    with pytest.raises(P.PlasmaModelError):
        P.electron_density(0.5)


def test_plasma_frequency():
    assert P.plasma_frequency(0.0) == 0.0
    assert P.plasma_frequency(1e12) == pytest.approx(8978662.8204874, rel=1e-10)
    assert P.plasma_frequency(4e12) == pytest.approx(2 * P.plasma_frequency(1e12), rel=1e-14)


def test_permittivity_matches_cold_plasma_limit():
    n = 1e12
    f = 299792458.0 / LAM
    fp = P.plasma_frequency(n)
    # omega0 -> 0 reduces to 1 - (f_p/f)^2
    assert P.permittivity(LAM, n, omega0=0.0) - 1 == pytest.approx(-(fp / f) ** 2, rel=1e-12)
    assert P.permittivity(LAM, n, omega0=1.0) - 1 == pytest.approx(-8.06e-7, rel=2e-3)
    assert P.permittivity(LAM, 0.0) == 1.0
    assert P.permittivity(LAM, 2.2255e14) == pytest.approx(0.9998203397385106, rel=1e-13)


@given(st.floats(1e4, 1e20))
def test_permittivity_below_one(n):
    assert P.permittivity(LAM, n) < 1


def test_resonance_is_rejected():
    omega0 = 2 * math.pi * 299792458.0 / 1.0
    with pytest.raises(P.PlasmaModelError, match="resonance"):
        P.permittivity(1.0, 1e10, omega0=omega0)
    with pytest.raises(P.PlasmaModelError):
        P.delta_epsilon(0.0, 1.0)


def test_density_fluctuation():
    assert P.density_fluctuation(7.99e9, 1, 3e6) == pytest.approx(2663.33, rel=1e-5)
    assert P.density_fluctuation(1e9, 2, 5) == pytest.approx(P.density_fluctuation(1e9, 1, 5) / 2)
    with pytest.raises(P.PlasmaModelError):
        P.density_fluctuation(1e9, 0, 1)


def test_delta_epsilon_is_permittivity_slope():
    n, h = 1e10, 1e10
    fd = (P.permittivity(LAM, n + h) - P.permittivity(LAM, n - h)) / (2 * h)
    assert P.delta_epsilon(LAM, 1.0) == pytest.approx(fd, rel=1e-9)
    assert P.delta_epsilon(LAM, 0.0) == 0.0
    assert P.delta_epsilon(LAM, 5.0) < 0
    assert P.delta_epsilon(LAM, 2.2315269224756196) == pytest.approx(-1.8014680315105553e-18,
                                                                     rel=1e-12)


# -- path phase ----------------------------------------------------------------

def test_state_validation():
    assert P.PlasmaState(1, 3e6).valid
    assert not P.PlasmaState(1e13, 1e3).valid
    for kwargs in ({"alpha": 0, "beta": 1}, {"alpha": 1, "beta": -1},
                   {"alpha": 1, "beta": 1, "r_over_rs": 0.9},
                   {"alpha": 1, "beta": 1, "path_length": 0}):
        with pytest.raises(P.PlasmaModelError):
            P.PlasmaState(**kwargs)
    with pytest.raises(P.PlasmaModelError, match="out of model"):
        P.phase_shift(P.PlasmaState(1e13, 1e3), LAM)


def test_phase_constant_integrand():
    st_ = P.PlasmaState(1, 3e6)
    assert P.phase_shift(st_, LAM, delta_eps=lambda ell: 0.0) == 0.0
    phi = P.phase_shift(st_, LAM, delta_eps=lambda ell: -1e-20)
    assert phi == pytest.approx(-4.0254e-10, rel=1e-4)
    assert phi == pytest.approx((2 * math.pi / LAM) / 2 * -1e-20 * 3.844e8, rel=1e-12)


def test_phase_default_state_value():
    # independent scalar evaluation at constant r = 215 r_s
    phi = P.phase_shift(P.PlasmaState(1, 3e6), LAM)
    assert phi == pytest.approx(-7.25167875048677e-8, rel=1e-10)
    # carrier frequency takes precedence for k
    assert P.phase_shift(P.PlasmaState(1, 3e6), LAM, carrier_frequency=2 * 299792458.0 / LAM) \
        == pytest.approx(2 * phi, rel=1e-12)


@pytest.mark.parametrize("per_panel", [False, True])
def test_phase_step_halving(per_panel):
    st_ = P.PlasmaState(1, 3e6)
    a = P.phase_shift(st_, LAM, steps=1000, per_panel=per_panel)
    b = P.phase_shift(st_, LAM, steps=500, per_panel=per_panel)
    assert abs(a - b) <= 1e-3 * abs(a)


def test_phase_rejects_zero_steps():
    with pytest.raises(ValueError):
        P.phase_shift(P.PlasmaState(1, 3e6), LAM, steps=0)


def test_per_panel_offsets_grow_away_from_midpoint():
    r = P.PlasmaState(1, 3e6).offsets(1000, per_panel=True)
    assert r.min() >= 215.0
    assert r[0] > r[500] and r[-1] > r[500]


# -- arrival angle ------------------------------------------------------------

def test_aoa_fluctuation_examples():
    assert P.aoa_fluctuation(0.0, 1.0, 209.44) == 0.0
    assert P.aoa_fluctuation(2.0944e-2, 1.0, 209.44) == pytest.approx(1e-4, rel=1e-12)
    assert P.aoa_fluctuation(1.0, 0.25, 1.0) == pytest.approx(2 * P.aoa_fluctuation(1.0, 1.0, 1.0))
    with pytest.raises(P.PlasmaModelError):
        P.aoa_fluctuation(1.0, 0.0, 1.0)
    with pytest.raises(P.PlasmaModelError):
        P.aoa_fluctuation(1.0, -0.5, 1.0)


@pytest.fixture(scope="module")
def ellipse():
    return antenna.lattice_geometry(0.4, 0.25, 0.01)


def test_aperture_average_linear_and_even(ellipse):
    s = 3.7
    assert P.aoa_aperture_average(ellipse, lambda x, z: s * x + 5 * z, K) \
        == pytest.approx(s / K, rel=1e-12)
    assert abs(P.aoa_aperture_average(ellipse, lambda x, z: 2.0 * x * x + z, K)) < 1e-15


def _smooth_field(seed: int):
    rng = np.random.default_rng(seed)
    kx, kz = rng.uniform(-8, 8, (2, 6))
    amp, ph = rng.uniform(0.2, 1, 6), rng.uniform(0, 2 * math.pi, 6)
    slope = rng.uniform(1, 3)

    def phi(x, z):
        return slope * x + float(np.sum(amp * np.sin(kx * x + kz * z + ph)))
    return phi


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_aperture_average_vs_finer_grid(ellipse, seed):
    phi = _smooth_field(seed)
    fine = antenna.lattice_geometry(0.4, 0.25, 0.0025)
    coarse = P.aoa_aperture_average(ellipse, phi, K)
    ref = P.aoa_aperture_average(fine, phi, K)
    assert coarse == pytest.approx(ref, rel=5e-3)


def test_aperture_average_vs_dblquad(ellipse):
    from scipy import integrate

    a, b = 0.4, 0.25

    def dphi(x, z):
        return 3 * math.cos(3 * x) * math.cos(2 * z)

    chord = lambda z: a * math.sqrt(max(1 - (z / b) ** 2, 0.0))  # noqa: E731
    ref, _ = integrate.dblquad(dphi, -b, b, lambda z: -chord(z), chord)
    got = P.aoa_aperture_average(ellipse, lambda x, z: math.sin(3 * x) * math.cos(2 * z), 1.0)
    assert got == pytest.approx(ref / (math.pi * a * b), rel=1e-4)


def test_aperture_average_cell_rows_without_ellipse():
    pts = np.array([[x, 0.0, z] for x in (-1.0, 0.0, 1.0) for z in (-1.0, 0.0, 1.0)])
    geom = antenna.ReflectarrayGeometry(pts, 1.0, np.array([0, 1.0, 0]), 9, 1, (0.0, 0.0))
    assert P.aoa_aperture_average(geom, lambda x, z: 2.5 * x, K) == pytest.approx(2.5 / K)


def test_aperture_average_empty():
    geom = antenna.ReflectarrayGeometry(np.zeros((0, 3)), 1.0, np.array([0, 1.0, 0]), 9, 1,
                                        (1, 1))
    with pytest.raises(ValueError):
        P.aoa_aperture_average(geom, lambda x, z: x, K)


def test_end_to_end_phase_gradient(ellipse):
    # delta-eps varies linearly across the aperture; tilt must equal the pointwise gradient
    st_ = P.PlasmaState(1, 3e6)
    d0, g = -1e-18, 0.5

    def phi(x, z):
        return P.phase_shift(st_, LAM, delta_eps=lambda ell: d0 * (1 + g * x), steps=50)

    pointwise = P.aoa_fluctuation(0.5 * K * d0 * g * st_.path_length, 1.0, K)
    assert P.aoa_aperture_average(ellipse, phi, K) == pytest.approx(pointwise, rel=5e-3)


# -- aperture filter ------------------------------------------------------------

def _j1_series(x: float, terms: int = 30) -> float:
    return math.fsum((-1) ** m * (x / 2) ** (2 * m + 1) / (math.factorial(m) *
                     math.factorial(m + 1)) for m in range(terms))


def test_j1_against_series():
    assert _j1_series(1.0) == pytest.approx(0.4400505857, abs=1e-10)
    for x in (1e-3, 0.5, 1.0, 3.0, 7.5):
        assert P.bessel_j1(x) == pytest.approx(_j1_series(x), rel=1e-12)


def test_filter_small_q_limit():
    geom = _ellipse_stub(0.8, 0.5)
    a, b = 0.8, 0.5
    r = math.sqrt(a * b)
    limit = RE**2 * LAM**4 / (a * a * b * b * r * r) / 4
    assert P.aperture_filter_term(geom, 0.0, 0.0, LAM) == pytest.approx(limit, rel=1e-14)
    assert P.aperture_filter_term(geom, 1e-9, 0.0, LAM) == pytest.approx(limit, rel=1e-12)
    assert P.aperture_filter(geom, 0.0, LAM) == pytest.approx(RE**2 * LAM**4 / 4, rel=1e-14)
    with pytest.raises(ValueError):
        P.aperture_filter_term(_ellipse_stub(0.0, 1.0), 1.0, 0.0, LAM)


def test_filter_matches_brute_force_disc():
    """Term I by direct quadrature over a disc of radius two cells."""
    spacing = 0.01
    r = 2 * spacing
    geom = _ellipse_stub(r, r)
    area = math.pi * r * r
    xg, wg = np.polynomial.legendre.leggauss(40)
    rr, wr = 0.5 * r * (xg + 1), 0.5 * r * wg
    th = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    for kx, kz in [(30.0, 0.0), (50.0, 80.0), (0.0, 170.0), (120.0, -60.0)]:
        x = rr[:, None] * np.cos(th)[None, :]
        z = rr[:, None] * np.sin(th)[None, :]
        integral = np.sum(np.exp(1j * (kx * x + kz * z)) * (rr * wr)[:, None]) \
            * (2 * math.pi / len(th))
        # the 4-fold integral factorises into |2-D integral|^2
        term_i = RE**2 * LAM**4 / (4 * area**2) * abs(integral) ** 2
        closed = P.aperture_filter_term(geom, kx, kz, LAM) * P.filter_scale(geom)
        assert closed == pytest.approx(term_i, rel=1e-3)
        assert P.aperture_filter(geom, math.hypot(kx, kz), LAM) == pytest.approx(closed,
                                                                                 rel=1e-12)


# -- spectral variance ----------------------------------------------------------

def test_variance_zero_and_linear():
    geom = _disc(0.2, 0.01)
    zero = P.TurbulenceSpectrum(0.0)
    assert P.aoa_variance(geom, zero, LAM, 3.844e8) == 0.0
    s1 = P.TurbulenceSpectrum(1.0)
    s3 = P.TurbulenceSpectrum(3.0)
    v1 = P.aoa_variance(geom, s1, LAM, 3.844e8)
    assert v1 > 0
    assert P.aoa_variance(geom, s3, LAM, 3.844e8) == pytest.approx(3 * v1, rel=1e-9)


def test_variance_band_oracle():
    geom = _ellipse_stub(0.3, 0.3)
    q0, width, level, length = 25.0, 1e-3, 2.0, 1e6
    spectrum = P.TurbulenceSpectrum.band(level, q0, width)
    mp.dps = 30
    r = mpf(0.3)

    def integrand(q):
        filt = mpf(RE) ** 2 * mpf(LAM) ** 4 * (besselj(1, r * q) / (r * q)) ** 2
        return filt * q**3 * level

    oracle = 4 * mp.pi**2 * length * quad(integrand, [q0 - width / 2, q0 + width / 2])
    assert P.aoa_variance(geom, spectrum, LAM, length) == pytest.approx(float(oracle), rel=1e-6)


def test_variance_divergence_errors():
    geom = _disc(0.2, 0.01)
    with pytest.raises(ValueError, match="outer scale"):
        P.aoa_variance(geom, P.TurbulenceSpectrum(1.0, -5.0, k_min=0.0), LAM, 1.0)
    with pytest.raises(ValueError, match="inner-scale"):
        P.aoa_variance(geom, P.TurbulenceSpectrum(1.0, k_max=math.inf), LAM, 1.0)
    with pytest.raises(ValueError):
        P.TurbulenceSpectrum(-1.0)
    with pytest.raises(ValueError):
        P.TurbulenceSpectrum.band(1.0, 1.0, 3.0)


def test_kolmogorov_normalisation():
    spectrum = P.TurbulenceSpectrum.kolmogorov(7.3, 1e9, 1e5)
    assert spectrum.total() == pytest.approx(7.3, rel=1e-6)
    assert np.all(spectrum(np.logspace(-12, 2, 50)) >= 0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10), st.floats(1.01, 5))
def test_variance_monotone_in_amplitude(a, factor):
    geom = _ellipse_stub(0.5, 0.5)
    v1 = P.aoa_variance(geom, P.TurbulenceSpectrum(a), LAM, 1e6)
    v2 = P.aoa_variance(geom, P.TurbulenceSpectrum(a * factor), LAM, 1e6)
    assert 0 <= v1 < v2


# -- samplers -----------------------------------------------------------------

def test_panel_sampler_variance():
    st_ = P.PlasmaState(1, 3e6)
    rng = np.random.default_rng(11)
    draws = np.array([P.sample_panel_aoa(st_, LAM, 1.72, rng) for _ in range(100_000)])
    rms = P.panel_aoa_rms(st_, LAM, 1.72)
    assert abs(draws.mean()) < 4 * rms / math.sqrt(len(draws))
    assert draws.var() == pytest.approx(rms**2, rel=0.03)


def test_gaussian_draws_match_spectral_variance():
    st_ = P.PlasmaState(1, 3e6)
    rms = P.spectral_aoa_rms(st_, _ellipse_stub(0.86, 0.86), LAM)
    assert rms > 0
    draws = rms * np.random.default_rng(5).standard_normal(100_000)
    assert draws.var() == pytest.approx(rms**2, rel=0.03)


def test_panel_rms_scales_with_alpha():
    a = P.panel_aoa_rms(P.PlasmaState(1, 3e6), LAM, 1.72)
    b = P.panel_aoa_rms(P.PlasmaState(4, 3e6), LAM, 1.72)
    assert b == pytest.approx(a / 4, rel=1e-12)


def test_sampler_rejects_invalid_state():
    with pytest.raises(P.PlasmaModelError):
        P.sample_panel_aoa(P.PlasmaState(1e13, 1e3), LAM, 1.0, np.random.default_rng(0))
