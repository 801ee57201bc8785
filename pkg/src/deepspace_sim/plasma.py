"""Solar-plasma propagation: density, permittivity, phase shift and arrival-angle jitter."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .constants import CONSTANTS, C

_E = CONSTANTS.electron_charge
_ME = CONSTANTS.electron_mass
_EPS0 = CONSTANTS.vacuum_permittivity
_RE = CONSTANTS.classical_electron_radius


class PlasmaModelError(ValueError):
    """Plasma state or path outside the model's domain."""


# -- bulk plasma -------------------------------------------------------------

def electron_density(r_over_rs):
    """Free-electron density [m^-3] at ``r_over_rs`` solar radii from the Sun's centre."""
    r = np.asarray(r_over_rs, dtype=float)
    if np.any(r < 1.0):
        raise PlasmaModelError("r_over_rs < 1 lies inside the Sun")
    n = 2.21e14 / r**6 + 1.55e12 / r**2.3
    return float(n) if n.ndim == 0 else n


def plasma_frequency(n_e):
    n = np.asarray(n_e, dtype=float)
    if np.any(n < 0):
        raise PlasmaModelError("negative electron density")
    f = _E / (2.0 * math.pi) * np.sqrt(n / (_EPS0 * _ME))
    return float(f) if f.ndim == 0 else f


def _drude_denominator(wavelength: float, omega0: float) -> float:
    if wavelength <= 0:
        raise PlasmaModelError("wavelength must be positive")
    den = wavelength**2 * omega0**2 - 4.0 * math.pi**2 * C**2
    if abs(den) <= 1e-12 * 4.0 * math.pi**2 * C**2:
        raise PlasmaModelError("carrier sits on the resonance: singular permittivity")
    return _EPS0 * _ME * den


def permittivity(wavelength: float, n_e, omega0: float = 1.0):
    """Relative permittivity of a cold electron gas with restoring resonance ``omega0``."""
    return 1.0 + delta_epsilon(wavelength, n_e, omega0)


def density_fluctuation(n_e, alpha: float, beta: float):
    if alpha <= 0 or beta <= 0:
        raise PlasmaModelError("alpha and beta must be positive")
    return n_e / (alpha * beta)


def delta_epsilon(wavelength: float, delta_n, omega0: float = 1.0):
    """Permittivity offset produced by an electron-density offset ``delta_n``.

    Linear in ``delta_n``; the same expression gives ``permittivity - 1``.
    """
    out = (wavelength * _E) ** 2 * np.asarray(delta_n, dtype=float) \
        / _drude_denominator(wavelength, omega0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PlasmaState:
    """Plasma along one Earth-Moon path.

    ``r_over_rs`` is the perpendicular offset of the path from the Sun in
    solar radii.  The density-fluctuation model holds only while
    ``r_over_rs**6`` dominates ``alpha * beta`` (checked with a factor 10).
    """

    alpha: float
    beta: float
    omega0: float = 1.0
    r_over_rs: float = 215.0
    path_length: float = 3.844e8

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise PlasmaModelError("alpha and beta must be positive")
        if self.r_over_rs < 1:
            raise PlasmaModelError("r_over_rs must be >= 1")
        if not self.path_length > 0:
            raise PlasmaModelError("path_length must be positive")

    @property
    def valid(self) -> bool:
        return self.r_over_rs**6 >= 10.0 * self.alpha * self.beta

    def offsets(self, steps: int, per_panel: bool = False) -> np.ndarray:
        """Sun offset (solar radii) at the left end of each path panel."""
        if not per_panel:
            return np.full(steps, float(self.r_over_rs))
        ell = np.arange(steps) * (self.path_length / steps) - 0.5 * self.path_length
        return np.hypot(self.r_over_rs, ell / CONSTANTS.sun_radius)

    def density_rms(self, steps: int, per_panel: bool = False) -> np.ndarray:
        return density_fluctuation(electron_density(self.offsets(steps, per_panel)),
                                   self.alpha, self.beta)


# -- phase and arrival angle -------------------------------------------------

def rectangular_rule(values: np.ndarray, length: float) -> float:
    """Left-endpoint rule: ``values`` sampled at the left end of equal panels."""
    values = np.asarray(values, dtype=float)
    return float(math.fsum(values) * (length / len(values)))


def phase_shift(state: PlasmaState, wavelength: float, carrier_frequency: float | None = None,
                steps: int = 1000, *, per_panel: bool = False,
                delta_eps: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """Plasma phase ``(k/2) * integral of delta-eps`` along the path.

    By default the permittivity offset follows the mean fluctuation
    magnitude ``n_e / (alpha beta)``; ``delta_eps`` overrides it with any
    function of the path coordinate (metres from the transmitter).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not state.valid:
        raise PlasmaModelError(
            f"state out of model: (r/r_s)^6 = {state.r_over_rs**6:.3g} "
            f"not >> alpha*beta = {state.alpha * state.beta:.3g}")
    k = 2.0 * math.pi * (carrier_frequency / C if carrier_frequency else 1.0 / wavelength)
    if delta_eps is None:
        de = delta_epsilon(wavelength, state.density_rms(steps, per_panel), state.omega0)
    else:
        ell = np.arange(steps) * (state.path_length / steps)
        de = np.broadcast_to(np.asarray(delta_eps(ell), dtype=float), (steps,))
    return 0.5 * k * rectangular_rule(de, state.path_length)


def aoa_fluctuation(phase_gradient, eps, k: float):
    """Wavefront tilt from a transverse phase gradient [rad/m]."""
    eps_arr = np.asarray(eps, dtype=float)
    if np.any(eps_arr <= 0):
        raise PlasmaModelError("permittivity <= 0: over-dense plasma reflects the signal")
    return np.asarray(phase_gradient) / (k * np.sqrt(eps_arr))


def aoa_aperture_average(geom, phase: Callable, k: float) -> float:
    """Aperture-mean tilt ``(1/(kA)) * area integral of d(phase)/dx``.

    The aperture is cut into strips one cell pitch high.  Along x each
    strip is integrated exactly (the phase difference between the chord end
    points on the ellipse); across a strip a 4-point Gauss rule is used.
    ``A`` is the area given by the same rule, so a linear phase ``s*x``
    yields ``s/k`` exactly.  Geometries without an ellipse fall back to the
    cell rows.
    """
    pos = geom.cell_positions
    if len(pos) == 0:
        raise ValueError("empty aperture")
    d = geom.cell_spacing
    a, b = geom.semi_axes
    if a > 0 and b > 0:
        edges = np.linspace(-b, b, max(int(math.ceil(2.0 * b / d)), 1) + 1)
        t, w = np.polynomial.legendre.leggauss(4)
        mid, half_h = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        zs = (mid[:, None] + half_h[:, None] * t[None, :]).ravel()
        wz = (half_h[:, None] * w[None, :]).ravel()
        half = a * np.sqrt(1.0 - (zs / b) ** 2)
        rows = zip(zs, -half, half, wz)
    else:
        idx = np.round(pos[:, 2] / d).astype(np.int64)
        rows = []
        for j in np.unique(idx):
            x = pos[idx == j, 0]
            rows.append((j * d, x.min() - 0.5 * d, x.max() + 0.5 * d, d))
    total = area = 0.0
    for z, lo, hi, wz in rows:
        total += (float(phase(hi, z)) - float(phase(lo, z))) * wz
        area += (hi - lo) * wz
    return total / (k * area)


# -- aperture filter and spectral variance -----------------------------------

def bessel_j1(x):
    return special.j1(x)


def _j1_over_x(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    # J1(x)/x = 1/2 - x^2/16 + ...
    return np.where(small, 0.5 - x * x / 16.0, special.j1(safe) / safe)


def aperture_filter_term(geom, kx, kz, wavelength: float):
    """Closed-form aperture filter ``r_e^2 lam^4 / (a^2 b^2 r^2) [J1(rq)/(rq)]^2``.

    ``r = sqrt(a b)`` and ``q = hypot(kx, kz)``.  Multiply by
    :func:`filter_scale` to obtain the disc-average value
    ``r_e^2 lam^4 [J1(rq)/(rq)]^2``.
    """
    a, b = geom.semi_axes
    r = math.sqrt(a * b)
    if r <= 0:
        raise ValueError("aperture radius must be positive")
    q = np.hypot(kx, kz)
    out = _RE**2 * wavelength**4 / (a * a * b * b * r * r) * _j1_over_x(r * q) ** 2
    return float(out) if np.ndim(out) == 0 else out


def filter_scale(geom) -> float:
    """Factor taking the closed form to the aperture-averaged definition."""
    a, b = geom.semi_axes
    return a * a * b * b * (a * b)


def aperture_filter(geom, q, wavelength: float):
    """Aperture-averaged filter ``r_e^2 lam^4 [J1(rq)/(rq)]^2`` (radial wavenumber ``q``)."""
    a, b = geom.semi_axes
    r = math.sqrt(a * b)
    return _RE**2 * wavelength**4 * _j1_over_x(r * np.asarray(q, dtype=float)) ** 2


@dataclass(frozen=True)
class TurbulenceSpectrum:
    """Isotropic density spectrum ``amplitude * kappa**exponent`` on [k_min, k_max]."""

    amplitude: float
    exponent: float = -11.0 / 3.0
    k_min: float = 2.0 * math.pi / 1e9
    k_max: float = 2.0 * math.pi / 1e5

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if not (0 <= self.k_min < self.k_max):
            raise ValueError("need 0 <= k_min < k_max")

    def __call__(self, kappa):
        kappa = np.asarray(kappa, dtype=float)
        inside = (kappa >= self.k_min) & (kappa <= self.k_max)
        with np.errstate(divide="ignore"):
            val = self.amplitude * np.where(inside, kappa, 1.0) ** self.exponent
        return np.where(inside, val, 0.0)

    @classmethod
    def kolmogorov(cls, density_variance: float, outer_scale: float = 1e9,
                   inner_scale: float = 1e5) -> "TurbulenceSpectrum":
        """Power law normalised so its 3-D integral equals ``density_variance``."""
        k_lo, k_hi = 2.0 * math.pi / outer_scale, 2.0 * math.pi / inner_scale
        # 4 pi * integral of k^2 k^(-11/3) dk
        norm = 4.0 * math.pi * 1.5 * (k_lo ** (-2.0 / 3.0) - k_hi ** (-2.0 / 3.0))
        return cls(density_variance / norm, -11.0 / 3.0, k_lo, k_hi)

    @classmethod
    def band(cls, level: float, center: float, width: float) -> "TurbulenceSpectrum":
        """Flat spectrum on a narrow band; approximates a line at ``center``."""
        if width <= 0 or width >= 2 * center:
            raise ValueError("need 0 < width < 2*center")
        return cls(level, 0.0, center - 0.5 * width, center + 0.5 * width)

    def total(self) -> float:
        """3-D integral of the spectrum."""
        val, _ = integrate.quad(lambda k: 4.0 * math.pi * k * k * float(self(k)),
                                self.k_min, self.k_max, limit=200)
        return val


def aoa_variance(geom, spectrum: TurbulenceSpectrum, wavelength: float,
                 path_length: float) -> float:
    """Mean-square aperture tilt for an isotropic turbulence spectrum.

    The path-delta collapses the line-of-sight wavenumber, leaving
    ``4 pi^2 L * integral of I(q) q^3 Psi(q) dq`` over the spectrum's band.
    """
    if spectrum.amplitude == 0:
        return 0.0
    if spectrum.k_min == 0 and spectrum.exponent + 3.0 <= -1.0:
        raise ValueError("spectrum diverges at kappa -> 0; set an outer scale")
    if not math.isfinite(spectrum.k_max):
        raise ValueError("spectrum needs a finite inner-scale cutoff")

    def integrand(t):
        q = math.exp(t)
        return float(aperture_filter(geom, q, wavelength)) * q**4 * float(spectrum(q))

    lo = math.log(max(spectrum.k_min, 1e-300))
    hi = math.log(spectrum.k_max)
    if spectrum.k_min == 0:
        val, _ = integrate.quad(
            lambda q: float(aperture_filter(geom, q, wavelength)) * q**3 * float(spectrum(q)),
            0.0, spectrum.k_max, limit=500)
    else:
        val, _ = integrate.quad(integrand, lo, hi, limit=500, epsabs=0.0, epsrel=1e-10)
    return max(4.0 * math.pi**2 * path_length * val, 0.0)


# -- Monte Carlo arrival-angle samplers ---------------------------------------

def panel_aoa_rms(state: PlasmaState, wavelength: float, diameter: float,
                  steps: int = 1000, *, per_panel: bool = False) -> float:
    """Standard deviation of :func:`sample_panel_aoa` (unit gain)."""
    sig = np.abs(delta_epsilon(wavelength, state.density_rms(steps, per_panel), state.omega0))
    h = state.path_length / steps
    eps = permittivity(wavelength, electron_density(state.r_over_rs), state.omega0)
    # var(phi1 - phi2) = 2 (k h / 2)^2 sum(sig^2); tilt = dphi / (k sqrt(eps) D)
    return float(math.sqrt(0.5 * h * h * float(np.sum(sig**2)) / eps) / diameter)


def sample_panel_aoa(state: PlasmaState, wavelength: float, diameter: float, rng,
                     steps: int = 1000, *, per_panel: bool = False) -> float:
    """One arrival-angle draw from two rays across the aperture diameter.

    Each ray accumulates the rectangular-rule phase of independent per-panel
    Gaussian density offsets of rms ``n_e / (alpha beta)``; the tilt is the
    phase difference over the diameter, scaled as a wavefront gradient.
    """
    if not state.valid:
        raise PlasmaModelError("state out of model")
    rms = state.density_rms(steps, per_panel)
    draws = rng.standard_normal((2, steps)) * rms
    de = delta_epsilon(wavelength, draws, state.omega0)
    k = 2.0 * math.pi / wavelength
    phi1 = 0.5 * k * rectangular_rule(de[0], state.path_length)
    phi2 = 0.5 * k * rectangular_rule(de[1], state.path_length)
    eps = permittivity(wavelength, electron_density(state.r_over_rs), state.omega0)
    return float(aoa_fluctuation((phi1 - phi2) / diameter, eps, k))


def spectral_aoa_rms(state: PlasmaState, geom, wavelength: float, *,
                     outer_scale: float = 1e9, inner_scale: float = 1e5) -> float:
    n_e = electron_density(state.r_over_rs)
    dn = density_fluctuation(n_e, state.alpha, state.beta)
    spectrum = TurbulenceSpectrum.kolmogorov(dn**2, outer_scale, inner_scale)
    return math.sqrt(aoa_variance(geom, spectrum, wavelength, state.path_length))
