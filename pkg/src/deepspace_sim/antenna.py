"""Offset-fed planar reflectarray: layout, steering phases, far field, metrics.

Frame: the aperture lies in the x-z plane with its normal along +y.  The
polar angle ``theta`` is measured from the normal and the azimuth ``phi`` in
the aperture plane from +x, so the observation unit vector is
``(sin t cos p, cos t, sin t sin p)``.  The aperture is backed by a ground
plane: the field is zero for ``theta > pi/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.signal import fftconvolve

from .config import ScenarioConfig
from .constants import C

_CHUNK_ELEMS = 1 << 21   # complex entries per work buffer


class PatternError(ValueError):
    pass


# -- geometry ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReflectarrayGeometry:
    cell_positions: np.ndarray      # (N, 3) metres, y == 0
    cell_spacing: float
    feed_position: np.ndarray       # (3,)
    feed_exponent: float
    element_exponent: float
    semi_axes: tuple[float, float]  # (a along x, b along z)
    lattice: np.ndarray | None = None   # (N, 2) integer (ix, iz) when grid-built
    target_cells: int | None = None

    @property
    def total_cells(self) -> int:
        return len(self.cell_positions)

    @property
    def diameter(self) -> float:
        return 2.0 * max(self.semi_axes)

    @property
    def area(self) -> float:
        """Quadrature area of the cell grid (cells x spacing^2)."""
        return self.total_cells * self.cell_spacing**2

    @property
    def equivalent_radius(self) -> float:
        a, b = self.semi_axes
        return math.sqrt(a * b)


def _lattice_in_ellipse(a: float, b: float, d: float) -> np.ndarray:
    na, nb = int(math.floor(a / d)), int(math.floor(b / d))
    ix = np.arange(-na, na + 1)
    iz = np.arange(-nb, nb + 1)
    IX, IZ = np.meshgrid(ix, iz, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        rx = np.where(a > 0, (IX * d / a) ** 2, np.where(IX == 0, 0.0, np.inf))
        rz = np.where(b > 0, (IZ * d / b) ** 2, np.where(IZ == 0, 0.0, np.inf))
    inside = rx + rz <= 1.0
    return np.column_stack([IX[inside], IZ[inside]])


def _feed_position(a: float, b: float, spacing: float, f_over_d: float,
                   feed_offset: float) -> np.ndarray:
    focal = f_over_d * max(2.0 * max(a, b), spacing)
    return np.array([-focal * math.sin(feed_offset), focal * math.cos(feed_offset), 0.0])


def lattice_geometry(a: float, b: float, spacing: float, *, f_over_d: float = 0.8,
                     feed_offset: float = math.radians(25.0), feed_exponent: float = 9.0,
                     element_exponent: float = 1.0, target_cells: int | None = None
                     ) -> ReflectarrayGeometry:
    """All lattice points ``(i d, j d)`` inside the ellipse with semi-axes ``a``, ``b``.

    The feed sits at focal distance ``f_over_d * D`` from the centre, tilted
    ``feed_offset`` from the normal in the x-y plane, and points at the
    centre.
    """
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    lattice = _lattice_in_ellipse(a, b, spacing)
    pos = np.zeros((len(lattice), 3))
    pos[:, 0] = lattice[:, 0] * spacing
    pos[:, 2] = lattice[:, 1] * spacing
    feed = _feed_position(a, b, spacing, f_over_d, feed_offset)
    return ReflectarrayGeometry(pos, spacing, feed, feed_exponent, element_exponent,
                                (a, b), lattice, target_cells)


def elliptical_aperture(n_cells: int, spacing: float, *, aspect_ratio: float = 1.0,
                        f_over_d: float = 0.8, feed_offset: float = math.radians(25.0),
                        feed_exponent: float = 9.0, element_exponent: float = 1.0
                        ) -> ReflectarrayGeometry:
    """Square lattice of pitch ``spacing`` clipped to an ellipse holding ~``n_cells``.

    The semi-axis is found by bisection on the step-wise cell count, keeping
    whichever side of the jump lands closer to ``n_cells``.
    """
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    if spacing <= 0:
        raise ValueError("spacing must be > 0")

    def count(a):
        return len(_lattice_in_ellipse(a, aspect_ratio * a, spacing))

    lo, hi = 0.0, spacing * (math.sqrt(n_cells / (math.pi * aspect_ratio)) + 2.0)
    while count(hi) < n_cells:
        hi *= 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if count(mid) >= n_cells:
            hi = mid
        else:
            lo = mid
    # hi: smallest radius reaching the target; lo: largest falling short
    a = hi if abs(count(hi) - n_cells) <= abs(count(lo) - n_cells) else lo
    return lattice_geometry(a, aspect_ratio * a, spacing, f_over_d=f_over_d,
                            feed_offset=feed_offset, feed_exponent=feed_exponent,
                            element_exponent=element_exponent, target_cells=n_cells)


def design_wavelength(config: ScenarioConfig) -> float:
    f = config.array.design_frequency_hz or config.carrier_frequency_hz
    return C / f


def build_aperture(config: ScenarioConfig) -> ReflectarrayGeometry:
    arr = config.array
    return elliptical_aperture(
        arr.n_cells, arr.spacing_wavelengths * design_wavelength(config),
        aspect_ratio=arr.aspect_ratio, f_over_d=arr.f_over_d,
        feed_offset=arr.feed_offset_rad, feed_exponent=arr.feed_exponent,
        element_exponent=arr.element_exponent)


def cell_amplitudes(geom: ReflectarrayGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Feed illumination per cell and the feed-to-cell distances.

    Amplitude is ``cos^qf(theta_f) cos^qe(theta_e) / R`` with ``theta_f`` the
    angle off the feed axis and ``theta_e`` the incidence angle from the
    aperture normal.
    """
    rel = geom.cell_positions - geom.feed_position
    R = np.linalg.norm(rel, axis=1)
    axis = -geom.feed_position / np.linalg.norm(geom.feed_position)
    cos_f = np.clip(rel @ axis / R, 0.0, 1.0)
    cos_e = np.clip(geom.feed_position[1] / R, 0.0, 1.0)
    return cos_f**geom.feed_exponent * cos_e**geom.element_exponent / R, R


# -- steering ----------------------------------------------------------------

def wrap_phase(x):
    """Wrap to (-pi, pi]."""
    return math.pi - np.mod(math.pi - np.asarray(x, dtype=float), 2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    phases: np.ndarray
    theta_s: float
    phi_s: float
    reference_phase: float
    wavenumber: float


def steering_phase_profile(geom: ReflectarrayGeometry, theta_s: float, phi_s: float,
                           k0: float, reference_phase: float = 0.0,
                           phase_bits: int | None = None) -> PhaseProfile:
    """Cell phases compensating the feed path and tilting the beam to (theta_s, phi_s).

    ``phase = k0 (R - sin(theta_s) (x cos(phi_s) + z sin(phi_s))) + phi_0``,
    wrapped to (-pi, pi] and optionally quantised to ``phase_bits`` bits.
    """
    if abs(theta_s) > math.pi / 2:
        raise ValueError("|theta_s| must not exceed pi/2")
    x = geom.cell_positions[:, 0]
    z = geom.cell_positions[:, 2]
    R = np.linalg.norm(geom.cell_positions - geom.feed_position, axis=1)
    tilt = math.sin(theta_s) * (x * math.cos(phi_s) + z * math.sin(phi_s))
    phases = wrap_phase(k0 * (R - tilt) + reference_phase)
    if phase_bits is not None:
        step = 2.0 * math.pi / 2**phase_bits
        phases = wrap_phase(np.round(phases / step) * step)
    return PhaseProfile(phases, theta_s, phi_s, reference_phase, k0)


# -- far field ---------------------------------------------------------------

def cell_weights(geom: ReflectarrayGeometry, profile: PhaseProfile, k: float) -> np.ndarray:
    if len(profile.phases) != geom.total_cells:
        raise PatternError(f"profile has {len(profile.phases)} phases for "
                           f"{geom.total_cells} cells")
    amp, R = cell_amplitudes(geom)
    return amp * np.exp(1j * (profile.phases - k * R))


class FieldEvaluator:
    """E(theta, phi) for fixed cell weights; vectorised over directions."""

    def __init__(self, geom: ReflectarrayGeometry, weights: np.ndarray, k: float):
        self.geom = geom
        self.weights = weights
        self.k = k
        self._W = None
        if geom.lattice is not None:
            ix, iz = geom.lattice[:, 0], geom.lattice[:, 1]
            self._I = int(np.abs(ix).max())
            self._J = int(np.abs(iz).max())
            W = np.zeros((2 * self._I + 1, 2 * self._J + 1), dtype=complex)
            W[ix + self._I, iz + self._J] = weights
            self._W = W
            self.z_symmetric = bool(np.array_equal(W, W[:, ::-1]))
        else:
            self.z_symmetric = False

    @property
    def peak_sum(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def _phasors(self, s: np.ndarray, n: int) -> np.ndarray:
        # exp(1j*k*d*m*s) for m = -n..n; negative orders are conjugates
        kd = self.k * self.geom.cell_spacing
        pos = np.exp(1j * kd * np.multiply.outer(s, np.arange(n + 1)))
        return np.concatenate([pos[:, :0:-1].conj(), pos], axis=1)

    def _lattice_field(self, u, v):
        out = np.empty(u.shape, dtype=complex)
        step = max(1, _CHUNK_ELEMS // self._W.shape[0])
        for i in range(0, len(u), step):
            sl = slice(i, i + step)
            ex = self._phasors(u[sl], self._I)
            ez = self._phasors(v[sl], self._J)
            out[sl] = np.einsum("pj,pj->p", ex @ self._W, ez)
        return out

    def _direct_field(self, ux, uy, uz):
        pos = self.geom.cell_positions
        out = np.empty(ux.shape, dtype=complex)
        step = max(1, _CHUNK_ELEMS // len(pos))
        for i in range(0, len(ux), step):
            sl = slice(i, i + step)
            arg = self.k * (np.multiply.outer(ux[sl], pos[:, 0])
                            + np.multiply.outer(uy[sl], pos[:, 1])
                            + np.multiply.outer(uz[sl], pos[:, 2]))
            out[sl] = np.exp(1j * arg) @ self.weights
        return out

    def __call__(self, theta, phi) -> np.ndarray:
        theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
        shape = theta.shape
        theta, phi = theta.ravel(), phi.ravel()
        st = np.sin(theta)
        u, v, w = st * np.cos(phi), st * np.sin(phi), np.cos(theta)
        if self._W is not None:
            E = self._lattice_field(u, v)
        else:
            E = self._direct_field(u, w, v)
        E[w < 0] = 0.0
        return E.reshape(shape)

    def cut(self, psi, phi0: float = 0.0) -> np.ndarray:
        """Field along the plane through the normal at azimuth ``phi0``.

        ``psi`` is the signed angle from the normal; negative values fall on
        the ``phi0 + pi`` side.
        """
        psi = np.asarray(psi, float)
        return self(np.abs(psi), np.where(psi >= 0, phi0, phi0 + math.pi))


@dataclass(frozen=True)
class GridSpec:
    n_theta: int = 720
    n_phi: int = 1440

    def __post_init__(self):
        if self.n_theta < 2 or self.n_theta % 2:
            raise ValueError("n_theta must be even and >= 2")
        if self.n_phi < 4 or self.n_phi % 2:
            raise ValueError("n_phi must be even and >= 4")

    @property
    def theta(self) -> np.ndarray:
        # midpoints of n_theta uniform divisions of [0, pi]
        return (np.arange(self.n_theta) + 0.5) * (math.pi / self.n_theta)

    @property
    def phi(self) -> np.ndarray:
        return np.arange(self.n_phi) * (2.0 * math.pi / self.n_phi)

    @property
    def cell_solid_angle(self) -> float:
        return (math.pi / self.n_theta) * (2.0 * math.pi / self.n_phi)


@dataclass(frozen=True, eq=False)
class RadiationPattern:
    grid: GridSpec
    field: np.ndarray          # (n_theta, n_phi) complex
    total_power: float         # sum |E|^2 sin(theta) dtheta dphi over the grid
    evaluator: Callable

    @property
    def theta(self) -> np.ndarray:
        return self.grid.theta

    @property
    def phi(self) -> np.ndarray:
        return self.grid.phi

    @property
    def power_weights(self) -> np.ndarray:
        """|E|^2 sin(theta) dOmega per grid cell."""
        return (np.abs(self.field) ** 2 * np.sin(self.theta)[:, None]
                * self.grid.cell_solid_angle)

    @property
    def directivity(self) -> np.ndarray:
        return 4.0 * math.pi * np.abs(self.field) ** 2 / self.total_power

    def peak_index(self) -> tuple[int, int]:
        i, j = np.unravel_index(np.argmax(np.abs(self.field)), self.field.shape)
        return int(i), int(j)

    def peak_direction(self) -> tuple[float, float]:
        i, j = self.peak_index()
        return float(self.theta[i]), float(self.phi[j])

    def field_at(self, theta, phi):
        return self.evaluator(theta, phi)


def radiation_pattern(geom: ReflectarrayGeometry, profile: PhaseProfile,
                      grid_spec: GridSpec | None = None, k: float | None = None
                      ) -> RadiationPattern:
    """Sample the far field on a uniform (theta, phi) grid.

    ``k`` is the operating wavenumber (defaults to the profile's design
    wavenumber).
    """
    k = profile.wavenumber if k is None else k
    return pattern_from_weights(geom, cell_weights(geom, profile, k), k, grid_spec)


def pattern_from_weights(geom: ReflectarrayGeometry, weights: np.ndarray, k: float,
                         grid_spec: GridSpec | None = None) -> RadiationPattern:
    """Far field of arbitrary complex cell weights.

    The back hemisphere is zero and is not evaluated; when the weights are
    mirror-symmetric in z only half the azimuths are computed.
    """
    grid_spec = grid_spec or GridSpec()
    weights = np.asarray(weights, dtype=complex)
    if len(weights) != geom.total_cells:
        raise PatternError(f"{len(weights)} weights for {geom.total_cells} cells")
    ev = FieldEvaluator(geom, weights, k)
    theta, phi = grid_spec.theta, grid_spec.phi
    nt_front = grid_spec.n_theta // 2
    field = np.zeros((grid_spec.n_theta, grid_spec.n_phi), dtype=complex)
    if ev.z_symmetric:
        half = grid_spec.n_phi // 2
        T, P = np.meshgrid(theta[:nt_front], phi[:half + 1], indexing="ij")
        part = ev(T, P)
        field[:nt_front, :half + 1] = part
        # phi -> 2 pi - phi mirrors z
        field[:nt_front, half + 1:] = part[:, 1:half][:, ::-1]
    else:
        T, P = np.meshgrid(theta[:nt_front], phi, indexing="ij")
        field[:nt_front] = ev(T, P)
    power = float(np.sum(np.abs(field[:nt_front]) ** 2 * np.sin(theta[:nt_front])[:, None])
                  * grid_spec.cell_solid_angle)
    return RadiationPattern(grid_spec, field, power, ev)


def radiated_power_exact(geom: ReflectarrayGeometry, profile: PhaseProfile,
                         k: float | None = None) -> float:
    """Closed-form hemisphere power for in-plane cells.

    Each cell pair contributes ``2 pi sinc(k |r_m - r_n|)``; on a lattice the
    pair sum collapses onto the weight autocorrelation.
    """
    k = profile.wavenumber if k is None else k
    return power_from_weights(geom, cell_weights(geom, profile, k), k)


def power_from_weights(geom: ReflectarrayGeometry, w: np.ndarray, k: float) -> float:
    w = np.asarray(w, dtype=complex)
    if geom.lattice is not None:
        ev = FieldEvaluator(geom, w, k)
        W = ev._W
        corr = fftconvolve(W, W[::-1, ::-1].conj())
        di = np.arange(-2 * ev._I, 2 * ev._I + 1)
        dj = np.arange(-2 * ev._J, 2 * ev._J + 1)
        rho = k * geom.cell_spacing * np.hypot(*np.meshgrid(di, dj, indexing="ij"))
        return float(2.0 * math.pi * np.sum(corr * np.sinc(rho / math.pi)).real)
    pos = geom.cell_positions
    rho = k * np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    return float(2.0 * math.pi * (w.conj() @ np.sinc(rho / math.pi) @ w).real)


# -- pattern metrics ---------------------------------------------------------

def directivity(pattern: RadiationPattern, theta0: float, phi0: float, *,
                amplitude_numerator: bool = False,
                min_grid: tuple[int, int] = (180, 360)) -> float:
    """4 pi |E(theta0, phi0)|^2 over the uniform-division power sum.

    ``amplitude_numerator`` uses |E| rather than |E|^2 in the numerator.
    """
    if pattern.grid.n_theta < min_grid[0] or pattern.grid.n_phi < min_grid[1]:
        raise PatternError(f"grid {pattern.grid.n_theta}x{pattern.grid.n_phi} below "
                           f"minimum {min_grid[0]}x{min_grid[1]}")
    if not pattern.total_power > 0:
        raise PatternError("zero total radiated power")
    mag = abs(complex(pattern.field_at(theta0, phi0)))
    num = mag if amplitude_numerator else mag**2
    return 4.0 * math.pi * num / pattern.total_power


def peak_on_cut(pattern: RadiationPattern) -> tuple[float, float]:
    """Refined signed peak angle on the cut through the grid maximum, and that cut's azimuth."""
    theta_p, phi_p = pattern.peak_direction()
    dth = math.pi / pattern.grid.n_theta

    def neg(psi):
        return -abs(complex(pattern.evaluator.cut(psi, phi_p)))

    lo, hi = max(theta_p - dth, -math.pi / 2), min(theta_p + dth, math.pi / 2)
    res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x), phi_p


def beamwidth(pattern: RadiationPattern, level_db: float = 3.0) -> float:
    """Full main-lobe width ``level_db`` below the peak on the cut through the peak.

    The cut is walked outward from the peak at a quarter of the grid step
    until the level is crossed, then the crossing is located by bisection.
    """
    if level_db <= 0:
        raise ValueError("level_db must be positive")
    psi_p, phi_p = peak_on_cut(pattern)
    cut = pattern.evaluator.cut
    peak = abs(complex(cut(psi_p, phi_p)))
    if peak == 0:
        raise PatternError("level never crossed: zero field")
    target = peak * 10.0 ** (-level_db / 20.0)
    step = math.pi / pattern.grid.n_theta / 4.0

    def excess(psi):
        return abs(complex(cut(psi, phi_p))) - target

    edges = []
    for sign in (1.0, -1.0):
        n_steps = int(math.ceil((math.pi / 2 - sign * psi_p) / step))
        offsets = psi_p + sign * step * np.arange(1, n_steps + 1)
        offsets = offsets[np.abs(offsets) < math.pi / 2]
        vals = np.abs(cut(offsets, phi_p)) - target
        below = np.flatnonzero(vals < 0)
        if len(below) == 0:
            raise PatternError(f"level never crossed: pattern within {level_db} dB of peak")
        j = below[0]
        inner = psi_p if j == 0 else offsets[j - 1]
        edges.append(brentq(excess, inner, offsets[j], xtol=1e-12))
    return float(abs(edges[0] - edges[1]))


def beam_efficiency(pattern: RadiationPattern, theta_i: float, *,
                    unweighted: bool = False) -> float:
    """Fraction of radiated power in the cone ``theta <= theta_i`` about the normal.

    Rows are summed whole; the row straddling ``theta_i`` contributes the
    covered fraction of its width.  ``unweighted`` drops the sin(theta)
    solid-angle weight.
    """
    if not 0 < theta_i <= math.pi:
        raise ValueError("theta_i must lie in (0, pi]")
    p = np.abs(pattern.field) ** 2
    if not unweighted:
        p = p * np.sin(pattern.theta)[:, None]
    rows = p.sum(axis=1)
    cum = np.concatenate([[0.0], np.cumsum(rows)])
    total = cum[-1]
    if not total > 0:
        raise PatternError("zero total radiated power")
    n = pattern.grid.n_theta
    x = theta_i / (math.pi / n)
    k = min(int(math.floor(x)), n)
    covered = cum[k] if k == n else cum[k] + (x - k) * rows[k]
    return float(min(covered / total, 1.0))


def gain_db(directivity_lin: float, efficiency: float = 1.0) -> float:
    return 10.0 * math.log10(directivity_lin * efficiency)
