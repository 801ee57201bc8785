"""Receiver noise temperature from the CMB and bright bodies near the beam.

Each body occupies an azimuthal sector of the receive pattern: azimuth
``[center - width/2, center + width/2)`` and polar angles up to an
elevation extent (by default the sector width).  A grid cell belongs to a
sector when its centre does, so splitting a sector never changes the total.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .constants import K_B

CMB_TEMPERATURE = 2.761
TWO_PI = 2.0 * math.pi


class PlacementError(RuntimeError):
    pass


@dataclass(frozen=True)
class Region:
    center: float          # azimuth, rad in [0, 2 pi)
    width: float           # azimuthal width, rad
    brightness: float      # K
    extent: float | None = None   # polar extent, rad; None -> width

    def __post_init__(self):
        if not 0 < self.width <= TWO_PI:
            raise ValueError("region width must lie in (0, 2 pi]")
        if self.brightness < 0:
            raise ValueError("brightness must be >= 0")
        object.__setattr__(self, "center", self.center % TWO_PI)

    @property
    def polar_extent(self) -> float:
        return min(self.extent if self.extent is not None else self.width, math.pi)

    @property
    def start(self) -> float:
        return (self.center - 0.5 * self.width) % TWO_PI

    @property
    def boundary_direction(self) -> tuple[float, float]:
        """Unit vector of the sector's leading edge in the aperture plane."""
        return math.cos(self.start), math.sin(self.start)


def _arc_gap(a: Region, b: Region) -> float:
    d = abs(a.center - b.center) % TWO_PI
    return min(d, TWO_PI - d) - 0.5 * (a.width + b.width)


@dataclass(frozen=True)
class CelestialScene:
    regions: tuple[Region, ...] = ()
    cmb_temperature: float = CMB_TEMPERATURE

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        if self.cmb_temperature < 0:
            raise ValueError("cmb_temperature must be >= 0")
        if sum(r.width for r in self.regions) > TWO_PI * (1 + 1e-12):
            raise ValueError("regions cover more than 2 pi")
        for i, a in enumerate(self.regions):
            for b in self.regions[i + 1:]:
                if _arc_gap(a, b) < -1e-12:
                    raise ValueError("regions overlap")

    def __len__(self):
        return len(self.regions)


def place_bodies(n: int, theta_fov: float, t_range: tuple[float, float], rng, *,
                 width_range: tuple[float, float] = (math.radians(15), math.radians(30)),
                 log_uniform: bool = True, max_attempts: int = 1000,
                 cmb_temperature: float = CMB_TEMPERATURE) -> CelestialScene:
    """Scatter ``n`` disjoint bodies around the receive boresight.

    Widths are uniform on ``width_range`` and azimuth centres uniform on the
    circle.  Each body extends in polar angle to at least half the field of
    view ``theta_fov``.  A centre that overlaps an earlier body is redrawn;
    a body that finds no room in ``max_attempts`` draws restarts the scene,
    again at most ``max_attempts`` times.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not theta_fov > 0:
        raise ValueError("theta_fov must be positive")
    lo_t, hi_t = t_range
    if not 0 < lo_t <= hi_t:
        raise ValueError("brightness range must satisfy 0 < lo <= hi")
    if n == 0:
        return CelestialScene((), cmb_temperature)
    if n * width_range[0] > TWO_PI:
        raise PlacementError(f"{n} bodies of width >= {width_range[0]:.3g} rad cannot fit")

    for _ in range(max_attempts):
        widths = rng.uniform(width_range[0], width_range[1], n)
        if log_uniform:
            temps = np.exp(rng.uniform(math.log(lo_t), math.log(hi_t), n))
        else:
            temps = rng.uniform(lo_t, hi_t, n)
        placed: list[Region] = []
        for w, t in zip(widths, temps):
            extent = None if w >= 0.5 * theta_fov else 0.5 * theta_fov
            for _ in range(max_attempts):
                cand = Region(float(rng.uniform(0.0, TWO_PI)), float(w), float(t), extent)
                if all(_arc_gap(cand, r) >= 0 for r in placed):
                    placed.append(cand)
                    break
            else:
                break   # body does not fit: redraw the scene
        if len(placed) == n:
            return CelestialScene(tuple(placed), cmb_temperature)
    raise PlacementError(f"could not place {n} disjoint bodies in {max_attempts} attempts")


class BeamPowerTable:
    """2-D prefix sums of per-cell power for fast sector beam efficiencies."""

    def __init__(self, pattern, *, unweighted: bool = False):
        p = np.abs(pattern.field) ** 2
        if not unweighted:
            p = p * np.sin(pattern.theta)[:, None]
        self.theta = pattern.theta
        self.n_phi = pattern.grid.n_phi
        self.dphi = TWO_PI / self.n_phi
        S = np.zeros((p.shape[0] + 1, p.shape[1] + 1))
        S[1:, 1:] = p.cumsum(axis=0).cumsum(axis=1)
        self._S = S
        self.total = float(S[-1, -1])
        if not self.total > 0:
            raise ValueError("zero-gain pattern")

    def _block(self, rows: int, c0: int, c1: int) -> float:
        S = self._S
        return S[rows, c1] - S[rows, c0]

    def region_efficiency(self, region: Region) -> float:
        rows = int(np.searchsorted(self.theta, region.polar_extent, side="right"))
        if region.width >= TWO_PI:
            c0, c1 = 0, self.n_phi
            return float(self._block(rows, c0, c1) / self.total)
        # columns whose centre phi_j = j*dphi lies in [start, start + width)
        start = region.start
        c0 = int(math.ceil(start / self.dphi - 1e-9))
        c1 = int(math.ceil((start + region.width) / self.dphi - 1e-9))
        if c1 <= self.n_phi:
            val = self._block(rows, c0, c1)
        else:
            val = self._block(rows, c0, self.n_phi) + self._block(rows, 0, c1 - self.n_phi)
        return float(val / self.total)


def system_temperature(scene: CelestialScene, pattern, *, unweighted: bool = False,
                       table: BeamPowerTable | None = None) -> float:
    """CMB plus beam-efficiency-weighted body brightness."""
    if not scene.regions:
        return scene.cmb_temperature
    table = table or BeamPowerTable(pattern, unweighted=unweighted)
    return math.fsum(table.region_efficiency(r) * r.brightness for r in scene.regions) \
        + scene.cmb_temperature


def effective_temperature(brightness, pattern, floor_db: float | None = -60.0) -> float:
    """Gain-weighted sky temperature on the pattern's quadrature grid.

    ``brightness`` is a scalar, an array matching the grid, or a callable of
    ``(theta, phi)`` meshes.  Gain is floored ``floor_db`` below the peak.
    """
    g = np.abs(pattern.field) ** 2
    peak = g.max()
    if not peak > 0:
        raise ValueError("zero-gain pattern")
    if floor_db is not None:
        g = np.maximum(g, peak * 10.0 ** (floor_db / 10.0))
    w = g * np.sin(pattern.theta)[:, None]
    if callable(brightness):
        T, P = np.meshgrid(pattern.theta, pattern.phi, indexing="ij")
        tb = np.asarray(brightness(T, P), dtype=float)
    else:
        tb = np.asarray(brightness, dtype=float)
    tb = np.broadcast_to(tb, w.shape)
    return float(np.sum(tb * w) / np.sum(w))


def noise_spectral_density(t_sys: float) -> float:
    """Thermal noise power per hertz [W/Hz]."""
    return K_B * t_sys


# -- CSV -------------------------------------------------------------------

SCENE_HEADER = ("region_index", "center_deg", "width_deg", "brightness_K")


def scene_to_csv(scene: CelestialScene) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCENE_HEADER)
    for i, r in enumerate(scene.regions):
        w.writerow([i, f"{math.degrees(r.center):.9g}", f"{math.degrees(r.width):.9g}",
                    f"{r.brightness:.9g}"])
    return buf.getvalue()


def write_scene(scene: CelestialScene, path) -> None:
    Path(path).write_text(scene_to_csv(scene))


def read_scene(path, cmb_temperature: float = CMB_TEMPERATURE,
               theta_fov: float | None = None) -> CelestialScene:
    """Load a scene; ``theta_fov`` restores the polar extent rule of :func:`place_bodies`."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0].keys()) != SCENE_HEADER:
        raise ValueError(f"scene header must be {','.join(SCENE_HEADER)}")
    regions = []
    for r in rows:
        w = math.radians(float(r["width_deg"]))
        extent = None if theta_fov is None or w >= 0.5 * theta_fov else 0.5 * theta_fov
        regions.append(Region(math.radians(float(r["center_deg"])), w,
                              float(r["brightness_K"]), extent))
    return CelestialScene(tuple(regions), cmb_temperature)
