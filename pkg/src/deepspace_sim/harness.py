"""Monte Carlo sweeps of link spectral efficiency.

Every random draw comes from its own Philox stream keyed by
``(seed, point, sample, purpose)``, so results do not depend on thread
count or scheduling.  With ``common_random_numbers`` the point key is fixed
at zero and all sweep points reuse the same underlying variates.
"""
from __future__ import annotations

import dataclasses
import functools
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import antenna, link, noise, plasma
from .config import ArrayConfig, ConfigError, ScenarioConfig
from .constants import C
from .geometry import sample_link_distance

Z99 = float(norm.ppf(0.995))

_PURPOSE = {"distance": 0, "plasma": 1, "scene": 2, "alpha": 3}

REFERENCE_STATE = {"alpha": 1.0, "beta": 3e6, "frequency_hz": 10e9}

METRICS = ("se", "abs_delta_theta")

ENV_THREADS = "DEEPSPACE_SIM_THREADS"


def stream(seed: int, point: int, sample: int, purpose: str) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(point, sample, _PURPOSE[purpose]))
    return np.random.Generator(np.random.Philox(ss))


# -- antenna model cache -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class ArrayModel:
    """Broadside reflectarray built with unit design wavelength.

    Angular quantities are independent of the absolute scale; ``scale``
    converts lengths to metres for a given design wavelength.
    """

    geometry: antenna.ReflectarrayGeometry
    pattern: antenna.RadiationPattern
    k: float
    peak_directivity: float
    theta_30db: float
    power_table: noise.BeamPowerTable
    power_table_unweighted: noise.BeamPowerTable

    def directivity_on_cut(self, psi: float) -> float:
        if abs(psi) > math.pi / 2:
            return 0.0
        e = complex(self.pattern.evaluator.cut(psi, 0.0))
        return 4.0 * math.pi * abs(e) ** 2 / self.pattern.total_power


@functools.lru_cache(maxsize=16)
def unit_geometry(array: ArrayConfig) -> antenna.ReflectarrayGeometry:
    """Aperture laid out for a design wavelength of one metre."""
    return antenna.elliptical_aperture(
        array.n_cells, array.spacing_wavelengths, aspect_ratio=array.aspect_ratio,
        f_over_d=array.f_over_d, feed_offset=array.feed_offset_rad,
        feed_exponent=array.feed_exponent, element_exponent=array.element_exponent)


@functools.lru_cache(maxsize=16)
def array_model(array: ArrayConfig, frequency_ratio: float = 1.0) -> ArrayModel:
    """Pattern, peak directivity and noise tables for ``array`` at ``f / f_design``."""
    geom = unit_geometry(array)
    k0 = 2.0 * math.pi
    profile = antenna.steering_phase_profile(geom, 0.0, 0.0, k0, phase_bits=array.phase_bits)
    k = k0 * frequency_ratio
    pattern = antenna.radiation_pattern(geom, profile, antenna.GridSpec(array.n_theta,
                                                                        array.n_phi), k)
    return ArrayModel(geom, pattern, k, antenna.directivity(pattern, 0.0, 0.0),
                      antenna.beamwidth(pattern, 30.0),
                      noise.BeamPowerTable(pattern),
                      noise.BeamPowerTable(pattern, unweighted=True))


@functools.lru_cache(maxsize=64)
def _physical_gain_table(array: ArrayConfig, frequency_ratio: float, theta_s: float):
    m = array_model(array, frequency_ratio)
    prof = antenna.steering_phase_profile(m.geometry, theta_s, 0.0, 2.0 * math.pi,
                                          phase_bits=array.phase_bits)
    ev = antenna.FieldEvaluator(m.geometry, antenna.cell_weights(m.geometry, prof, m.k), m.k)
    return ev, antenna.radiated_power_exact(m.geometry, prof, m.k)


def physical_directivity(array: ArrayConfig, frequency_ratio: float, theta_s: float,
                         theta: float) -> float:
    """Directivity at ``theta`` on the phi=0 cut of the array re-phased toward ``theta_s``."""
    if abs(theta) > math.pi / 2:
        return 0.0
    ev, power = _physical_gain_table(array, frequency_ratio, float(theta_s))
    return 4.0 * math.pi * abs(complex(ev.cut(theta, 0.0))) ** 2 / power


def _design_frequency(cfg: ScenarioConfig) -> float:
    return cfg.array.design_frequency_hz or cfg.carrier_frequency_hz


def aperture_diameter(cfg: ScenarioConfig, design_frequency: float | None = None) -> float:
    f = design_frequency or _design_frequency(cfg)
    return unit_geometry(cfg.array).diameter * (C / f)


# -- plasma draw -------------------------------------------------------------

def _plasma_state(cfg: ScenarioConfig, alpha: float, beta: float, distance: float):
    return plasma.PlasmaState(alpha, beta, cfg.resonance_rad_s, cfg.sun_offset_rs, distance)


def _model_rms(cfg: ScenarioConfig, state, wavelength: float, diameter: float) -> float:
    if cfg.aoa_model == "panel":
        return plasma.panel_aoa_rms(state, wavelength, diameter, cfg.path_steps,
                                    per_panel=cfg.per_panel_geometry)
    geom = unit_geometry(cfg.array)
    scale = diameter / geom.diameter
    scaled = dataclasses.replace(geom, semi_axes=tuple(x * scale for x in geom.semi_axes))
    return plasma.spectral_aoa_rms(state, scaled, wavelength,
                                   outer_scale=cfg.turbulence_outer_scale_m,
                                   inner_scale=cfg.turbulence_inner_scale_m)


def aoa_gain(cfg: ScenarioConfig) -> float:
    """Multiplier applied to the physical tilt.

    With ``aoa_rms_ref_rad`` set, the tilt rms at the reference plasma
    (alpha 1, beta 3e6, 10 GHz, shortest link) is pinned to that value and
    every other state scales from it by the physical model.
    """
    if cfg.aoa_rms_ref_rad is None:
        return 1.0
    lam = C / REFERENCE_STATE["frequency_hz"]
    diameter = aperture_diameter(cfg, cfg.array.design_frequency_hz
                                 or REFERENCE_STATE["frequency_hz"])
    state = _plasma_state(cfg, REFERENCE_STATE["alpha"], REFERENCE_STATE["beta"],
                          cfg.link.min_distance)
    return cfg.aoa_rms_ref_rad / _model_rms(cfg, state, lam, diameter)


def draw_delta_theta(cfg: ScenarioConfig, alpha: float, distance: float, rng,
                     gain: float) -> float:
    lam = C / cfg.carrier_frequency_hz
    diameter = aperture_diameter(cfg)
    state = _plasma_state(cfg, alpha, cfg.plasma_order, distance)
    if not state.valid:
        raise plasma.PlasmaModelError(
            f"alpha*beta = {alpha * cfg.plasma_order:.3g} too large for r/r_s = "
            f"{cfg.sun_offset_rs:g}")
    if cfg.aoa_model == "panel":
        raw = plasma.sample_panel_aoa(state, lam, diameter, rng, cfg.path_steps,
                                      per_panel=cfg.per_panel_geometry)
    else:
        raw = _model_rms(cfg, state, lam, diameter) * rng.standard_normal()
    return gain * raw


# -- steering ----------------------------------------------------------------

def clamp_steering(delta_theta: float, limit: float) -> float:
    """Nearest angle to ``delta_theta`` in (-limit, limit]."""
    if delta_theta > limit:
        return limit
    if delta_theta <= -limit:
        return math.nextafter(-limit, 0.0)
    return delta_theta


def applied_steering(policy: str, delta_theta: float, limit: float) -> float:
    if policy == "none":
        return 0.0
    if policy == "unbounded":
        return delta_theta
    if policy in ("clamped", "physical"):
        return clamp_steering(delta_theta, limit)
    raise ValueError(f"unknown steering policy {policy!r}")


def receive_gain(cfg: ScenarioConfig, model: ArrayModel, ratio: float,
                 delta_theta: float, theta_s: float) -> float:
    if cfg.steering == "physical":
        d = physical_directivity(cfg.array, ratio, theta_s,
                                 float(antenna.wrap_phase(delta_theta)))
    else:
        d = model.directivity_on_cut(float(antenna.wrap_phase(delta_theta - theta_s)))
    return cfg.efficiency_rx * d


# -- points and sweeps -------------------------------------------------------

@dataclass(frozen=True)
class PointResult:
    mean: float
    std: float
    ci99_half: float
    n_samples: int
    seed: int
    samples: tuple | None = None    # per-sample LinkSample when traced


def summarize(values, seed: int = 0, samples=None) -> PointResult:
    v = np.asarray(values, dtype=float)
    n = len(v)
    mean = float(math.fsum(v) / n)
    std = float(np.std(v, ddof=1)) if n > 1 else 0.0
    if np.all(v == v[0]):
        std = 0.0
    return PointResult(mean, std, Z99 * std / math.sqrt(n), n, seed, samples)


def run_point(cfg: ScenarioConfig, point_key: int = 0, *, metric: str = "se") -> PointResult:
    """Average ``cfg.n_samples`` independent link realisations."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    key = 0 if cfg.common_random_numbers else point_key
    seed = cfg.rng_seed
    lam = C / cfg.carrier_frequency_hz
    ratio = cfg.carrier_frequency_hz / _design_frequency(cfg)
    gain = aoa_gain(cfg)
    model = array_model(cfg.array, ratio) if metric == "se" else None
    if model is not None:
        g_tx = cfg.efficiency_tx * model.peak_directivity
        table = (model.power_table_unweighted if cfg.beam_efficiency_mode == "unweighted"
                 else model.power_table)

    values, trace = [], []
    scene = None
    for i in range(cfg.n_samples):
        u = stream(seed, key, i, "distance").uniform()
        d = sample_link_distance(cfg.link, float(u))
        alpha = cfg.density_index
        if cfg.density_index_range is not None:
            lo, hi = cfg.density_index_range
            alpha = float(stream(seed, key, i, "alpha").uniform(lo, hi))
        dtheta = draw_delta_theta(cfg, alpha, d, stream(seed, key, i, "plasma"), gain)
        if metric == "abs_delta_theta":
            values.append(abs(dtheta))
            continue

        if cfg.n_bodies == 0:
            t_sys = cfg.cmb_temperature_k
        else:
            if scene is None or cfg.scene_mode == "per_sample":
                scene = noise.place_bodies(
                    cfg.n_bodies, model.theta_30db,
                    (cfg.brightness_min_k, cfg.brightness_max_k),
                    stream(seed, key, i if cfg.scene_mode == "per_sample" else 0, "scene"),
                    width_range=(cfg.body_width_min_rad, cfg.body_width_max_rad),
                    cmb_temperature=cfg.cmb_temperature_k)
            t_sys = noise.system_temperature(scene, model.pattern, table=table)

        theta_s = applied_steering(cfg.steering, dtheta, cfg.steering_limit_rad)
        g_rx = receive_gain(cfg, model, ratio, dtheta, theta_s)
        h = link.channel_coefficient(lam, d)
        se = link.spectral_efficiency(cfg.tx_power_w, g_tx, g_rx, h, t_sys,
                                      cfg.kappa1, cfg.kappa2, model=cfg.distortion_model)
        values.append(se)
        if cfg.keep_trace:
            trace.append(link.LinkSample(d, abs(h) ** 2, h, dtheta, theta_s, g_tx, g_rx,
                                         t_sys, se))
    return summarize(values, seed, tuple(trace) if cfg.keep_trace else None)


_AXIS_FIELDS = {
    "alpha": ("density_index",),
    "beta": ("plasma_order",),
    "kappa": ("kappa1", "kappa2"),
    "n_bodies": ("n_bodies",),
    "steering_limit": ("steering_limit_rad",),
    "tx_power": ("tx_power_w",),
    "carrier_frequency": ("carrier_frequency_hz",),
}


def apply_axis(cfg: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis not in _AXIS_FIELDS:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    changes = {f: (int(value) if f == "n_bodies" else float(value)) for f in _AXIS_FIELDS[axis]}
    if axis == "n_bodies" and value != int(value):
        raise ConfigError(f"n_bodies sweep value {value!r} is not an integer")
    if axis == "alpha":
        changes["density_index_range"] = None
    return cfg.replace(**changes)


@dataclass(frozen=True)
class SweepResult:
    axis: str
    values: tuple
    points: tuple       # PointResult per value, input order
    seed: int
    metric: str = "se"
    label: str = ""

    @property
    def mean(self) -> np.ndarray:
        return np.array([p.mean for p in self.points])

    @property
    def std(self) -> np.ndarray:
        return np.array([p.std for p in self.points])

    @property
    def ci99_half(self) -> np.ndarray:
        return np.array([p.ci99_half for p in self.points])

    @property
    def n_samples(self) -> int:
        return self.points[0].n_samples if self.points else 0


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"{ENV_THREADS}={env!r} is not an integer") from None
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError("thread count must be >= 1")
    return threads


_warm_lock = threading.Lock()


def run_sweep(cfg: ScenarioConfig, axis: str | None = None, values=None, *,
              metric: str = "se", threads: int | None = None, label: str = "") -> SweepResult:
    """Evaluate one point per axis value; results keep the input order."""
    axis = axis or cfg.sweep.axis
    values = tuple(cfg.sweep.values if values is None else values)
    if axis is None:
        raise ConfigError("no sweep axis given")
    if not values:
        raise ConfigError("sweep values must be non-empty")
    cfgs = [apply_axis(cfg, axis, v) for v in values]
    n = min(resolve_threads(threads), len(cfgs))
    if metric == "se":
        # build shared patterns once, before workers race for the cache
        with _warm_lock:
            for c in cfgs:
                array_model(c.array, c.carrier_frequency_hz / _design_frequency(c))
    if n == 1:
        points = [run_point(c, i, metric=metric) for i, c in enumerate(cfgs)]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            points = list(pool.map(lambda ic: run_point(ic[1], ic[0], metric=metric),
                                   enumerate(cfgs)))
    return SweepResult(axis, values, tuple(points), cfg.rng_seed, metric, label)
