"""Scenario configuration: schema, defaults, validation and JSON round-trip.

A configuration file is a JSON object.  ``schema_version`` is mandatory; every
other key is optional and falls back to the defaults below.  Angles are in
radians, everything else SI.  Nested objects ``link``, ``array`` and
``sweep`` map onto :class:`LinkGeometry`, :class:`ArrayConfig` and
:class:`SweepSpec`.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .geometry import LinkGeometry

SCHEMA_VERSION = 1

SWEEP_AXES = ("alpha", "beta", "kappa", "n_bodies", "steering_limit",
              "tx_power", "carrier_frequency")
STEERING_POLICIES = ("none", "clamped", "unbounded", "physical")


class ConfigError(ValueError):
    """Invalid configuration file or value."""


@dataclass(frozen=True)
class ArrayConfig:
    """Descriptor from which :func:`antenna.build_aperture` lays out the cells."""

    n_cells: int = 10400
    spacing_wavelengths: float = 0.5
    design_frequency_hz: float | None = None   # None: use the carrier
    aspect_ratio: float = 1.0                  # b / a of the ellipse
    f_over_d: float = 0.8
    feed_offset_rad: float = math.radians(25.0)
    feed_exponent: float = 9.0
    element_exponent: float = 1.0
    phase_bits: int | None = None              # None: continuous phase
    n_theta: int = 720
    n_phi: int = 1440


@dataclass(frozen=True)
class SweepSpec:
    axis: str | None = None
    values: tuple[float, ...] = ()


@dataclass(frozen=True)
class ScenarioConfig:
    carrier_frequency_hz: float = 10e9
    tx_power_w: float = 500.0
    kappa1: float = 0.0
    kappa2: float = 0.0
    efficiency_tx: float = 0.782
    efficiency_rx: float = 0.782
    steering_limit_rad: float = math.pi / 36
    steering: str = "none"
    plasma_order: float = 3e6              # beta
    density_index: float = 1.0             # alpha
    density_index_range: tuple[float, float] | None = None
    resonance_rad_s: float = 1.0           # omega_0
    sun_offset_rs: float = 215.0           # r / r_s, ~1 AU
    path_steps: int = 1000
    per_panel_geometry: bool = False
    aoa_model: str = "panel"
    aoa_rms_ref_rad: float | None = 0.2
    turbulence_outer_scale_m: float = 1e9
    turbulence_inner_scale_m: float = 1e5
    n_bodies: int = 0
    body_width_min_rad: float = math.radians(15.0)
    body_width_max_rad: float = math.radians(30.0)
    brightness_min_k: float = 3.0
    brightness_max_k: float = 300.0
    cmb_temperature_k: float = 2.761
    scene_mode: str = "per_sample"
    distortion_model: str = "unscaled"
    beam_efficiency_mode: str = "solid_angle"
    n_samples: int = 100
    rng_seed: int = 1
    common_random_numbers: bool = True
    keep_trace: bool = False
    link: LinkGeometry = field(default_factory=LinkGeometry)
    array: ArrayConfig = field(default_factory=ArrayConfig)
    sweep: SweepSpec = field(default_factory=SweepSpec)

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit_interval(v):
    return 0 < v <= 1


# field -> (predicate, human-readable bound)
_RULES: dict[str, tuple[Any, str]] = {
    "carrier_frequency_hz": (_positive, "> 0"),
    "tx_power_w": (_nonneg, ">= 0"),
    "kappa1": (_nonneg, ">= 0"),
    "kappa2": (_nonneg, ">= 0"),
    "efficiency_tx": (_unit_interval, "in (0, 1]"),
    "efficiency_rx": (_unit_interval, "in (0, 1]"),
    "steering_limit_rad": (lambda v: 0 < v <= math.pi, "in (0, pi]"),
    "steering": (lambda v: v in STEERING_POLICIES, f"one of {STEERING_POLICIES}"),
    "plasma_order": (_positive, "> 0"),
    "density_index": (_positive, "> 0"),
    "density_index_range": (lambda v: v is None or (len(v) == 2 and 0 < v[0] <= v[1]),
                            "null or [lo, hi] with 0 < lo <= hi"),
    "resonance_rad_s": (_nonneg, ">= 0"),
    "sun_offset_rs": (lambda v: v >= 1, ">= 1"),
    "path_steps": (lambda v: v >= 1, ">= 1"),
    "aoa_model": (lambda v: v in ("panel", "spectral"), "'panel' or 'spectral'"),
    "aoa_rms_ref_rad": (lambda v: v is None or v > 0, "null or > 0"),
    "turbulence_outer_scale_m": (_positive, "> 0"),
    "turbulence_inner_scale_m": (_positive, "> 0"),
    "n_bodies": (_nonneg, ">= 0"),
    "body_width_min_rad": (_positive, "> 0"),
    "body_width_max_rad": (lambda v: 0 < v <= 2 * math.pi, "in (0, 2 pi]"),
    "brightness_min_k": (_positive, "> 0"),
    "brightness_max_k": (_positive, "> 0"),
    "cmb_temperature_k": (_nonneg, ">= 0"),
    "scene_mode": (lambda v: v in ("per_sample", "fixed"), "'per_sample' or 'fixed'"),
    "distortion_model": (lambda v: v in ("unscaled", "scaled"), "'unscaled' or 'scaled'"),
    "beam_efficiency_mode": (lambda v: v in ("solid_angle", "unweighted"),
                             "'solid_angle' or 'unweighted'"),
    "n_samples": (lambda v: v >= 1, ">= 1"),
    "rng_seed": (lambda v: 0 <= v < 2**64, "in [0, 2**64)"),
}

_ARRAY_RULES: dict[str, tuple[Any, str]] = {
    "n_cells": (lambda v: v >= 1, ">= 1"),
    "spacing_wavelengths": (_positive, "> 0"),
    "design_frequency_hz": (lambda v: v is None or v > 0, "null or > 0"),
    "aspect_ratio": (_positive, "> 0"),
    "f_over_d": (_positive, "> 0"),
    "feed_offset_rad": (lambda v: 0 <= v < math.pi / 2, "in [0, pi/2)"),
    "feed_exponent": (_nonneg, ">= 0"),
    "element_exponent": (_nonneg, ">= 0"),
    "phase_bits": (lambda v: v is None or 1 <= v <= 16, "null or 1..16"),
    "n_theta": (lambda v: v >= 2 and v % 2 == 0, "even and >= 2"),
    "n_phi": (lambda v: v >= 4 and v % 2 == 0, "even and >= 4"),
}


def _check(obj, rules, prefix=""):
    for name, (ok, bound) in rules.items():
        value = getattr(obj, name)
        try:
            good = ok(value)
        except TypeError:
            good = False
        if not good:
            raise ConfigError(f"{prefix}{name} = {value!r} violates bound {bound}")


def validate(cfg: ScenarioConfig) -> None:
    _check(cfg, _RULES)
    _check(cfg.array, _ARRAY_RULES, "array.")
    if cfg.body_width_min_rad > cfg.body_width_max_rad:
        raise ConfigError("body_width_min_rad must not exceed body_width_max_rad")
    if cfg.turbulence_inner_scale_m >= cfg.turbulence_outer_scale_m:
        raise ConfigError("turbulence_inner_scale_m must be below turbulence_outer_scale_m")
    if cfg.brightness_min_k > cfg.brightness_max_k:
        raise ConfigError("brightness_min_k must not exceed brightness_max_k")
    sweep = cfg.sweep
    if sweep.axis is not None:
        if sweep.axis not in SWEEP_AXES:
            raise ConfigError(f"sweep.axis = {sweep.axis!r} violates bound one of {SWEEP_AXES}")
        if not sweep.values:
            raise ConfigError("sweep.values must be non-empty when sweep.axis is set")


# -- (de)serialisation -------------------------------------------------------

_INT_FIELDS = {"path_steps", "n_bodies", "n_samples", "rng_seed"}
_BOOL_FIELDS = {"per_panel_geometry", "common_random_numbers", "keep_trace"}
_STR_FIELDS = {"steering", "aoa_model", "scene_mode", "distortion_model",
               "beam_efficiency_mode"}


def _coerce(name: str, value: Any, int_fields=_INT_FIELDS, bool_fields=_BOOL_FIELDS,
            str_fields=_STR_FIELDS) -> Any:
    if value is None:
        return None
    if name in bool_fields:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be a boolean, got {value!r}")
        return value
    if name in str_fields:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string, got {value!r}")
        return value
    if name in int_fields:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(value)
    if name == "density_index_range":
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a two-element list, got {value!r}")
        return tuple(float(v) for v in value)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _build(cls, data: dict, prefix: str, coerce) -> Any:
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown field {prefix}{unknown[0]}")
    return {k: coerce(k, v) for k, v in data.items()}


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    data = dict(data)
    if "schema_version" not in data:
        raise ConfigError("missing mandatory field schema_version")
    version = data.pop("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version = {version!r} unsupported (expected {SCHEMA_VERSION})")

    link = data.pop("link", {}) or {}
    array = data.pop("array", {}) or {}
    sweep = data.pop("sweep", {}) or {}
    kwargs = _build(ScenarioConfig, data, "", _coerce)
    for k in ("link", "array", "sweep"):
        kwargs.pop(k, None)

    try:
        link_obj = LinkGeometry(**_build(LinkGeometry, link, "link.", _coerce))
    except ValueError as exc:
        raise ConfigError(f"link.{exc}") from None
    array_obj = ArrayConfig(**_build(
        ArrayConfig, array, "array.",
        lambda k, v: _coerce(k, v, int_fields={"n_cells", "phase_bits", "n_theta", "n_phi"})))
    unknown = sorted(set(sweep) - {"axis", "values"})
    if unknown:
        raise ConfigError(f"unknown field sweep.{unknown[0]}")
    values = sweep.get("values", [])
    if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ConfigError("sweep.values must be a list of numbers")
    sweep_obj = SweepSpec(axis=sweep.get("axis"), values=tuple(float(v) for v in values))
    return ScenarioConfig(link=link_obj, array=array_obj, sweep=sweep_obj, **kwargs)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in ("link", "array"):
            out[f.name] = dataclasses.asdict(value)
        elif f.name == "sweep":
            out["sweep"] = {"axis": value.axis, "values": list(value.values)}
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


def dumps_config(cfg: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def loads_config(text: str, source: str = "<string>") -> ScenarioConfig:
    if not text.strip():
        return config_from_dict({"schema_version": SCHEMA_VERSION})
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(data)


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file.

    An empty file yields the default scenario.  Parse errors carry
    ``path:line:column``; range violations name the field and its bound.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return loads_config(text, str(path))
