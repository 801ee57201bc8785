"""Command-line entry point.

Every scenario field is also a ``--kebab-case`` flag (nested fields take a
``link-`` or ``array-`` prefix); flags override values from ``--config``.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
import typing
from pathlib import Path

from . import __version__, antenna, harness, noise, plasma
from .config import (SCHEMA_VERSION, SWEEP_AXES, ArrayConfig, ConfigError, ScenarioConfig,
                     config_from_dict, config_to_dict, load_config)
from .constants import C
from .geometry import LinkGeometry, sample_link_distance
from .output import (channel_to_csv, cut_to_csv, emit_csv, emit_plot, pattern_to_csv,
                     sweep_to_csv)
from .presets import available as available_presets, describe, run_preset

log = logging.getLogger("deepspace_sim")

_SKIP = {"sweep"}


def _flag_specs():
    """(flag, dest, group, field name, python type) for every config field."""
    specs = []
    groups = ((ScenarioConfig, ""), (LinkGeometry, "link"), (ArrayConfig, "array"))
    for cls, group in groups:
        hints = typing.get_type_hints(cls)
        for f in dataclasses.fields(cls):
            if not f.init or f.name in _SKIP or f.name in ("link", "array"):
                continue
            name = f"{group}-{f.name}" if group else f.name
            specs.append((f"--{name.replace('_', '-')}", name.replace("-", "_"), group,
                          f.name, hints[f.name]))
    return specs


_FLAGS = _flag_specs()


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _value_parser(hint):
    args = set(typing.get_args(hint)) - {type(None)}
    base = next(iter(args)) if args else hint
    if base is bool:
        return _parse_bool, "BOOL"
    if base is int:
        return int, "INT"
    if base is str:
        return str, "STR"
    if typing.get_origin(base) is tuple:
        return (lambda s: [float(x) for x in s.split(",")]), "LO,HI"
    return float, "FLOAT"


def _nullable(parser, hint):
    if type(None) not in typing.get_args(hint):
        return parser

    def parse(text):
        return None if text.lower() in ("none", "null") else parser(text)
    return parse


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="scenario JSON file")
    p.add_argument("--out", type=Path, help="output directory (created if absent)")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--threads", type=int, help=f"worker cap (default ${harness.ENV_THREADS} "
                                               "or CPU count)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    g = p.add_argument_group("scenario fields")
    for flag, dest, _group, _name, hint in _FLAGS:
        parse, metavar = _value_parser(hint)
        g.add_argument(flag, dest=dest, type=_nullable(parse, hint), metavar=metavar,
                       default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deepspace-sim",
        description="Earth-Moon inter-satellite link simulator with reflectarray antennas.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("pattern", help="far-field pattern CSV and beam summary")
    p.add_argument("--steer", type=float, default=0.0, metavar="RAD",
                   help="steering angle in the phi=0 plane")
    p.add_argument("--pattern-step", type=int, default=4, metavar="N",
                   help="write every N-th grid sample in each angle")
    _add_common(p)

    p = sub.add_parser("channel", help="arrival-angle fluctuation statistics")
    _add_common(p)

    p = sub.add_parser("noise", help="system noise temperature for a random or given scene")
    p.add_argument("--scene", type=Path, help="scene CSV to evaluate instead of drawing one")
    _add_common(p)

    p = sub.add_parser("sweep", help="run a Monte Carlo sweep")
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--values", help="comma-separated axis values")
    p.add_argument("--label", default="")
    _add_common(p)

    p = sub.add_parser("preset", help="run a bundled scenario")
    p.add_argument("name", choices=available_presets())
    _add_common(p)
    return parser


def resolve_config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    overrides = flag_overrides(args)
    if not overrides:
        return cfg
    data = config_to_dict(cfg)
    _merge(data, overrides)
    return config_from_dict(data)


def flag_overrides(args) -> dict:
    """Scenario fields given on the command line, as a nested config dict."""
    out: dict = {}
    for _flag, dest, group, name, _hint in _FLAGS:
        value = getattr(args, dest, None)
        if value is None:
            continue
        if group:
            out.setdefault(group, {})[name] = value
        else:
            out[name] = value
    if getattr(args, "seed", None) is not None:
        out["rng_seed"] = args.seed
    return out


def _merge(data: dict, overrides: dict) -> None:
    for k, v in overrides.items():
        if isinstance(v, dict):
            data.setdefault(k, {}).update(v)
        else:
            data[k] = v


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


# -- subcommands ---------------------------------------------------------------

def cmd_pattern(args, cfg: ScenarioConfig) -> None:
    geom = antenna.build_aperture(cfg)
    k0 = 2.0 * math.pi / antenna.design_wavelength(cfg)
    k = 2.0 * math.pi * cfg.carrier_frequency_hz / C
    prof = antenna.steering_phase_profile(geom, args.steer, 0.0, k0,
                                          phase_bits=cfg.array.phase_bits)
    grid = antenna.GridSpec(cfg.array.n_theta, cfg.array.n_phi)
    pat = antenna.radiation_pattern(geom, prof, grid, k)
    psi_peak, phi_peak = antenna.peak_on_cut(pat)
    d_peak = antenna.directivity(pat, abs(psi_peak), phi_peak if psi_peak >= 0
                                 else phi_peak + math.pi)
    bw3 = antenna.beamwidth(pat, 3.0)
    bw30 = antenna.beamwidth(pat, 30.0)
    be = antenna.beam_efficiency(pat, bw3 / 2)
    summary = {
        "cells": geom.total_cells,
        "semi_axis_m": round(geom.semi_axes[0], 6),
        "peak_theta_rad": round(abs(psi_peak), 9),
        "peak_directivity_dbi": round(10 * math.log10(d_peak), 4),
        "peak_gain_dbi": round(10 * math.log10(d_peak * cfg.efficiency_rx), 4),
        "theta_3db_rad": round(bw3, 9),
        "theta_30db_rad": round(bw30, 9),
        "beam_efficiency_half_3db": round(be, 6),
    }
    for key, val in summary.items():
        print(f"{key} = {val}")
    out = _out_dir(args)
    if out is not None:
        (out / "pattern.csv").write_text(pattern_to_csv(pat, args.pattern_step))
        (out / "pattern_cut.csv").write_text(cut_to_csv(pat, phi_peak))
        (out / "pattern_summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def cmd_channel(args, cfg: ScenarioConfig) -> None:
    gain = harness.aoa_gain(cfg)
    lam = C / cfg.carrier_frequency_hz
    rows, values = [], []
    for i in range(cfg.n_samples):
        d = sample_link_distance(cfg.link, float(harness.stream(cfg.rng_seed, 0, i,
                                                                 "distance").uniform()))
        alpha = cfg.density_index
        if cfg.density_index_range is not None:
            alpha = float(harness.stream(cfg.rng_seed, 0, i, "alpha").uniform(
                *cfg.density_index_range))
        dt = harness.draw_delta_theta(cfg, alpha, d, harness.stream(cfg.rng_seed, 0, i,
                                                                    "plasma"), gain)
        state = plasma.PlasmaState(alpha, cfg.plasma_order, cfg.resonance_rad_s,
                                   cfg.sun_offset_rs, d)
        phi = plasma.phase_shift(state, lam, steps=cfg.path_steps,
                                 per_panel=cfg.per_panel_geometry)
        rows.append((i, d, phi, dt))
        values.append(dt)
    mean_abs = math.fsum(abs(v) for v in values) / len(values)
    rms = math.sqrt(math.fsum(v * v for v in values) / len(values))
    print(f"alpha = {cfg.density_index:g}, beta = {cfg.plasma_order:g}, "
          f"f_c = {cfg.carrier_frequency_hz:g} Hz, T = {cfg.n_samples}")
    print(f"mean |delta_theta| = {mean_abs:.9e} rad")
    print(f"rms delta_theta = {rms:.9e} rad")
    out = _out_dir(args)
    if out is not None:
        (out / "channel.csv").write_text(channel_to_csv(rows))


def cmd_noise(args, cfg: ScenarioConfig) -> None:
    scene = noise.CelestialScene((), cfg.cmb_temperature_k)
    model = None
    if args.scene is not None or cfg.n_bodies > 0:
        ratio = cfg.carrier_frequency_hz / (cfg.array.design_frequency_hz
                                            or cfg.carrier_frequency_hz)
        model = harness.array_model(cfg.array, ratio)
    if args.scene is not None:
        scene = noise.read_scene(args.scene, cfg.cmb_temperature_k, model.theta_30db)
    elif cfg.n_bodies > 0:
        scene = noise.place_bodies(
            cfg.n_bodies, model.theta_30db, (cfg.brightness_min_k, cfg.brightness_max_k),
            harness.stream(cfg.rng_seed, 0, 0, "scene"),
            width_range=(cfg.body_width_min_rad, cfg.body_width_max_rad),
            cmb_temperature=cfg.cmb_temperature_k)
    if scene.regions:
        unweighted = cfg.beam_efficiency_mode == "unweighted"
        t_sys = noise.system_temperature(
            scene, model.pattern,
            table=model.power_table_unweighted if unweighted else model.power_table)
    else:
        t_sys = noise.system_temperature(scene, None)
    print(f"T_sys = {t_sys:.9g} K")
    print(f"N_sys = {noise.noise_spectral_density(t_sys):.9e} W/Hz")
    out = _out_dir(args)
    if out is not None:
        noise.write_scene(scene, out / "scene.csv")


def cmd_sweep(args, cfg: ScenarioConfig) -> None:
    axis = args.axis or cfg.sweep.axis
    if args.values is not None:
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--values must be comma-separated numbers, got {args.values!r}")
    else:
        values = list(cfg.sweep.values)
    if axis is None:
        raise ConfigError("no sweep axis: pass --axis or set sweep.axis in the config")
    if not values:
        raise ConfigError("no sweep values: pass --values or set sweep.values in the config")
    res = harness.run_sweep(cfg, axis, values, threads=args.threads,
                            label=args.label or f"{axis} sweep")
    sys.stdout.write(sweep_to_csv(res))
    out = _out_dir(args)
    if out is not None:
        emit_csv(res, out / "sweep.csv")
        emit_plot(res, out / "sweep.svg", f"Spectral efficiency versus {axis}")


def cmd_preset(args, cfg: ScenarioConfig) -> None:
    overrides = flag_overrides(args)
    if args.config:
        base = config_to_dict(cfg)
        base.pop("schema_version")
        base.pop("sweep")
        _merge(base, overrides)
        overrides = base
    print(describe(args.name))
    panels = run_preset(args.name, _out_dir(args), overrides=overrides, threads=args.threads)
    for panel in panels:
        for res in panel.results:
            means = " ".join(f"{m:.3f}" if panel.metric == "se" else f"{m:.3e}"
                             for m in res.mean)
            print(f"{args.name}{panel.name} [{res.label}]: {means}")


_COMMANDS = {"pattern": cmd_pattern, "channel": cmd_channel, "noise": cmd_noise,
             "sweep": cmd_sweep, "preset": cmd_preset}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = resolve_config(args)
        _COMMANDS[args.command](args, cfg)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
