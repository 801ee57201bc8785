"""Bundled sweep scenarios.

A preset is a JSON document: shared ``base`` settings, then one or more
panels (one sweep axis each) holding several labelled series.  Each series
is a full scenario file once the layers are merged, so presets go through
the same validation as user configs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..config import SCHEMA_VERSION, ConfigError, ScenarioConfig, config_from_dict
from ..harness import SweepResult, run_sweep
from ..output import emit_csv, emit_plot


def available() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files(__name__).iterdir()
                  if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    if name not in available():
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(available())}")
    data = json.loads(resources.files(__name__).joinpath(f"{name}.json").read_text())
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"preset {name}: unsupported schema_version")
    return data


@dataclass(frozen=True)
class Panel:
    name: str
    title: str
    metric: str
    results: tuple[SweepResult, ...]
    files: tuple[Path, ...] = ()


def series_config(preset: dict, panel: dict, series: dict,
                  overrides: dict | None = None) -> ScenarioConfig:
    data = {"schema_version": SCHEMA_VERSION}
    for layer in (preset.get("base", {}), panel.get("base", {}), series.get("set", {}),
                  overrides or {}):
        data.update(layer)
    return config_from_dict(data)


def run_preset(name: str, out_dir=None, *, overrides: dict | None = None,
               threads: int | None = None) -> list[Panel]:
    """Run every series of preset ``name``; write CSV and SVG when ``out_dir`` is set.

    ``overrides`` are scenario fields applied on top of each series.
    """
    preset = load_preset(name)
    metric = preset.get("metric", "se")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    panels = []
    for panel in preset["panels"]:
        results, files = [], []
        stem = f"{name}{panel['name']}"
        for series in panel["series"]:
            cfg = series_config(preset, panel, series, overrides)
            res = run_sweep(cfg, panel["axis"], panel["values"], metric=metric,
                            threads=threads, label=series["label"])
            results.append(res)
            if out is not None:
                files.append(emit_csv(res, out / f"{stem}_{series['id']}.csv"))
        if out is not None:
            title = f"{preset.get('title', name)}: {panel.get('title', '')}".rstrip(": ")
            files.append(emit_plot(results, out / f"{stem}.svg", title))
        panels.append(Panel(panel["name"], panel.get("title", ""), metric,
                            tuple(results), tuple(files)))
    return panels


def preset_configs(name: str, overrides: dict | None = None) -> list[ScenarioConfig]:
    preset = load_preset(name)
    return [series_config(preset, p, s, overrides) for p in preset["panels"]
            for s in p["series"]]


def describe(name: str) -> str:
    preset = load_preset(name)
    lines = [f"{name}: {preset.get('title', '')}"]
    for p in preset["panels"]:
        lines.append(f"  panel {p['name']} ({p['axis']}): "
                     + "; ".join(s["label"] for s in p["series"]))
    return "\n".join(lines)
