"""CSV tables and self-contained SVG plots for sweep results.

Numbers are formatted with fixed precision so identical results give
identical bytes on every platform.
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import PointResult, SweepResult

SWEEP_HEADER = ("axis", "value", "mean_se", "std_se", "ci99_half", "T", "seed")
DTHETA_HEADER = ("axis", "value", "mean_abs_dtheta_rad", "std_abs_dtheta_rad",
                 "ci99_half", "T", "seed")
PATTERN_HEADER = ("theta_rad", "phi_rad", "re_E", "im_E", "directivity_dbi")
CHANNEL_HEADER = ("sample_index", "d_s_m", "phi_rad", "delta_theta_rad")


def _header(metric: str):
    return SWEEP_HEADER if metric == "se" else DTHETA_HEADER


def _stat(x: float, metric: str) -> str:
    return f"{x:.9f}" if metric == "se" else f"{x:.9e}"


def sweep_to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_header(result.metric))
    for v, p in zip(result.values, result.points):
        w.writerow([result.axis, f"{v:.9g}", _stat(p.mean, result.metric),
                    _stat(p.std, result.metric), _stat(p.ci99_half, result.metric),
                    p.n_samples, result.seed])
    return buf.getvalue()


def emit_csv(result: SweepResult, path) -> Path:
    path = Path(path)
    path.write_text(sweep_to_csv(result))
    return path


def read_csv(path, label: str = "") -> SweepResult:
    """Parse a sweep table written by :func:`emit_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        rows = list(reader)
    if header == SWEEP_HEADER:
        metric = "se"
    elif header == DTHETA_HEADER:
        metric = "abs_delta_theta"
    else:
        raise ValueError(f"{path}: unrecognised header {','.join(header)}")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    axes = {r[0] for r in rows}
    if len(axes) != 1:
        raise ValueError(f"{path}: mixed axes {sorted(axes)}")
    seed = int(rows[0][6])
    points = tuple(PointResult(float(r[2]), float(r[3]), float(r[4]), int(r[5]), int(r[6]))
                   for r in rows)
    return SweepResult(rows[0][0], tuple(float(r[1]) for r in rows), points, seed,
                       metric, label)


def pattern_to_csv(pattern, step: int = 1) -> str:
    """Sampled far field; ``step`` thins the grid in both angles."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PATTERN_HEADER)
    d = pattern.directivity
    with np.errstate(divide="ignore"):
        d_db = 10.0 * np.log10(d)
    for i in range(0, pattern.grid.n_theta, step):
        for j in range(0, pattern.grid.n_phi, step):
            e = pattern.field[i, j]
            dbi = "-inf" if not np.isfinite(d_db[i, j]) else f"{d_db[i, j]:.6f}"
            w.writerow([f"{pattern.theta[i]:.9f}", f"{pattern.phi[j]:.9f}",
                        f"{e.real:.9e}", f"{e.imag:.9e}", dbi])
    return buf.getvalue()


def cut_to_csv(pattern, phi0: float = 0.0, n: int = 2001, span: float = math.pi / 2) -> str:
    """Directivity along the cut through the normal at azimuth ``phi0``."""
    psi = np.linspace(-span, span, n)
    e = pattern.evaluator.cut(psi, phi0)
    with np.errstate(divide="ignore"):
        dbi = 10.0 * np.log10(4.0 * math.pi * np.abs(e) ** 2 / pattern.total_power)
    lines = ["psi_rad,directivity_dbi"]
    lines += [f"{p:.9f},{'-inf' if not np.isfinite(g) else f'{g:.6f}'}"
              for p, g in zip(psi, dbi)]
    return "\n".join(lines) + "\n"


def channel_to_csv(rows) -> str:
    """``rows``: iterable of (sample_index, distance_m, phase_rad, delta_theta_rad)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CHANNEL_HEADER)
    for i, d, phi, dt in rows:
        w.writerow([int(i), f"{d:.9e}", f"{phi:.9e}", f"{dt:.9e}"])
    return buf.getvalue()


# -- SVG -------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

_AXIS_LABELS = {
    "alpha": "electron density index alpha",
    "beta": "plasma order beta",
    "kappa": "hardware impairment kappa",
    "n_bodies": "number of celestial bodies N",
    "steering_limit": "steering limit theta_0 [rad]",
    "tx_power": "transmit power P_T [W]",
    "carrier_frequency": "carrier frequency [GHz]",
}


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.6g}"


def render_svg(results, title: str = "", ylabel: str | None = None,
               width: int = 720, height: int = 480) -> str:
    """SVG line plot with 99% CI error bars, one series per result.

    Results carrying per-sample traces also get a faint scatter layer.
    """
    if isinstance(results, SweepResult):
        results = [results]
    if not results:
        raise ValueError("nothing to plot")
    axis = results[0].axis
    metric = results[0].metric
    scale_x = 1e-9 if axis == "carrier_frequency" else 1.0
    log_x = axis in ("kappa", "beta") and all(v > 0 for r in results for v in r.values)

    def tx(v):
        v = v * scale_x
        return math.log10(v) if log_x else v

    xs = [tx(v) for r in results for v in r.values]
    ys = [y for r in results for p in r.points for y in (p.mean - p.ci99_half,
                                                         p.mean + p.ci99_half)]
    for r in results:
        for p in r.points:
            if p.samples:
                ys += [s.se for s in p.samples]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    y0, y1 = min(0.0, min(ys)), max(ys)
    if y1 <= y0:
        y1 = y0 + 1.0
    y1 += 0.05 * (y1 - y0)

    ml, mr, mt, mb = 70, 190, 40, 60
    pw, ph = width - ml - mr, height - mt - mb

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    out.append(f'<rect class="frame" x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="black"/>')
    for t in _nice_ticks(y0, y1):
        out.append(f'<line class="ytick" x1="{ml - 4}" y1="{_fmt(py(t))}" x2="{ml}" '
                   f'y2="{_fmt(py(t))}" stroke="black"/>')
        out.append(f'<text x="{ml - 7}" y="{_fmt(py(t) + 4)}" text-anchor="end">'
                   f'{_tick_label(t)}</text>')
    for t in _nice_ticks(x0, x1):
        label = _tick_label(10.0**t) if log_x else _tick_label(t)
        out.append(f'<line class="xtick" x1="{_fmt(px(t))}" y1="{mt + ph}" '
                   f'x2="{_fmt(px(t))}" y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_fmt(px(t))}" y="{mt + ph + 18}" text-anchor="middle">'
                   f'{label}</text>')
    xlabel = _AXIS_LABELS.get(axis, axis) + (" (log scale)" if log_x else "")
    if ylabel is None:
        ylabel = "spectral efficiency [bit/s/Hz]" if metric == "se" else "|delta theta| [rad]"
    out.append(f'<text class="xlabel" x="{ml + pw / 2:.1f}" y="{height - 15}" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text class="ylabel" x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')

    for k, r in enumerate(results):
        color = _COLORS[k % len(_COLORS)]
        pts = [(px(tx(v)), p) for v, p in zip(r.values, r.points)]
        for x, p in pts:
            if p.samples:
                out.append(f'<g class="trace" fill="{color}" fill-opacity="0.25">')
                out += [f'<circle cx="{_fmt(x)}" cy="{_fmt(py(s.se))}" r="1.5"/>'
                        for s in p.samples]
                out.append('</g>')
        path = " ".join(f"{_fmt(x)},{_fmt(py(p.mean))}" for x, p in pts)
        out.append(f'<polyline class="series" points="{path}" fill="none" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        for x, p in pts:
            out.append(f'<line class="errorbar" x1="{_fmt(x)}" y1="{_fmt(py(p.mean - p.ci99_half))}" '
                       f'x2="{_fmt(x)}" y2="{_fmt(py(p.mean + p.ci99_half))}" stroke="{color}"/>')
            out.append(f'<circle class="marker" cx="{_fmt(x)}" cy="{_fmt(py(p.mean))}" '
                       f'r="3" fill="{color}"/>')
        ly = mt + 10 + 18 * k
        name = r.label or f"sweep over {axis}"
        out.append(f'<g class="legend"><line x1="{ml + pw + 12}" y1="{ly}" '
                   f'x2="{ml + pw + 32}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
                   f'<text x="{ml + pw + 37}" y="{ly + 4}">{escape(name)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(results, path, title: str = "", ylabel: str | None = None) -> Path:
    path = Path(path)
    path.write_text(render_svg(results, title, ylabel))
    return path
