"""
Artifacts - CSV, JSON and SVG emitters

CSV numbers use 17 significant digits so every value parses back to the
same double; line endings are LF.
"""

import csv
import io
import json
from typing import Any, Dict, Mapping, Sequence

import numpy as np

from app.services.commutation_core import DutyWaveform
from app.services.inverter_sim import SwitchedWaveform, line_to_line
from app.services.spectral import Spectrum

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"]


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def _csv_text(header: Sequence[str], columns: Sequence[np.ndarray]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([fmt(v) for v in row])
    return buffer.getvalue()


def duty_csv(waveform: DutyWaveform) -> str:
    """theta_rad,d_1,...,d_n with one row per grid point"""
    n = waveform.duties.shape[1]
    header = ["theta_rad"] + [f"d_{r + 1}" for r in range(n)]
    return _csv_text(header, [waveform.thetas] + list(waveform.duties.T))


def waveform_csv(wf: SwitchedWaveform) -> str:
    """t_s,v_a,v_b,...,v_ab,v_bc,..."""
    traces = line_to_line(wf)
    header = ["t_s"] + [f"v_{name}" for name in wf.phase_names] + list(traces)
    return _csv_text(header, [wf.t] + list(wf.v_pg) + list(traces.values()))


def spectrum_csv(spec: Spectrum) -> str:
    return _csv_text(["freq_hz", "amplitude"], [spec.freqs, spec.mags])


def parse_csv(text: str) -> Dict[str, np.ndarray]:
    """Read an emitted CSV back into named float columns"""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    values = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: values[:, i] for i, name in enumerate(header)}


def to_json(document: Mapping[str, Any]) -> str:
    return json.dumps(document, indent=2, allow_nan=False) + "\n"


def svg_plot(x: np.ndarray, series: Mapping[str, np.ndarray], title: str = "",
             x_label: str = "", y_label: str = "", width: int = 720, height: int = 400) -> str:
    """Minimal line plot: one polyline per series, framed axes and a legend"""
    left, right, top, bottom = 60, 110, 30, 45
    plot_w = width - left - right
    plot_h = height - top - bottom

    x = np.asarray(x, dtype=float)
    stacked = np.vstack([np.asarray(v, dtype=float) for v in series.values()])
    x_min, x_max = float(x.min()), float(x.max())
    y_min, y_max = float(stacked.min()), float(stacked.max())
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_min, y_max = y_min - 0.5, y_max + 0.5

    def sx(v):
        return left + (v - x_min) / (x_max - x_min) * plot_w

    def sy(v):
        return top + (y_max - v) / (y_max - y_min) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="12">{x_label}</text>',
        f'<text x="14" y="{top + plot_h / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {top + plot_h / 2:.1f})">{y_label}</text>',
    ]
    for value, anchor_y in ((y_min, top + plot_h), (y_max, top)):
        parts.append(f'<text x="{left - 6}" y="{anchor_y + 4:.1f}" text-anchor="end" '
                     f'font-size="10">{value:.3g}</text>')
    for value, anchor_x in ((x_min, left), (x_max, left + plot_w)):
        parts.append(f'<text x="{anchor_x:.1f}" y="{top + plot_h + 14}" text-anchor="middle" '
                     f'font-size="10">{value:.3g}</text>')

    for i, (name, values) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, np.asarray(values, dtype=float)))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>')
        legend_y = top + 14 + 16 * i
        parts.append(f'<line x1="{left + plot_w + 10}" y1="{legend_y - 4}" x2="{left + plot_w + 30}" '
                     f'y2="{legend_y - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{left + plot_w + 34}" y="{legend_y}" font-size="11">{name}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def duty_svg(waveform: DutyWaveform) -> str:
    series = {f"d_{r + 1}": waveform.duties[:, r] for r in range(waveform.duties.shape[1])}
    title = f"{waveform.technique.value.upper()} duty cycles, m={waveform.polar.m:g} ({waveform.frame.value} position)"
    return svg_plot(waveform.thetas, series, title, "electrical position (rad)", "duty")


def waveform_svg(wf: SwitchedWaveform) -> str:
    traces = line_to_line(wf)
    name, v_ll = next(iter(traces.items()))
    title = f"{wf.technique.value.upper()} line-to-line voltage {name}, m={wf.m:g}"
    return svg_plot(wf.t, {name: v_ll}, title, "time (s)", "voltage (V)")
