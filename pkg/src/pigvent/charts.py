"""Static SVG line charts, written directly without a plotting library.

Charts are for looking at; nothing reads them back.
"""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 900, 220
_LEFT, _RIGHT, _TOP, _BOTTOM = 60, 150, 24, 30


def _nice_ticks(lo, hi, n=5):
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    first = np.ceil(lo / step) * step
    return list(np.arange(first, hi + 1e-9 * step, step))


def _panel(y0, title, series, band=None, unit=""):
    """One stacked panel; ``series`` maps a label to a y array."""
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys] + ([np.asarray(band, dtype=float)] if band else []))
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi - lo < 1e-9:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    n = max(max(len(y) for y in ys), 2)
    pw, ph = _W - _LEFT - _RIGHT, _H - _TOP - _BOTTOM

    def sx(i):
        return _LEFT + pw * i / (n - 1)

    def sy(v):
        return y0 + _TOP + ph * (1 - (v - lo) / (hi - lo))

    out = [f'<text x="{_LEFT}" y="{y0 + 16}" font-size="13" font-weight="bold">{escape(title)}</text>']
    if band:
        top, bot = sy(min(band[1], hi)), sy(max(band[0], lo))
        out.append(f'<rect x="{_LEFT}" y="{top:.1f}" width="{pw}" height="{max(bot - top, 0):.1f}" '
                   f'fill="#2ca02c" fill-opacity="0.12"/>')
    out.append(f'<rect x="{_LEFT}" y="{y0 + _TOP}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>')
    for t in _nice_ticks(lo, hi):
        y = sy(t)
        out.append(f'<line x1="{_LEFT - 4}" x2="{_LEFT + pw}" y1="{y:.1f}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{_LEFT - 6}" y="{y + 4:.1f}" font-size="10" text-anchor="end">{t:g}{unit}</text>')
    for j, (label, y) in enumerate(zip(series, ys)):
        color = PALETTE[j % len(PALETTE)]
        pts = " ".join(f"{sx(i):.1f},{sy(v):.1f}" for i, v in enumerate(y) if np.isfinite(v))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        ly = y0 + _TOP + 14 * (j + 1)
        out.append(f'<line x1="{_W - _RIGHT + 10}" x2="{_W - _RIGHT + 28}" y1="{ly - 4}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _RIGHT + 32}" y="{ly}" font-size="11">{escape(label)}</text>')
    return out


def line_chart(path, panels, title="", time_labels=None) -> None:
    """Write stacked panels of line series to ``path``.

    ``panels`` is a list of ``(title, {label: values}, band_or_None, unit)``.
    """
    height = _H * len(panels) + 30
    body = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{height}" '
            f'font-family="sans-serif" viewBox="0 0 {_W} {height}">',
            '<rect width="100%" height="100%" fill="white"/>',
            f'<text x="{_W / 2}" y="18" font-size="14" text-anchor="middle">{escape(title)}</text>']
    for i, (ptitle, series, band, unit) in enumerate(panels):
        body += _panel(24 + i * _H, ptitle, series, band, unit)
    if time_labels:
        first, last = time_labels[0], time_labels[-1]
        y = height - 6
        body.append(f'<text x="{_LEFT}" y="{y}" font-size="10">{escape(str(first))}</text>')
        body.append(f'<text x="{_W - _RIGHT}" y="{y}" font-size="10" text-anchor="end">{escape(str(last))}</text>')
    body.append("</svg>")
    Path(path).write_text("\n".join(body) + "\n", encoding="utf-8")


def trajectory_chart(path, logs: dict, bands, title="") -> None:
    """Indoor temperature, RH and ventilation of one or more runs with the comfort zone shaded."""
    first = next(iter(logs.values()))
    stamps = [t.isoformat(sep=" ") for t in first.timestamps] if len(first) else None
    panels = [
        ("Indoor temperature", {k: v.indoor_temperature for k, v in logs.items()},
         (bands.temp_low, bands.temp_high), ""),
        ("Indoor relative humidity", {k: v.indoor_rh for k, v in logs.items()}, (bands.rh_low, bands.rh_high), ""),
        ("Ventilation (m3/h per animal)", {k: v.ventilation for k, v in logs.items()}, None, ""),
    ]
    line_chart(path, panels, title, stamps)


def validation_chart(path, timestamps, observed: dict, predicted: dict, title="") -> None:
    """Predicted against observed series, one panel per quantity."""
    panels = [(name, {"observed": observed[name], "predicted": predicted[name]}, None, "") for name in observed]
    line_chart(path, panels, title, [t.isoformat(sep=" ") for t in timestamps])
