"""Minimal SVG line charts (axes, ticks, legend, one polyline per series)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_chart", "write_line_chart"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
_DASHES = {"sl0_reference": "6,4"}


def _ticks(lo, hi, count=6):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min((f * mag for f in (1, 2, 2.5, 5, 10) if f * mag >= raw), default=raw)
    first = math.ceil(lo / step - 1e-9) * step
    return [first + i * step for i in range(int((hi - first) / step + 1e-9) + 1)]


def _label(v):
    return f"{v:.4g}"


def line_chart(series, title="", x_label="", y_label="", log_x=False, width=640, height=420):
    """Render ``{name: (xs, ys)}`` as an SVG document string.

    Non-finite points are dropped. With ``log_x`` the x axis is log10 and
    non-positive x values are dropped too.
    """
    left, right, top, bottom = 70, 150, 40, 55
    pw, ph = width - left - right, height - top - bottom

    cleaned = {}
    for name, (xs, ys) in series.items():
        xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
        keep = np.isfinite(xs) & np.isfinite(ys)
        if log_x:
            keep &= xs > 0
        xs, ys = xs[keep], ys[keep]
        order = np.argsort(xs, kind="stable")
        cleaned[name] = (np.log10(xs[order]) if log_x else xs[order], ys[order])

    all_x = np.concatenate([xs for xs, _ in cleaned.values()] or [np.zeros(0)])
    all_y = np.concatenate([ys for _, ys in cleaned.values()] or [np.zeros(0)])
    if all_x.size == 0:
        all_x, all_y = np.array([0.0, 1.0]), np.array([0.0, 1.0])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return top + (y_hi - y) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')

    if log_x:
        x_ticks = [float(e) for e in range(math.ceil(x_lo - 1e-9), math.floor(x_hi + 1e-9) + 1)]
        if len(x_ticks) < 2:
            x_ticks = _ticks(x_lo, x_hi)
    else:
        x_ticks = _ticks(x_lo, x_hi)
    for t in x_ticks:
        x = px(t)
        text = _label(10.0**t) if log_x else _label(t)
        out.append(f'<line x1="{x:.1f}" y1="{top + ph}" x2="{x:.1f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.1f}" y="{top + ph + 18}" text-anchor="middle">{text}</text>')
    for t in _ticks(y_lo, y_hi):
        y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + pw}" y2="{y:.1f}" stroke="#dddddd"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.1f}" text-anchor="end">{_label(t)}</text>')
    if x_label:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(x_label)}</text>')
    if y_label:
        cy = top + ph / 2
        out.append(
            f'<text x="18" y="{cy:.1f}" text-anchor="middle" transform="rotate(-90 18 {cy:.1f})">{escape(y_label)}</text>'
        )

    for i, (name, (xs, ys)) in enumerate(cleaned.items()):
        color = _COLORS[i % len(_COLORS)]
        dash = _DASHES.get(name)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        if xs.size:
            points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2"{dash_attr} points="{points}"/>')
        ly = top + 12 + 18 * i
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_chart(path, series, **kwargs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(line_chart(series, **kwargs))
