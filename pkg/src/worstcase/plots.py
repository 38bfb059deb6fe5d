"""Minimal SVG line and scatter plots, written as plain text."""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT, PAD = 640, 360, 48
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _scale(values: np.ndarray, lo: float, hi: float, out_lo: float, out_hi: float) -> np.ndarray:
    if hi <= lo:
        return np.full_like(values, (out_lo + out_hi) / 2, dtype=float)
    return out_lo + (values - lo) / (hi - lo) * (out_hi - out_lo)


def _frame(title: str, xlabel: str, ylabel: str, xr: tuple, yr: tuple) -> list[str]:
    x0, x1, y0, y1 = PAD, WIDTH - PAD / 2, HEIGHT - PAD, PAD / 2
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 8}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>',
        f'<text x="12" y="{(y0 + y1) / 2}" font-size="11" transform="rotate(-90 12 {(y0 + y1) / 2})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
        f'<text x="{x0}" y="{y0 + 14}" font-size="10">{xr[0]:.4g}</text>',
        f'<text x="{x1}" y="{y0 + 14}" font-size="10" text-anchor="end">{xr[1]:.4g}</text>',
        f'<text x="{x0 - 4}" y="{y0}" font-size="10" text-anchor="end">{yr[0]:.4g}</text>',
        f'<text x="{x0 - 4}" y="{y1 + 8}" font-size="10" text-anchor="end">{yr[1]:.4g}</text>',
    ]


def line_svg(
    x: Sequence[float],
    series: Mapping[str, Sequence[float]],
    title: str = "",
    xlabel: str = "time [s]",
    ylabel: str = "",
) -> str:
    """One polyline per series, one vertex per sample."""
    x = np.asarray(x, dtype=float)
    ys = {k: np.asarray(v, dtype=float) for k, v in series.items()}
    finite = np.concatenate([y[np.isfinite(y)] for y in ys.values()] or [np.zeros(1)])
    yr = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    xr = (float(x.min()), float(x.max()))
    out = _frame(title, xlabel, ylabel, xr, yr)
    px = _scale(x, *xr, PAD, WIDTH - PAD / 2)
    for i, (name, y) in enumerate(ys.items()):
        py = _scale(np.clip(y, *yr), *yr, HEIGHT - PAD, PAD / 2)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        color = COLORS[i % len(COLORS)]
        out.append(f'<polyline data-series="{escape(name)}" fill="none" stroke="{color}" points="{pts}"/>')
        out.append(f'<text x="{WIDTH - PAD}" y="{30 + 14 * i}" font-size="11" fill="{color}" '
                   f'text-anchor="end">{escape(name)}</text>')
    if yr[0] < 0 < yr[1]:
        zero = _scale(np.array([0.0]), *yr, HEIGHT - PAD, PAD / 2)[0]
        out.append(f'<line x1="{PAD}" y1="{zero:.2f}" x2="{WIDTH - PAD / 2}" y2="{zero:.2f}" '
                   'stroke="gray" stroke-dasharray="4 3"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_svg(
    x: Sequence[float],
    y: Sequence[float],
    quality: Sequence[float],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    """Evaluated points colored from red (low quality, worse) to blue (high)."""
    x, y, q = (np.asarray(a, dtype=float) for a in (x, y, quality))
    xr = (float(x.min()), float(x.max()))
    yr = (float(y.min()), float(y.max()))
    out = _frame(title, xlabel, ylabel, xr, yr)
    px = _scale(x, *xr, PAD, WIDTH - PAD / 2)
    py = _scale(y, *yr, HEIGHT - PAD, PAD / 2)
    t = _scale(q, float(q.min()), float(q.max()), 0.0, 1.0)
    for a, b, c in zip(px, py, t):
        red, blue = int(255 * (1 - c)), int(255 * c)
        out.append(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="rgb({red},40,{blue})"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
