"""Minimal SVG line chart: one polyline, axes with ticks, dashed best-n marker."""

from __future__ import annotations

import math
from html import escape
from typing import Sequence


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


def line_chart(
    xs: Sequence[float],
    ys: Sequence[float],
    *,
    marker_x: float | None = None,
    title: str = "",
    xlabel: str = "features (n)",
    ylabel: str = "",
    width: int = 480,
    height: int = 320,
) -> str:
    left, right, top, bottom = 60, 20, 30 if title else 15, 45
    pw, ph = width - left - right, height - top - bottom
    x0, x1 = 0.0, max(xs) + 1.0
    lo, hi = min(ys), max(ys)
    pad = (hi - lo) * 0.1 or 0.05
    y0, y1 = lo - pad, hi + pad

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1.0 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    # axes
    out.append(
        f'<path d="M{left},{top} L{left},{top + ph} L{left + pw},{top + ph}" stroke="black" fill="none"/>'
    )
    for t in _nice_ticks(x0, x1 - 1.0):
        X = sx(t)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 16}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        Y = sy(t)
        out.append(f'<line x1="{left - 4}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 7}" y="{Y + 4:.2f}" text-anchor="end">{t:g}</text>')
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>'
    )
    out.append(
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
    if marker_x is not None:
        X = sx(marker_x)
        out.append(
            f'<line x1="{X:.2f}" y1="{top}" x2="{X:.2f}" y2="{top + ph}" stroke="black" '
            f'stroke-dasharray="5,4"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
