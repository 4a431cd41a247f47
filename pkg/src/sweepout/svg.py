"""Small self-contained SVG scatter plots with a fitted line."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

WIDTH, HEIGHT, MARGIN = 480, 360, 50


@dataclass(frozen=True)
class Axes:
    x: str
    y: str
    logx: bool = True
    logy: bool = True


def _fmt(v):
    return format(v, ".6g")


def render_svg(rows, axes: Axes) -> str:
    """SVG text of the points ``(row[x], row[y])`` and their least-squares line.

    With log axes the fit is done on the logarithms and its slope is printed.
    Points that a log axis cannot show (zero or negative) are left out and
    counted in a note on the plot.
    """
    if not rows:
        raise ValueError("need at least one row")
    x = np.array([float(r[axes.x]) for r in rows])
    y = np.array([float(r[axes.y]) for r in rows])
    keep = np.ones(len(x), dtype=bool)
    if axes.logx:
        keep &= x > 0
    if axes.logy:
        keep &= y > 0
    if not keep.any():
        raise ValueError("log axes need positive values")
    dropped = int(np.sum(~keep))
    x, y = x[keep], y[keep]
    u = np.log10(x) if axes.logx else x
    v = np.log10(y) if axes.logy else y
    ulo, uhi = float(u.min()), float(u.max())
    vlo, vhi = float(v.min()), float(v.max())
    if uhi == ulo:
        ulo, uhi = ulo - 1, uhi + 1
    if vhi == vlo:
        vlo, vhi = vlo - 1, vhi + 1

    def px(a):
        return MARGIN + (a - ulo) / (uhi - ulo) * (WIDTH - 2 * MARGIN)

    def py(b):
        return HEIGHT - MARGIN - (b - vlo) / (vhi - vlo) * (HEIGHT - 2 * MARGIN)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
             f'viewBox="0 0 {WIDTH} {HEIGHT}">',
             f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
             f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
             f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>']
    lab_x = ("log10 " if axes.logx else "") + axes.x
    lab_y = ("log10 " if axes.logy else "") + axes.y
    parts.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">{lab_x}</text>')
    parts.append(f'<text x="14" y="{HEIGHT / 2}" font-size="12" transform="rotate(-90 14 {HEIGHT / 2})" '
                 f'text-anchor="middle">{lab_y}</text>')
    for a, lab in ((ulo, _fmt(ulo)), (uhi, _fmt(uhi))):
        parts.append(f'<text x="{px(a):.2f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" font-size="10">{lab}</text>')
    for b, lab in ((vlo, _fmt(vlo)), (vhi, _fmt(vhi))):
        parts.append(f'<text x="{MARGIN - 4}" y="{py(b) + 3:.2f}" text-anchor="end" font-size="10">{lab}</text>')
    if dropped:
        parts.append(f'<text x="{MARGIN}" y="{MARGIN - 10}" font-size="10">'
                     f'{dropped} non-positive point{"s" if dropped > 1 else ""} not shown</text>')
    for a, b in zip(u, v):
        parts.append(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="3" fill="steelblue"/>')
    if len(u) >= 2 and np.ptp(u) > 0:
        slope, icept = np.polyfit(u, v, 1)
        parts.append(f'<line x1="{px(ulo):.2f}" y1="{py(slope * ulo + icept):.2f}" '
                     f'x2="{px(uhi):.2f}" y2="{py(slope * uhi + icept):.2f}" stroke="firebrick"/>')
        parts.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN - 10}" text-anchor="end" font-size="12">'
                     f'slope {_fmt(float(slope))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_svg(rows, axes: Axes, path) -> None:
    Path(path).write_text(render_svg(rows, axes), encoding="utf-8")


def svg_slope(text: str) -> float:
    """Slope annotation of a rendered plot (``nan`` when there is none)."""
    key = "slope "
    j = text.find(key)
    if j < 0:
        return math.nan
    return float(text[j + len(key): text.index("<", j)])
