"""Standalone SVG line charts for profile curves, written without a plotting library.

Output bytes depend only on the curves, so charts can be diffed between runs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence, Union
from xml.sax.saxutils import escape

from .profiles import ProfileCurve

WIDTH, HEIGHT = 640, 420
MARGIN = {"left": 70, "right": 170, "top": 40, "bottom": 60}
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def render_curves_svg(curves: Sequence[ProfileCurve], title: str = "") -> str:
    if not curves:
        raise ValueError("nothing to draw")
    feature = curves[0].feature
    kind = curves[0].grid.kind
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    x0, y0 = MARGIN["left"], MARGIN["top"]

    if kind == "continuous":
        lo = min(c.grid.points[0] for c in curves)
        hi = max(c.grid.points[-1] for c in curves)
        xs_of = lambda c: list(c.grid.points)  # noqa: E731
    else:
        levels = list(curves[0].grid.points)
        lo, hi = 0.0, float(max(len(levels) - 1, 1))
        xs_of = lambda c: [float(levels.index(z)) for z in c.grid.points]  # noqa: E731
    span = (hi - lo) or 1.0

    def px(x):
        return x0 + (x - lo) / span * plot_w if hi > lo else x0 + plot_w / 2

    def py(v):
        return y0 + (1.0 - v) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    # axes
    out.append(f'<g class="axes" stroke="black" stroke-width="1">'
               f'<line x1="{x0}" y1="{y0 + plot_h}" x2="{x0 + plot_w}" y2="{y0 + plot_h}"/>'
               f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y0 + plot_h}"/></g>')
    for i in range(6):
        v = i / 5
        out.append(f'<line x1="{x0 - 4}" y1="{_fmt(py(v))}" x2="{x0}" y2="{_fmt(py(v))}" stroke="black"/>'
                   f'<text x="{x0 - 8}" y="{_fmt(py(v) + 4)}" text-anchor="end">{v:.1f}</text>')
    if kind == "continuous":
        ticks = [lo + span * i / 5 for i in range(6)]
        labels = [_tick_label(t) for t in ticks]
    else:
        ticks = [float(i) for i in range(len(levels))]
        labels = [escape(str(z)) for z in levels]
    for t, lab in zip(ticks, labels):
        out.append(f'<line x1="{_fmt(px(t))}" y1="{y0 + plot_h}" x2="{_fmt(px(t))}" y2="{y0 + plot_h + 4}" '
                   f'stroke="black"/><text x="{_fmt(px(t))}" y="{y0 + plot_h + 18}" '
                   f'text-anchor="middle">{lab}</text>')
    out.append(f'<text class="xlabel" x="{_fmt(x0 + plot_w / 2)}" y="{HEIGHT - 14}" text-anchor="middle">'
               f'feature value: {escape(feature)}</text>')
    out.append(f'<text class="ylabel" x="18" y="{_fmt(y0 + plot_h / 2)}" text-anchor="middle" '
               f'transform="rotate(-90 18 {_fmt(y0 + plot_h / 2)})">average xG per shot</text>')

    for i, curve in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(float(v)))}" for x, v in zip(xs_of(curve), curve.values))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        ly = y0 + 10 + 18 * i
        lx = x0 + plot_w + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
                   f'<text x="{lx + 26}" y="{ly + 4}">{escape(curve.group_label)} (k={curve.k})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_curve_svg(curves: Union[ProfileCurve, Sequence[ProfileCurve]], path, title: str = "") -> Path:
    """Write one or more curves sharing a canvas to ``path``."""
    if isinstance(curves, ProfileCurve):
        curves = [curves]
    path = Path(path)
    path.write_text(render_curves_svg(list(curves), title), encoding="utf-8")
    return path
