"""Static SVG line charts, written by hand.

Presentation only: every number shown here is computed elsewhere. The
files are self-contained (no scripts, no external references) and byte
reproducible — identical inputs give identical SVG text, so chart output
can sit under the same determinism guarantees as the CSVs.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

PALETTE = ("#1b6ca8", "#c23b22", "#2e8540", "#8e5ba6", "#b8860b", "#456")

_MARGIN_LEFT = 62
_MARGIN_RIGHT = 16
_MARGIN_TOP = 34
_MARGIN_BOTTOM = 46


class Series(NamedTuple):
    """One polyline: a label and equally long x/y sequences."""

    label: str
    x: Sequence[float]
    y: Sequence[float]


def _nice_step(span: float) -> float:
    """Tick spacing of 1, 2 or 5 times a power of ten, about 5 per axis."""
    raw = span / 5.0
    power = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * power:
            return mult * power
    return 10.0 * power


def _ticks(lo: float, hi: float) -> list[float]:
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step - 1e-9) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt(v: float) -> str:
    return f"{v:g}"


def _data_range(series: Sequence[Series], axis: int) -> tuple[float, float]:
    lo = math.inf
    hi = -math.inf
    for s in series:
        for v in (s.x if axis == 0 else s.y):
            v = float(v)
            if math.isfinite(v):
                lo = min(lo, v)
                hi = max(hi, v)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("chart needs at least one finite data point")
    if lo == hi:
        pad = 1.0 if lo == 0.0 else abs(lo) * 0.1
        lo, hi = lo - pad, hi + pad
    return lo, hi


def line_chart(
    series: Sequence[Series],
    title: str,
    x_label: str,
    y_label: str,
    width: int = 720,
    height: int = 440,
) -> str:
    """Render series as one SVG document and return its text.

    Non-finite y values break the polyline into separate segments, so
    gaps in a trajectory stay visible instead of being bridged.
    """
    if not series:
        raise ValueError("chart needs at least one series")
    x_lo, x_hi = _data_range(series, 0)
    y_lo, y_hi = _data_range(series, 1)
    plot_w = width - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = height - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(v: float) -> float:
        return _MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v: float) -> float:
        return _MARGIN_TOP + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="15">'
        f"{_escape(title)}</text>",
    ]
    axis_color = "#333"
    grid_color = "#ddd"
    for t in _ticks(x_lo, x_hi):
        px = sx(t)
        out.append(
            f'<line x1="{px:.2f}" y1="{_MARGIN_TOP}" x2="{px:.2f}" '
            f'y2="{_MARGIN_TOP + plot_h}" stroke="{grid_color}" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{px:.2f}" y="{_MARGIN_TOP + plot_h + 18}" text-anchor="middle" '
            f'font-size="11" fill="{axis_color}">{_fmt(t)}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        py = sy(t)
        out.append(
            f'<line x1="{_MARGIN_LEFT}" y1="{py:.2f}" x2="{_MARGIN_LEFT + plot_w}" '
            f'y2="{py:.2f}" stroke="{grid_color}" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_MARGIN_LEFT - 8}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-size="11" fill="{axis_color}">{_fmt(t)}</text>'
        )
    out.append(
        f'<rect x="{_MARGIN_LEFT}" y="{_MARGIN_TOP}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="{axis_color}" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{_MARGIN_LEFT + plot_w / 2:.1f}" y="{height - 10}" '
        f'text-anchor="middle" font-size="12">{_escape(x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{_MARGIN_TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-size="12" transform="rotate(-90 16 {_MARGIN_TOP + plot_h / 2:.1f})">'
        f"{_escape(y_label)}</text>"
    )

    for k, s in enumerate(series):
        if len(s.x) != len(s.y):
            raise ValueError(f"series {s.label!r}: x and y lengths differ")
        color = PALETTE[k % len(PALETTE)]
        segment: list[str] = []
        for xv, yv in zip(s.x, s.y):
            xv, yv = float(xv), float(yv)
            if math.isfinite(yv) and math.isfinite(xv):
                segment.append(f"{sx(xv):.2f},{sy(yv):.2f}")
            else:
                _flush_polyline(out, segment, color)
                segment = []
        _flush_polyline(out, segment, color)
        ly = _MARGIN_TOP + 14 + 16 * k
        lx = _MARGIN_LEFT + plot_w - 150
        out.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{lx + 28}" y="{ly}" font-size="11" fill="{axis_color}">'
            f"{_escape(s.label)}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _flush_polyline(out: list[str], points: list[str], color: str) -> None:
    if len(points) >= 2:
        out.append(
            f'<polyline points="{" ".join(points)}" fill="none" '
            f'stroke="{color}" stroke-width="1.8"/>'
        )
    elif len(points) == 1:
        x, y = points[0].split(",")
        out.append(f'<circle cx="{x}" cy="{y}" r="2.2" fill="{color}"/>')


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
