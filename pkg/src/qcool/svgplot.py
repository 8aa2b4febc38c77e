"""Minimal deterministic SVG 1.1 line charts (no plotting dependency)."""
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f5fa8", "#c23b22", "#2b8a3e", "#7048a8")


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool = False
    points_only: bool = False


@dataclass
class Chart:
    title: str
    x_label: str
    y_label: str
    series: list = field(default_factory=list)
    markers: list = field(default_factory=list)  # (x, y, label)
    width: int = 640
    height: int = 440


def _fmt(v):
    return f"{v:.2f}"


def _tick_label(v):
    return f"{v:.4g}"


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    ticks = np.arange(start, hi + 0.5 * step, step)
    return [float(t) for t in ticks if lo - 1e-12 * abs(step) <= t <= hi + 1e-12 * abs(step)]


def render(chart):
    left, right, top, bottom = 72, 24, 40, 56
    pw = chart.width - left - right
    ph = chart.height - top - bottom
    xs = np.concatenate([np.asarray(s.x, float) for s in chart.series])
    ys = np.concatenate([np.asarray(s.y, float) for s in chart.series])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    pad = 0.05 * (y1 - y0 or 1.0)
    y0, y1 = y0 - pad, y1 + pad
    if x1 == x0:
        x1 = x0 + 1.0

    def px(v):
        return left + (v - x0) / (x1 - x0) * pw

    def py(v):
        return top + (y1 - v) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{chart.width}" height="{chart.height}" '
        f'viewBox="0 0 {chart.width} {chart.height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{chart.width}" height="{chart.height}" fill="white"/>',
        f'<text x="{chart.width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(chart.title)}</text>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{_fmt(X)}" y1="{top + ph}" x2="{_fmt(X)}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(X)}" y="{top + ph + 18}" text-anchor="middle">{_tick_label(t)}</text>')
    for t in _nice_ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{_fmt(Y)}" x2="{left}" y2="{_fmt(Y)}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(Y + 4)}" text-anchor="end">{_tick_label(t)}</text>')
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{chart.height - 12}" text-anchor="middle">{escape(chart.x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(chart.y_label)}</text>'
    )
    for i, s in enumerate(chart.series):
        color = PALETTE[i % len(PALETTE)]
        pts = [(px(a), py(b)) for a, b in zip(np.asarray(s.x, float), np.asarray(s.y, float))]
        if s.points_only:
            for X, Y in pts:
                out.append(f'<circle cx="{_fmt(X)}" cy="{_fmt(Y)}" r="3" fill="{color}"/>')
        else:
            dash = ' stroke-dasharray="6 4"' if s.dashed else ""
            path = " ".join(f"{_fmt(X)},{_fmt(Y)}" for X, Y in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = top + 16 + 16 * i
        out.append(f'<line x1="{left + 10}" y1="{ly}" x2="{left + 34}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + 40}" y="{ly + 4}">{escape(s.label)}</text>')
    for mx, my, label in chart.markers:
        X, Y = px(mx), py(my)
        out.append(f'<circle cx="{_fmt(X)}" cy="{_fmt(Y)}" r="4" fill="none" stroke="black"/>')
        out.append(f'<text x="{_fmt(X + 8)}" y="{_fmt(Y - 8)}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
