"""Minimal static SVG charts: point-and-interval panels and scatter series."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from html import escape
from typing import Sequence

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    out, t = [], start
    while t <= hi + step * 1e-9:
        out.append(round(t, 12))
        t += step
    return out


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


@dataclass
class Panel:
    title: str
    x: Sequence[float]
    y: Sequence[float]
    lower: Sequence[float] | None = None
    upper: Sequence[float] | None = None
    series: Sequence[str] | None = None
    x_label: str = ""
    y_label: str = ""
    zero_line: bool = True
    diagonal: bool = False
    legend: dict[str, str] = field(default_factory=dict)


class _Frame:
    def __init__(self, left, top, width, height, xlim, ylim):
        self.left, self.top, self.width, self.height = left, top, width, height
        self.xlim, self.ylim = xlim, ylim

    def px(self, x):
        lo, hi = self.xlim
        return self.left + (x - lo) / (hi - lo) * self.width

    def py(self, y):
        lo, hi = self.ylim
        return self.top + self.height - (y - lo) / (hi - lo) * self.height


def _limits(values: list[float], pad: float = 0.08) -> tuple[float, float]:
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return (-1.0, 1.0)
    lo, hi = min(vals), max(vals)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span


def _panel(p: Panel, left: float, top: float, width: float, height: float) -> list[str]:
    ys = list(p.y) + list(p.lower or []) + list(p.upper or [])
    if p.zero_line:
        ys.append(0.0)
    xs = list(p.x)
    if p.diagonal:
        xs += ys
        ys = xs[:]
    f = _Frame(left, top, width, height, _limits(xs), _limits(ys))
    out = [
        f'<text x="{_fmt(left + width / 2)}" y="{_fmt(top - 10)}" text-anchor="middle" font-size="13">{escape(p.title)}</text>',
        f'<rect x="{_fmt(left)}" y="{_fmt(top)}" width="{_fmt(width)}" height="{_fmt(height)}" fill="none" stroke="#444"/>',
    ]
    for t in _ticks(*f.xlim):
        x = f.px(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{_fmt(top + height)}" x2="{_fmt(x)}" y2="{_fmt(top + height + 4)}" stroke="#444"/>')
        out.append(f'<text x="{_fmt(x)}" y="{_fmt(top + height + 16)}" text-anchor="middle" font-size="10">{_tick_label(t)}</text>')
    for t in _ticks(*f.ylim):
        y = f.py(t)
        out.append(f'<line x1="{_fmt(left - 4)}" y1="{_fmt(y)}" x2="{_fmt(left)}" y2="{_fmt(y)}" stroke="#444"/>')
        out.append(f'<text x="{_fmt(left - 6)}" y="{_fmt(y + 3)}" text-anchor="end" font-size="10">{_tick_label(t)}</text>')
    if p.x_label:
        out.append(f'<text x="{_fmt(left + width / 2)}" y="{_fmt(top + height + 32)}" text-anchor="middle" font-size="11">{escape(p.x_label)}</text>')
    if p.y_label:
        cx, cy = left - 42, top + height / 2
        out.append(f'<text x="{_fmt(cx)}" y="{_fmt(cy)}" text-anchor="middle" font-size="11" transform="rotate(-90 {_fmt(cx)} {_fmt(cy)})">{escape(p.y_label)}</text>')
    if p.zero_line and f.ylim[0] <= 0 <= f.ylim[1]:
        y0 = f.py(0.0)
        out.append(f'<line x1="{_fmt(left)}" y1="{_fmt(y0)}" x2="{_fmt(left + width)}" y2="{_fmt(y0)}" stroke="#999" stroke-dasharray="4 3"/>')
    if p.diagonal:
        lo = max(f.xlim[0], f.ylim[0])
        hi = min(f.xlim[1], f.ylim[1])
        out.append(f'<line x1="{_fmt(f.px(lo))}" y1="{_fmt(f.py(lo))}" x2="{_fmt(f.px(hi))}" y2="{_fmt(f.py(hi))}" stroke="#999" stroke-dasharray="4 3"/>')
    names = list(dict.fromkeys(p.series)) if p.series else [""]
    colors = {s: PALETTE[i % len(PALETTE)] for i, s in enumerate(names)}
    for i, (x, y) in enumerate(zip(p.x, p.y)):
        if y is None or not math.isfinite(y):
            continue
        color = colors[p.series[i]] if p.series else PALETTE[0]
        if p.lower is not None and p.upper is not None and math.isfinite(p.lower[i]) and math.isfinite(p.upper[i]):
            out.append(
                f'<line x1="{_fmt(f.px(x))}" y1="{_fmt(f.py(p.lower[i]))}" x2="{_fmt(f.px(x))}" y2="{_fmt(f.py(p.upper[i]))}" stroke="{color}"/>'
            )
        out.append(f'<circle cx="{_fmt(f.px(x))}" cy="{_fmt(f.py(y))}" r="3" fill="{color}"/>')
    if p.series:
        for k, s in enumerate(names):
            ly = top + 14 + 14 * k
            out.append(f'<circle cx="{_fmt(left + 10)}" cy="{_fmt(ly - 3)}" r="3" fill="{colors[s]}"/>')
            out.append(f'<text x="{_fmt(left + 18)}" y="{_fmt(ly)}" font-size="10">{escape(p.legend.get(s, s))}</text>')
    return out


def render(panels: Sequence[Panel], title: str = "", panel_width: float = 320, panel_height: float = 240) -> str:
    margin_l, margin_t, gap = 70, 50 if title else 35, 80
    width = margin_l + len(panels) * panel_width + (len(panels) - 1) * gap + 30
    height = margin_t + panel_height + 55
    body = []
    if title:
        body.append(f'<text x="{_fmt(width / 2)}" y="20" text-anchor="middle" font-size="15">{escape(title)}</text>')
    for i, p in enumerate(panels):
        body += _panel(p, margin_l + i * (panel_width + gap), margin_t, panel_width, panel_height)
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}" font-family="sans-serif">'
    )
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>', *body, "</svg>"]) + "\n"
