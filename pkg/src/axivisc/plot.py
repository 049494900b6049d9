"""Minimal standalone SVG line plots."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 20, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class Axis:
    def __init__(self, values, scale: str, lo_px: float, hi_px: float):
        if scale not in ("linear", "log"):
            raise ValueError(f"unknown axis scale {scale!r}")
        if scale == "log" and any(v <= 0 for v in values):
            raise ValueError("log axis requires strictly positive values")
        self.scale = scale
        t = [self.f(v) for v in values] or [0.0, 1.0]
        lo, hi = min(t), max(t)
        if hi == lo:
            lo, hi = lo - 1.0, hi + 1.0
        if scale == "log":
            lo, hi = math.floor(lo), math.ceil(hi)
        self.lo, self.hi = lo, hi
        self.lo_px, self.hi_px = lo_px, hi_px

    def f(self, v):
        return math.log10(v) if self.scale == "log" else float(v)

    def px(self, v) -> float:
        return self.lo_px + (self.f(v) - self.lo) / (self.hi - self.lo) * (self.hi_px - self.lo_px)

    def ticks(self):
        if self.scale == "log":
            return [10.0 ** k for k in range(int(self.lo), int(self.hi) + 1)]
        return [self.lo + k * (self.hi - self.lo) / 4 for k in range(5)]


def render_svg(series, axes=("linear", "linear"), title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """series: list of (label, [(x, y), ...])."""
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    ax = Axis(xs, axes[0], LEFT, WIDTH - RIGHT)
    ay = Axis(ys, axes[1], HEIGHT - BOTTOM, TOP)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<line class="axis" x1="{LEFT}" y1="{HEIGHT - BOTTOM}" x2="{WIDTH - RIGHT}" y2="{HEIGHT - BOTTOM}" stroke="black"/>',
           f'<line class="axis" x1="{LEFT}" y1="{HEIGHT - BOTTOM}" x2="{LEFT}" y2="{TOP}" stroke="black"/>']
    for v in ax.ticks():
        x = ax.px(v)
        out.append(f'<line class="xtick" x1="{x:.3f}" y1="{HEIGHT - BOTTOM}" x2="{x:.3f}" y2="{HEIGHT - BOTTOM + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.3f}" y="{HEIGHT - BOTTOM + 18}" font-size="11" text-anchor="middle">{v:.3g}</text>')
    for v in ay.ticks():
        y = ay.px(v)
        out.append(f'<line class="ytick" x1="{LEFT - 5}" y1="{y:.3f}" x2="{LEFT}" y2="{y:.3f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.3f}" font-size="11" text-anchor="end">{v:.3g}</text>')
    if title:
        out.append(f'<text x="{(LEFT + WIDTH - RIGHT) / 2}" y="14" font-size="13" text-anchor="middle">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{(LEFT + WIDTH - RIGHT) / 2}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="15" y="{(TOP + HEIGHT - BOTTOM) / 2}" font-size="12" text-anchor="middle" '
                   f'transform="rotate(-90 15 {(TOP + HEIGHT - BOTTOM) / 2})">{escape(ylabel)}</text>')
    for k, (label, pts) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        coords = [(ax.px(x), ay.px(y)) for x, y in pts]
        if len(coords) > 1:
            path = " ".join(f"{x:.3f},{y:.3f}" for x, y in coords)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}"/>')
        for x, y in coords:
            out.append(f'<circle class="marker" cx="{x:.3f}" cy="{y:.3f}" r="3" fill="{color}"/>')
        ly = TOP + 16 * k + 10
        out.append(f'<g class="legend"><line x1="{WIDTH - RIGHT + 10}" y1="{ly}" x2="{WIDTH - RIGHT + 30}" y2="{ly}" '
                   f'stroke="{color}"/><text x="{WIDTH - RIGHT + 35}" y="{ly + 4}" font-size="11">{escape(label)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg_lineplot(series, axes, path, **labels) -> None:
    text = render_svg(series, axes, **labels)
    with open(path, "w") as fh:
        fh.write(text)
