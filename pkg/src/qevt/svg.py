"""Minimal self-contained SVG charts (no plotting-library dependency).

Two chart types cover every report: line charts with optional dashed
reference lines, and a histogram with a density curve overlay.  Output is
plain text, deterministic for identical inputs, so artifacts diff cleanly.
"""

from __future__ import annotations

import math

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62, 16, 34, 46

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.2e}"
    return f"{v:.6g}"


class _Canvas:
    def __init__(self, x_range, y_range, title, xlabel, ylabel):
        self.x_lo, self.x_hi = x_range
        self.y_lo, self.y_hi = y_range
        if self.x_hi <= self.x_lo:
            self.x_hi = self.x_lo + 1.0
        if self.y_hi <= self.y_lo:
            self.y_hi = self.y_lo + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        ]
        self._axes(xlabel, ylabel)

    def px(self, x: float) -> float:
        frac = (x - self.x_lo) / (self.x_hi - self.x_lo)
        return MARGIN_L + frac * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        frac = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return HEIGHT - MARGIN_B - frac * (HEIGHT - MARGIN_T - MARGIN_B)

    def _axes(self, xlabel, ylabel):
        x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
        x1, y1 = WIDTH - MARGIN_R, MARGIN_T
        self.parts.append(
            f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>'
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>'
        )
        for t in _ticks(self.x_lo, self.x_hi):
            px = self.px(t)
            self.parts.append(
                f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" stroke="black"/>'
                f'<text x="{px:.1f}" y="{y0 + 18}" text-anchor="middle">{_fmt(t)}</text>'
            )
        for t in _ticks(self.y_lo, self.y_hi):
            py = self.py(t)
            self.parts.append(
                f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="black"/>'
                f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end">{_fmt(t)}</text>'
            )
        self.parts.append(
            f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle">{xlabel}</text>'
            f'<text x="16" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {(y0 + y1) / 2:.1f})">{ylabel}</text>'
        )

    def polyline(self, xs, ys, color, dashed=False, width=1.5):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y):.2f}" for x, y in zip(xs, ys))
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>'
        )

    def hline(self, y, color="#d62728", dashed=True, label=None):
        py = self.py(y)
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.parts.append(
            f'<line x1="{MARGIN_L}" y1="{py:.1f}" x2="{WIDTH - MARGIN_R}" y2="{py:.1f}" '
            f'stroke="{color}"{dash}/>'
        )
        if label:
            self.parts.append(
                f'<text x="{WIDTH - MARGIN_R - 4}" y="{py - 5:.1f}" text-anchor="end" '
                f'fill="{color}">{label}</text>'
            )

    def bar(self, x0, x1, y, color="#9ecae1"):
        px0, px1 = self.px(x0), self.px(x1)
        py, py0 = self.py(y), self.py(self.y_lo)
        self.parts.append(
            f'<rect x="{px0:.2f}" y="{py:.2f}" width="{px1 - px0:.2f}" '
            f'height="{py0 - py:.2f}" fill="{color}" stroke="white" stroke-width="0.5"/>'
        )

    def legend(self, entries):
        y = MARGIN_T + 8
        for label, color, dashed in entries:
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            self.parts.append(
                f'<line x1="{MARGIN_L + 10}" y1="{y}" x2="{MARGIN_L + 38}" y2="{y}" '
                f'stroke="{color}" stroke-width="2"{dash}/>'
                f'<text x="{MARGIN_L + 44}" y="{y + 4}">{label}</text>'
            )
            y += 16

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_chart(series, title, xlabel, ylabel, hlines=()) -> str:
    """Render line series with optional dashed horizontal reference lines.

    ``series``: iterable of dicts with keys x, y, label and optional dashed.
    ``hlines``: iterable of (y, label) pairs.
    """
    series = list(series)
    xs = [x for s in series for x in s["x"]]
    ys = [y for s in series for y in s["y"]]
    ys += [h for h, _ in hlines]
    pad = 0.05 * (max(ys) - min(ys) or 1.0)
    canvas = _Canvas(
        (min(xs), max(xs)), (min(ys) - pad, max(ys) + pad), title, xlabel, ylabel
    )
    entries = []
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        dashed = bool(s.get("dashed"))
        canvas.polyline(s["x"], s["y"], color, dashed=dashed)
        entries.append((s["label"], color, dashed))
    for y, label in hlines:
        canvas.hline(y, label=label)
    if entries:
        canvas.legend(entries)
    return canvas.render()


def histogram_with_curve(values, curve_x, curve_y, title, xlabel, bins=30) -> str:
    """Density-normalized histogram with an overlaid curve."""
    import numpy as np

    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, density=True)
    top = max(float(counts.max()), float(max(curve_y, default=0.0)), 1e-12)
    canvas = _Canvas(
        (float(edges[0]), float(edges[-1])),
        (0.0, 1.05 * top),
        title,
        xlabel,
        "density",
    )
    for i, c in enumerate(counts):
        canvas.bar(float(edges[i]), float(edges[i + 1]), float(c))
    canvas.polyline([float(x) for x in curve_x], [float(y) for y in curve_y], PALETTE[1], width=2.0)
    return canvas.render()
