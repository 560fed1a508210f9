"""Minimal dependency-free SVG output: scatter and line charts only."""

from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")
_W, _H, _PAD = 480, 360, 45


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _frame(xlim, ylim, title, xlabel, ylabel):
    def sx(x):
        return _PAD + (x - xlim[0]) / (xlim[1] - xlim[0]) * (_W - 2 * _PAD)

    def sy(y):
        return _H - _PAD - (y - ylim[0]) / (ylim[1] - ylim[0]) * (_H - 2 * _PAD)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="10">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_W - 2 * _PAD}" height="{_H - 2 * _PAD}" '
        'fill="none" stroke="#888"/>',
        f'<text x="{_W / 2:.0f}" y="16" text-anchor="middle" font-size="12">{title}</text>',
        f'<text x="{_W / 2:.0f}" y="{_H - 6}" text-anchor="middle">{xlabel}</text>',
        f'<text x="12" y="{_H / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 12 {_H / 2:.0f})">{ylabel}</text>',
    ]
    for tx in _ticks(*xlim):
        parts.append(
            f'<text x="{sx(tx):.1f}" y="{_H - _PAD + 14}" text-anchor="middle">{tx:.3g}</text>'
        )
    for ty in _ticks(*ylim):
        parts.append(
            f'<text x="{_PAD - 5}" y="{sy(ty):.1f}" text-anchor="end" '
            f'dominant-baseline="middle">{ty:.3g}</text>'
        )
    return parts, sx, sy


def _limits(values) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    margin = 0.05 * (hi - lo)
    return lo - margin, hi + margin


def scatter_svg(points, path, title: str = "") -> None:
    """Write a 2-D scatter plot (points is an (n, 2) array-like)."""
    xs = [float(p[0]) for p in points]
    ys = [float(p[1]) for p in points]
    parts, sx, sy = _frame(_limits(xs), _limits(ys), title, "x0", "x1")
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="1.5" '
                     'fill="#1f77b4" fill-opacity="0.5"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))


def line_svg(x, series: dict, path, title: str = "", xlabel: str = "", ylabel: str = "") -> None:
    """Write a line chart; series maps label -> list of y values over x."""
    xs = [float(v) for v in x]
    all_y = [float(v) for ys in series.values() for v in ys]
    parts, sx, sy = _frame(_limits(xs), _limits(all_y), title, xlabel, ylabel)
    for i, (label, ys) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(float(b)):.2f}" for a, b in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{_W - _PAD + 4}" y="{_PAD + 12 * (i + 1)}" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
