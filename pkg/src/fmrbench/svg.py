"""Minimal dependency-free SVG charts (no timestamps, byte-stable output)."""
from __future__ import annotations

from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 40, 60


def _scale(lo, hi, a, b):
    if hi == lo:
        hi = lo + 1.0
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _frame(title, xlabel, ylabel, xs, ys):
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    sx = _scale(x0, x1, LEFT, W - RIGHT)
    sy = _scale(y0, y1, H - BOTTOM, TOP)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>',
        f'<text x="{(LEFT + W - RIGHT) / 2:.1f}" y="{H - 18}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>',
        f'<text x="18" y="{(TOP + H - BOTTOM) / 2:.1f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {(TOP + H - BOTTOM) / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{H - BOTTOM + 18}" text-anchor="middle" font-size="11">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{LEFT - 8}" y="{sy(t) + 4:.1f}" text-anchor="end" font-size="11">{t:.3g}</text>')
    return out, sx, sy


def line_chart(series: dict, title: str, xlabel: str, ylabel: str) -> str:
    """``series`` maps a legend label to a list of ``(x, y)`` points."""
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    out, sx, sy = _frame(title, xlabel, ylabel, xs, ys)
    for k, (label, pts) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{path}"/>')
        for x, y in pts:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="{color}"/>')
        ly = TOP + 18 * k
        out.append(f'<line x1="{W - RIGHT + 15}" y1="{ly}" x2="{W - RIGHT + 35}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{W - RIGHT + 40}" y="{ly + 4}" font-size="12">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_chart(points, title: str, xlabel: str, ylabel: str, highlight=None) -> str:
    xs = [x for x, _ in points] + ([highlight[0]] if highlight else [])
    ys = [y for _, y in points] + ([highlight[1]] if highlight else [])
    out, sx, sy = _frame(title, xlabel, ylabel, xs, ys)
    for x, y in points:
        out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="{PALETTE[0]}"/>')
    if highlight:
        out.append(f'<circle cx="{sx(highlight[0]):.2f}" cy="{sy(highlight[1]):.2f}" r="5" fill="{PALETTE[1]}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
