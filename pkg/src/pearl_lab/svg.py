"""Tiny hand-emitted SVG charts: line plots, bar charts, heat maps.

Deliberately dependency-free; the benchmark artifacts only need polylines,
rectangles and text labels, so the emitters write the XML directly. All
emitted files are standalone SVG 1.1 documents.
"""

from __future__ import annotations

from typing import List, Mapping, Optional, Sequence, Set, Tuple
from xml.sax.saxutils import escape

WIDTH = 640
HEIGHT = 400
MARGIN_LEFT = 64
MARGIN_RIGHT = 16
MARGIN_TOP = 40
MARGIN_BOTTOM = 48

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _header(title: str) -> List[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15" font-weight="bold">{escape(title)}</text>',
    ]


def _axes(x_label: str, y_label: str) -> List[str]:
    x0, y0 = MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM
    x1, y1 = WIDTH - MARGIN_RIGHT, MARGIN_TOP
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
        f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 10}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{escape(x_label)}</text>',
        f'<text x="16" y="{(y0 + y1) / 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 16 {(y0 + y1) / 2})">{escape(y_label)}</text>',
    ]


def _scale(lo: float, hi: float) -> Tuple[float, float]:
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _x_pix(v: float, lo: float, hi: float) -> float:
    return MARGIN_LEFT + (v - lo) / (hi - lo) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)


def _y_pix(v: float, lo: float, hi: float) -> float:
    return HEIGHT - MARGIN_BOTTOM - (v - lo) / (hi - lo) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)


def _ticks(lo: float, hi: float, n: int = 5) -> List[float]:
    return [lo + i * (hi - lo) / (n - 1) for i in range(n)]


def line_chart(
    series: Mapping[str, Tuple[Sequence[float], Sequence[float]]],
    path: str,
    title: str,
    x_label: str = "",
    y_label: str = "",
    marks: Optional[Mapping[str, Tuple[float, float]]] = None,
) -> None:
    """Emit one polyline per named series, with optional per-series markers."""
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys]
    x_lo, x_hi = _scale(min(xs_all), max(xs_all))
    y_lo, y_hi = _scale(min(min(ys_all), 0.0), max(ys_all))
    parts = _header(title) + _axes(x_label, y_label)
    for tick in _ticks(y_lo, y_hi):
        y = _y_pix(tick, y_lo, y_hi)
        parts.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{y + 4}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{tick:.2f}</text>'
        )
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{y}" x2="{WIDTH - MARGIN_RIGHT}" y2="{y}" '
            f'stroke="#dddddd" stroke-width="0.5"/>'
        )
    for tick in _ticks(x_lo, x_hi):
        x = _x_pix(tick, x_lo, x_hi)
        parts.append(
            f'<text x="{x}" y="{HEIGHT - MARGIN_BOTTOM + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{tick:.2f}</text>'
        )
    for idx, (label, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        pts = " ".join(
            f"{_x_pix(x, x_lo, x_hi):.1f},{_y_pix(y, y_lo, y_hi):.1f}" for x, y in zip(xs, ys)
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{WIDTH - MARGIN_RIGHT - 6}" y="{MARGIN_TOP + 14 + 14 * idx}" '
            f'text-anchor="end" font-family="sans-serif" font-size="11" '
            f'fill="{color}">{escape(label)}</text>'
        )
        if marks and label in marks:
            mx, my = marks[label]
            parts.append(
                f'<circle cx="{_x_pix(mx, x_lo, x_hi):.1f}" cy="{_y_pix(my, y_lo, y_hi):.1f}" '
                f'r="4" fill="none" stroke="{color}" stroke-width="2"/>'
            )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def bar_chart(
    labels: Sequence[str],
    counts: Sequence[float],
    path: str,
    title: str,
    x_label: str = "",
    y_label: str = "count",
) -> None:
    """A plain vertical bar chart (used for run-length histograms)."""
    y_lo, y_hi = 0.0, max(max(counts), 1.0) * 1.05
    n = len(labels)
    span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    bar_w = span / max(n, 1) * 0.8
    parts = _header(title) + _axes(x_label, y_label)
    for tick in _ticks(y_lo, y_hi):
        y = _y_pix(tick, y_lo, y_hi)
        parts.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{y + 4}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{tick:.0f}</text>'
        )
    label_every = max(1, n // 16)
    for i, (label, count) in enumerate(zip(labels, counts)):
        x = MARGIN_LEFT + span * (i + 0.1) / max(n, 1)
        y = _y_pix(count, y_lo, y_hi)
        h = HEIGHT - MARGIN_BOTTOM - y
        parts.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{max(h, 0):.1f}" '
            f'fill="{PALETTE[0]}"/>'
        )
        if i % label_every == 0:
            parts.append(
                f'<text x="{x + bar_w / 2:.1f}" y="{HEIGHT - MARGIN_BOTTOM + 16}" '
                f'text-anchor="middle" font-family="sans-serif" font-size="10">{escape(label)}</text>'
            )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def heatmap(
    matrix: Sequence[Sequence[float]],
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    path: str,
    title: str,
    marked: Optional[Set[Tuple[int, int]]] = None,
) -> None:
    """A value-shaded grid with optional outlined cells (e.g. per-row argmax)."""
    flat = [v for row in matrix for v in row]
    lo, hi = min(flat), max(flat)
    rng = hi - lo if hi > lo else 1.0
    n_rows, n_cols = len(matrix), len(matrix[0])
    cell_w = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / n_cols
    cell_h = (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / n_rows
    parts = _header(title)
    for i, row in enumerate(matrix):
        for j, v in enumerate(row):
            frac = (v - lo) / rng
            # light yellow to deep blue
            r = int(255 - 200 * frac)
            g = int(245 - 150 * frac)
            b = int(200 + 55 * frac)
            x = MARGIN_LEFT + j * cell_w
            y = MARGIN_TOP + i * cell_h
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{cell_w:.1f}" height="{cell_h:.1f}" '
                f'fill="rgb({r},{g},{b})" stroke="white" stroke-width="0.5"/>'
            )
            parts.append(
                f'<text x="{x + cell_w / 2:.1f}" y="{y + cell_h / 2 + 4:.1f}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">{v:.2f}</text>'
            )
            if marked and (i, j) in marked:
                parts.append(
                    f'<rect x="{x + 1:.1f}" y="{y + 1:.1f}" width="{cell_w - 2:.1f}" '
                    f'height="{cell_h - 2:.1f}" fill="none" stroke="#d62728" stroke-width="2"/>'
                )
    for i, label in enumerate(row_labels):
        parts.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{MARGIN_TOP + (i + 0.5) * cell_h + 4:.1f}" '
            f'text-anchor="end" font-family="sans-serif" font-size="10">{escape(label)}</text>'
        )
    for j, label in enumerate(col_labels):
        parts.append(
            f'<text x="{MARGIN_LEFT + (j + 0.5) * cell_w:.1f}" y="{HEIGHT - MARGIN_BOTTOM + 16}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="10">{escape(label)}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
