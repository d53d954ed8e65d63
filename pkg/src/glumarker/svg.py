"""Minimal static SVG rendering for ROC overlays and importance heatmaps."""

from __future__ import annotations

from typing import Sequence, Tuple
from xml.sax.saxutils import escape

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _header(width: int, height: int) -> list:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]


def roc_overlay(title: str, curves: Sequence[Tuple[str, Sequence[Tuple[float, float]], float]]) -> str:
    """Overlay of ROC curves ``(name, points, auc)`` on the unit square with a chance diagonal."""
    size, pad = 320, 50
    W, H = size + pad + 170, size + 2 * pad

    def xy(fpr, tpr):
        return pad + fpr * size, pad + (1.0 - tpr) * size

    out = _header(W, H)
    out.append(f'<text x="{pad}" y="{pad - 20}" font-size="13">{escape(title)}</text>')
    out.append(f'<rect x="{pad}" y="{pad}" width="{size}" height="{size}" fill="none" stroke="black"/>')
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        x, _ = xy(t, 0)
        _, y = xy(0, t)
        out.append(f'<text x="{x:.1f}" y="{pad + size + 15}" text-anchor="middle">{t:g}</text>')
        out.append(f'<text x="{pad - 6}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    out.append(f'<text x="{pad + size / 2}" y="{H - 8}" text-anchor="middle">False positive rate</text>')
    out.append(
        f'<text x="14" y="{pad + size / 2}" text-anchor="middle" '
        f'transform="rotate(-90 14 {pad + size / 2})">True positive rate</text>'
    )
    x0, y0 = xy(0, 0)
    x1, y1 = xy(1, 1)
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="#999" stroke-dasharray="4 4"/>')
    for i, (name, points, auc) in enumerate(curves):
        colour = PALETTE[i % len(PALETTE)]
        pts = " ".join("%.2f,%.2f" % xy(f, t) for f, t in points)
        out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.8"/>')
        ly = pad + 14 + 16 * i
        out.append(f'<line x1="{pad + size + 12}" y1="{ly - 4}" x2="{pad + size + 30}" y2="{ly - 4}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{pad + size + 34}" y="{ly}">{escape(name)} (AUC {auc:.3f})</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _diverging(v: float, vmax: float) -> str:
    """Blue (negative) - white (0) - red (positive)."""
    t = 0.0 if vmax <= 0 else max(-1.0, min(1.0, v / vmax))
    if t >= 0:
        r, g, b = 255, int(round(255 * (1 - t))), int(round(255 * (1 - t)))
    else:
        r, g, b = int(round(255 * (1 + t))), int(round(255 * (1 + t))), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(title: str, row_labels: Sequence[str], col_labels: Sequence[str],
            values: Sequence[Sequence[float]]) -> str:
    """Rows x columns grid with a diverging scale centred at zero."""
    cell_w, cell_h, left, top = 90, 20, 300, 60
    vmax = max((abs(v) for row in values for v in row), default=0.0)
    W = left + cell_w * len(col_labels) + 20
    H = top + cell_h * len(row_labels) + 40
    out = _header(W, H)
    out.append(f'<text x="10" y="20" font-size="13">{escape(title)}</text>')
    for j, c in enumerate(col_labels):
        out.append(f'<text x="{left + cell_w * j + cell_w / 2}" y="{top - 8}" '
                   f'text-anchor="middle">{escape(c)}</text>')
    for i, (r, row) in enumerate(zip(row_labels, values)):
        y = top + cell_h * i
        out.append(f'<text x="{left - 6}" y="{y + 14}" text-anchor="end">{escape(r)}</text>')
        for j, v in enumerate(row):
            x = left + cell_w * j
            out.append(f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                       f'fill="{_diverging(v, vmax)}" stroke="white"/>')
            out.append(f'<text x="{x + cell_w / 2}" y="{y + 14}" text-anchor="middle">{v:+.3f}</text>')
    out.append(f'<text x="10" y="{H - 12}">scale: blue &lt; 0 &lt; red, |max| = {vmax:.3f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
