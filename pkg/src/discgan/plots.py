"""Self-contained SVG charts comparing real and generated columns.

Output bytes depend only on the inputs: coordinates are printed with fixed
precision and no timestamps or random ids are embedded.
"""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = {"left": 60, "right": 20, "top": 40, "bottom": 60}
REAL_COLOR = "#ff7f0e"
GEN_COLOR = "#1f77b4"
MIN_BINS = 10


def sturges_bins(n):
    """Sturges' rule, ``ceil(log2 n) + 1``, but never fewer than 10 bins."""
    if n < 1:
        raise ValueError("need at least one value")
    return max(MIN_BINS, math.ceil(math.log2(n)) + 1)


def _f(x):
    return f"{x:.2f}"


def _frame(title, x_label, y_max, body):
    left, top = MARGIN["left"], MARGIN["top"]
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<text x="{left - 6}" y="{top + 4}" text-anchor="end">{y_max:.3g}</text>',
        f'<text x="{left - 6}" y="{top + plot_h + 4}" text-anchor="end">0</text>',
        f'<text x="{left + plot_w / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(x_label)}</text>',
    ]
    lines += body
    lx = left + plot_w - 150
    lines += [
        f'<rect x="{lx}" y="{top}" width="12" height="12" fill="{REAL_COLOR}" fill-opacity="0.6"/>',
        f'<text x="{lx + 18}" y="{top + 10}">real</text>',
        f'<rect x="{lx + 70}" y="{top}" width="12" height="12" fill="{GEN_COLOR}" fill-opacity="0.6"/>',
        f'<text x="{lx + 88}" y="{top + 10}">generated</text>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def histogram_svg(real, generated, title, x_label=None):
    """Overlaid density histograms on shared bins (count from the larger sample)."""
    real = np.asarray(real, dtype=np.float64)
    generated = np.asarray(generated, dtype=np.float64)
    if real.size == 0 or generated.size == 0:
        raise ValueError("histogram needs two non-empty samples")
    lo = float(min(real.min(), generated.min()))
    hi = float(max(real.max(), generated.max()))
    if hi <= lo:
        hi = lo + 1.0
    bins = sturges_bins(max(real.size, generated.size))
    edges = np.linspace(lo, hi, bins + 1)
    dens = [np.histogram(v, bins=edges)[0] / v.size for v in (real, generated)]
    y_max = max(float(d.max()) for d in dens) or 1.0
    left, top = MARGIN["left"], MARGIN["top"]
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    bw = plot_w / bins
    body = []
    for d, color in zip(dens, (REAL_COLOR, GEN_COLOR)):
        for i, p in enumerate(d):
            h = plot_h * p / y_max
            body.append(f'<rect x="{_f(left + i * bw)}" y="{_f(top + plot_h - h)}" width="{_f(bw)}" '
                        f'height="{_f(h)}" fill="{color}" fill-opacity="0.5"/>')
    for x, v in ((left, lo), (left + plot_w, hi)):
        body.append(f'<text x="{_f(x)}" y="{top + plot_h + 16}" text-anchor="middle">{v:.4g}</text>')
    return _frame(title, x_label or title, y_max, body)


def bar_chart_svg(real, generated, title, x_label=None):
    """Side-by-side category proportions over the union of observed categories."""
    real = np.asarray(real, dtype=str)
    generated = np.asarray(generated, dtype=str)
    if real.size == 0 or generated.size == 0:
        raise ValueError("bar chart needs two non-empty columns")
    cats = np.union1d(real, generated)
    props = [np.array([np.mean(v == c) for c in cats]) for v in (real, generated)]
    y_max = max(float(p.max()) for p in props) or 1.0
    left, top = MARGIN["left"], MARGIN["top"]
    plot_w = WIDTH - MARGIN["left"] - MARGIN["right"]
    plot_h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    slot = plot_w / cats.size
    bw = slot * 0.4
    body = []
    for i, c in enumerate(cats):
        x0 = left + i * slot + slot * 0.1
        for j, (p, color) in enumerate(zip(props, (REAL_COLOR, GEN_COLOR))):
            h = plot_h * p[i] / y_max
            body.append(f'<rect x="{_f(x0 + j * bw)}" y="{_f(top + plot_h - h)}" width="{_f(bw)}" '
                        f'height="{_f(h)}" fill="{color}" fill-opacity="0.6"/>')
        body.append(f'<text x="{_f(x0 + bw)}" y="{top + plot_h + 16}" text-anchor="middle">{escape(c)}</text>')
    return _frame(title, x_label or title, y_max, body)


def column_charts(real_tbl, gen_tbl, schema):
    """``{file name: svg text}``, one chart per schema column in schema order."""
    out = {}
    for i, col in enumerate(schema.columns):
        safe = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in col.name)
        name = f"{i:02d}_{safe}.svg"
        if col.kind == "continuous":
            out[name] = histogram_svg(real_tbl[col.name], gen_tbl[col.name], col.name)
        else:
            out[name] = bar_chart_svg(real_tbl[col.name], gen_tbl[col.name], col.name)
    return out


__all__ = ["bar_chart_svg", "column_charts", "histogram_svg", "sturges_bins"]
