"""Static SVG figures (width heatmaps, coverage curves) without a plotting stack.

Output bytes are a pure function of the inputs: fixed layout constants, fixed
float formatting, no timestamps. Heatmap grid cells are ``<rect>`` elements
(exactly nx*ny of them); the colorbar is a gradient-filled ``<path>`` so the
rect count stays the cell count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["render_width_map", "render_coverage_curve"]

# 5-stop blue->green->yellow sequential map, linearly interpolated.
_STOPS = (
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _color(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    pos = t * (len(_STOPS) - 1)
    i = min(int(pos), len(_STOPS) - 2)
    frac = pos - i
    r, g, b = (
        round(a + (b_ - a) * frac) for a, b_ in zip(_STOPS[i], _STOPS[i + 1])
    )
    return f"rgb({r},{g},{b})"


def render_width_map(values: np.ndarray, title: str) -> str:
    """Heatmap of a 2D (nx, ny) value grid with colorbar and min/max labels."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"expected a 2D grid, got shape {values.shape}")
    nx, ny = values.shape
    finite = values[np.isfinite(values)]
    if finite.size:
        vmin, vmax = float(finite.min()), float(finite.max())
    else:
        vmin = vmax = 0.0
    span = vmax - vmin

    cell = max(2, 480 // max(nx, ny))
    left, top = 20, 40
    grid_w, grid_h = ny * cell, nx * cell
    bar_x = left + grid_w + 30
    bar_w, bar_h = 18, grid_h
    width = bar_x + bar_w + 90
    height = top + grid_h + 30

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n',
        f'<text x="{left}" y="24" font-family="sans-serif" font-size="14">{title}</text>\n',
        "<defs>\n"
        '<linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">\n',
    ]
    for i, (r, g, b) in enumerate(_STOPS):
        off = i / (len(_STOPS) - 1)
        parts.append(f'<stop offset="{_fmt(off)}" stop-color="rgb({r},{g},{b})"/>\n')
    parts.append("</linearGradient>\n</defs>\n")

    for ix in range(nx):
        for iy in range(ny):
            v = values[ix, iy]
            if not np.isfinite(v):
                fill = "rgb(255,255,255)"
            else:
                t = 0.5 if span == 0.0 else (float(v) - vmin) / span
                fill = _color(t)
            parts.append(
                f'<rect class="cell" x="{left + iy * cell}" y="{top + ix * cell}" '
                f'width="{cell}" height="{cell}" fill="{fill}">'
                f"<title>x={ix} y={iy} value={_fmt(float(v))}</title></rect>\n"
            )

    # Colorbar: one gradient-filled path plus min/max annotations.
    parts.append(
        f'<path d="M {bar_x} {top} h {bar_w} v {bar_h} h -{bar_w} Z" '
        'fill="url(#scale)" stroke="black" stroke-width="1"/>\n'
    )
    parts.append(
        f'<text x="{bar_x + bar_w + 6}" y="{top + 10}" font-family="sans-serif" '
        f'font-size="12">max {_fmt(vmax)}</text>\n'
    )
    parts.append(
        f'<text x="{bar_x + bar_w + 6}" y="{top + bar_h}" font-family="sans-serif" '
        f'font-size="12">min {_fmt(vmin)}</text>\n'
    )
    parts.append("</svg>\n")
    return "".join(parts)


def render_coverage_curve(points: list[tuple[float, float]], title: str = "Empirical coverage") -> str:
    """Line chart of empirical coverage vs nominal 1-alpha with the diagonal."""
    if not points:
        raise ValueError("need at least one curve point")
    size, margin = 420, 50
    plot = size - 2 * margin

    def px(nominal: float) -> float:
        return margin + nominal * plot

    def py(coverage: float) -> float:
        return size - margin - coverage * plot

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">\n',
        f'<text x="{margin}" y="24" font-family="sans-serif" font-size="14">{title}</text>\n',
        f'<rect x="{margin}" y="{margin}" width="{plot}" height="{plot}" '
        'fill="none" stroke="black" stroke-width="1"/>\n',
        f'<line class="diagonal" x1="{_fmt(px(0.0))}" y1="{_fmt(py(0.0))}" '
        f'x2="{_fmt(px(1.0))}" y2="{_fmt(py(1.0))}" '
        'stroke="gray" stroke-dasharray="4,3" stroke-width="1"/>\n',
    ]
    for tick in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
        parts.append(
            f'<text x="{_fmt(px(tick) - 8)}" y="{size - margin + 16}" '
            f'font-family="sans-serif" font-size="10">{_fmt(tick)}</text>\n'
        )
        parts.append(
            f'<text x="{margin - 30}" y="{_fmt(py(tick) + 3)}" '
            f'font-family="sans-serif" font-size="10">{_fmt(tick)}</text>\n'
        )
    coords = " ".join(f"{_fmt(px(n))},{_fmt(py(c))}" for n, c in points)
    parts.append(
        f'<polyline class="coverage" points="{coords}" fill="none" '
        'stroke="rgb(33,145,140)" stroke-width="2"/>\n'
    )
    for n, c in points:
        parts.append(
            f'<circle cx="{_fmt(px(n))}" cy="{_fmt(py(c))}" r="3" '
            f'fill="rgb(33,145,140)"><title>nominal={_fmt(n)} '
            f"empirical={_fmt(c)}</title></circle>\n"
        )
    parts.append(
        f'<text x="{size // 2 - 40}" y="{size - 12}" font-family="sans-serif" '
        'font-size="12">nominal coverage (1-alpha)</text>\n'
    )
    parts.append("</svg>\n")
    return "".join(parts)
