"""Standalone SVG heatmaps of real-valued fields on rectangular grids."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

# blue-white-red anchors for a diverging linear map
_ANCHORS = np.array([[0.23, 0.30, 0.75], [0.87, 0.87, 0.87], [0.71, 0.02, 0.15]])

CELL_PX = 24
MARGIN = 40
BAR_W = 16


def _color(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    if t <= 0.5:
        c = _ANCHORS[0] + (_ANCHORS[1] - _ANCHORS[0]) * (t / 0.5)
    else:
        c = _ANCHORS[1] + (_ANCHORS[2] - _ANCHORS[1]) * ((t - 0.5) / 0.5)
    r, g, b = (int(round(255 * v)) for v in c)
    return f"#{r:02x}{g:02x}{b:02x}"


def grid_from_points(points, values):
    """Arrange scattered values on their rectangular lattice.

    Returns ``(xs, ys, table)`` with ``table[j, i]`` the value at ``(xs[i], ys[j])``,
    ``xs`` and ``ys`` ascending.  Lattice sites without a value stay NaN.
    """
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(values, dtype=float).ravel()
    if pts.size == 0 or vals.size == 0:
        raise ValueError("empty grid")
    if len(pts) != len(vals):
        raise ValueError("one value per point is required")
    xs = np.unique(np.round(pts[:, 0], 12))
    ys = np.unique(np.round(pts[:, 1], 12))
    table = np.full((len(ys), len(xs)), np.nan)
    ix = np.searchsorted(xs, np.round(pts[:, 0], 12))
    iy = np.searchsorted(ys, np.round(pts[:, 1], 12))
    table[iy, ix] = vals
    return xs, ys, table


def render_heatmap(points, values, markers=None, title: str = "") -> str:
    """SVG document for values on a rectangular lattice of points, y pointing up.

    Parameters
    ----------
    points : (n, 2) array
        Lattice coordinates in metres.
    values : (n,) array
        Real field values.
    markers : (m, 2) array, optional
        Positions drawn as black rings, e.g. the microphones.
    """
    xs, ys, table = grid_from_points(points, values)
    finite = table[np.isfinite(table)]
    if finite.size == 0:
        raise ValueError("grid has no finite values")
    vmin, vmax = float(finite.min()), float(finite.max())
    nx, ny = len(xs), len(ys)
    w = 2 * MARGIN + nx * CELL_PX + 3 * BAR_W + 60
    h = 2 * MARGIN + ny * CELL_PX
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<title>{escape(title)}</title>',
        '<g id="cells">',
    ]

    def norm(v):
        return 0.5 if vmax == vmin else (v - vmin) / (vmax - vmin)

    for j in range(ny):
        top = MARGIN + (ny - 1 - j) * CELL_PX  # row of largest y at the top
        for i in range(nx):
            v = table[j, i]
            if not np.isfinite(v):
                continue
            out.append(f'<rect x="{MARGIN + i * CELL_PX}" y="{top}" width="{CELL_PX}" height="{CELL_PX}" '
                       f'fill="{_color(norm(v))}" data-x="{xs[i]:.6g}" data-y="{ys[j]:.6g}"/>')
    out.append("</g>")

    def px(x, y):
        fx = 0.5 if nx == 1 else (x - xs[0]) / (xs[-1] - xs[0])
        fy = 0.5 if ny == 1 else (y - ys[0]) / (ys[-1] - ys[0])
        return (MARGIN + CELL_PX / 2 + fx * (nx - 1) * CELL_PX,
                MARGIN + CELL_PX / 2 + (1 - fy) * (ny - 1) * CELL_PX)

    if markers is not None and len(markers):
        out.append('<g id="markers" fill="none" stroke="black" stroke-width="1.5">')
        for x, y in np.asarray(markers, dtype=float):
            cx, cy = px(x, y)
            out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{CELL_PX / 4:.1f}"/>')
        out.append("</g>")

    bx = MARGIN + nx * CELL_PX + BAR_W
    steps = 32
    seg = ny * CELL_PX / steps
    out.append('<g id="colorbar">')
    for s in range(steps):
        t = 1 - (s + 0.5) / steps
        out.append(f'<rect x="{bx}" y="{MARGIN + s * seg:.3f}" width="{BAR_W}" height="{seg:.3f}" '
                   f'fill="{_color(t if vmax > vmin else 0.5)}"/>')
    out.append(f'<text x="{bx + BAR_W + 4}" y="{MARGIN + 10}" font-size="10" class="vmax">{vmax:.4g}</text>')
    out.append(f'<text x="{bx + BAR_W + 4}" y="{MARGIN + ny * CELL_PX}" font-size="10" class="vmin">{vmin:.4g}</text>')
    out.append("</g>")
    if title:
        out.append(f'<text x="{MARGIN}" y="{MARGIN / 2}" font-size="12">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
