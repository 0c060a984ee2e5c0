"""Text-format visualizations: PGM rasters and SVG vector plots."""

from __future__ import annotations

import numpy as np


def matrix_to_pgm(matrix: np.ndarray, lo: float | None = None,
                  hi: float | None = None) -> str:
    """Grayscale ASCII PGM (P2) of a 2-D matrix, scaled to 0..255."""
    m = np.asarray(matrix, dtype=float)
    lo = float(m.min()) if lo is None else lo
    hi = float(m.max()) if hi is None else hi
    if hi <= lo:
        hi = lo + 1.0
    scaled = np.clip((m - lo) / (hi - lo) * 255.0, 0, 255).astype(int)
    rows, cols = scaled.shape
    lines = ["P2", f"{cols} {rows}", "255"]
    lines.extend(" ".join(str(v) for v in row) for row in scaled)
    return "\n".join(lines) + "\n"


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def _svg_header(width, height):
    return (f'<svg xmlns="http://www.w3.org/2000/svg" '
            f'width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">')


def trajectories_svg(trajectories, movements: dict | None = None,
                     size: int = 600) -> str:
    """Trajectory polylines colored by movement (gray when unclassified)."""
    pts = [p for t in trajectories for p in t.points]
    if not pts:
        return _svg_header(size, size) + "</svg>\n"
    xs = [p[1] for p in pts]
    ys = [p[2] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    span = max(x1 - x0, y1 - y0, 1e-6)
    pad = 20

    def sx(x):
        return pad + (x - x0) / span * (size - 2 * pad)

    def sy(y):
        return size - pad - (y - y0) / span * (size - 2 * pad)

    movement_colors: dict = {}
    parts = [_svg_header(size, size)]
    for traj in trajectories:
        key = None if movements is None else movements.get(traj.track_id)
        if key is None:
            color = "#999999"
        else:
            if key not in movement_colors:
                movement_colors[key] = _PALETTE[len(movement_colors) % len(_PALETTE)]
            color = movement_colors[key]
        coords = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for _, x, y in traj.points)
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def histogram_svg(counts: np.ndarray, bin_edges: np.ndarray,
                  threshold: float | None = None,
                  size: tuple[int, int] = (640, 400)) -> str:
    """Histogram bars with the triangle anchor line and chosen threshold."""
    counts = np.asarray(counts, dtype=float)
    edges = np.asarray(bin_edges, dtype=float)
    w, h = size
    pad = 30
    peak_idx = int(np.argmax(counts)) if counts.size else 0
    peak = counts.max() if counts.size else 1.0
    peak = peak if peak > 0 else 1.0
    x_max = edges[-1] if edges[-1] > 0 else 1.0

    def sx(x):
        return pad + x / x_max * (w - 2 * pad)

    def sy(c):
        return h - pad - c / peak * (h - 2 * pad)

    parts = [_svg_header(w, h)]
    for i, c in enumerate(counts):
        if c <= 0:
            continue
        x = sx(edges[i])
        bw = sx(edges[i + 1]) - x
        y = sy(c)
        parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bw:.1f}" '
                     f'height="{h - pad - y:.1f}" fill="#4682b4"/>')
    # triangle anchor: histogram minimum at range 0 to the peak bin
    px = sx(edges[peak_idx])
    parts.append(f'<line x1="{sx(0):.1f}" y1="{sy(0):.1f}" '
                 f'x2="{px:.1f}" y2="{sy(peak):.1f}" '
                 f'stroke="#d62728" stroke-width="1.5" stroke-dasharray="4 3"/>')
    if threshold is not None:
        tx = sx(threshold)
        parts.append(f'<line x1="{tx:.1f}" y1="{pad}" x2="{tx:.1f}" '
                     f'y2="{h - pad}" stroke="#2ca02c" stroke-width="2"/>')
    parts.append(f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" '
                 f'y2="{h - pad}" stroke="#000" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
