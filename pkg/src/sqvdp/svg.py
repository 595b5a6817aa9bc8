"""Minimal deterministic SVG previews. Data files stay the ground truth."""
from __future__ import annotations

import numpy as np

WIDTH = 420
HEIGHT = 320
MARGIN = 40
STABILITY_COLOURS = {"stable": "#1a9850", "saddle": "#000000", "unstable": "#d73027", "marginal": "#7f7f7f"}
LINE_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _rgb(v: float) -> str:
    """Fixed diverging map on [-1, 1]: blue, white, red."""
    v = float(np.clip(v, -1.0, 1.0))
    if v >= 0:
        r, g, b = 255, int(round(255 * (1 - v))), int(round(255 * (1 - v)))
    else:
        r, g, b = int(round(255 * (1 + v))), int(round(255 * (1 + v))), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def _doc(body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    return "\n".join([head, f"<title>{title}</title>", *body, "</svg>"]) + "\n"


def heatmap(values: np.ndarray, title: str = "", max_cells: int = 101) -> str:
    """Heatmap of a 2-D array (row 0 at the bottom), scaled by max |value|."""
    values = np.asarray(values, dtype=float)
    stride = max(1, int(np.ceil(max(values.shape) / max_cells)))
    v = values[::stride, ::stride]
    scale = float(np.max(np.abs(v))) or 1.0
    ny, nx = v.shape
    cw = (WIDTH - 2 * MARGIN) / nx
    ch = (HEIGHT - 2 * MARGIN) / ny
    body = []
    for i in range(ny):
        y = HEIGHT - MARGIN - (i + 1) * ch
        for j in range(nx):
            body.append(f'<rect x="{MARGIN + j * cw:.3f}" y="{y:.3f}" width="{cw:.3f}" '
                        f'height="{ch:.3f}" fill="{_rgb(v[i, j] / scale)}"/>')
    return _doc(body, title)


def lines(series, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Polylines; ``series`` is a list of (x, y, colour or None)."""
    xs = np.concatenate([np.asarray(s[0], float) for s in series]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(s[1], float) for s in series]) if series else np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def px(x):
        return MARGIN + (np.asarray(x) - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(y):
        return HEIGHT - MARGIN - (np.asarray(y) - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    body = [f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
            f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#888888"/>']
    for k, (x, y, colour) in enumerate(series):
        colour = colour or LINE_COLOURS[k % len(LINE_COLOURS)]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(x), py(y)))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.2"/>')
    body.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle" '
                f'font-size="11">{xlabel} [{x0:.3g}, {x1:.3g}]</text>')
    body.append(f'<text x="8" y="{MARGIN - 12}" font-size="11">{ylabel} [{y0:.3g}, {y1:.3g}]</text>')
    return _doc(body, title)
