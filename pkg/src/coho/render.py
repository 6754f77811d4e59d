"""SVG rendering of city layouts: block outlines + height-colored buildings."""

from __future__ import annotations

import numpy as np

from .citygraph import CityGraph


def _height_color(h: float, h_max: float) -> str:
    t = min(1.0, max(0.0, h / max(1e-9, h_max)))
    r = int(40 + 215 * t)
    g = int(90 + 60 * (1 - t))
    b = int(200 * (1 - t) + 30)
    return f"rgb({r},{g},{b})"


def render_svg(g: CityGraph, width: int = 1000) -> str:
    pts = np.concatenate([n.contour.vertices for n in g.nodes]) \
        if g.nodes else np.zeros((1, 2))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    scale = width / span[0]
    height = int(span[1] * scale) + 20
    h_max = max([b.height for n in g.nodes for b in n.buildings], default=1.0)

    def tx(p):
        # flip y so north is up
        return ((p[0] - lo[0]) * scale + 10,
                (hi[1] - p[1]) * scale + 10)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 20}" '
        f'height="{height}" viewBox="0 0 {width + 20} {height}">',
        '<rect width="100%" height="100%" fill="#f7f6f2"/>',
    ]
    for node in g.nodes:
        ring = " ".join(f"{x:.2f},{y:.2f}"
                        for x, y in (tx(p) for p in node.contour.vertices))
        parts.append(f'<polygon points="{ring}" fill="#e8e6df" '
                     'stroke="#9a968c" stroke-width="1"/>')
    for node in g.nodes:
        for b in node.buildings:
            ring = " ".join(f"{x:.2f},{y:.2f}"
                            for x, y in (tx(p) for p in b.footprint.vertices))
            parts.append(f'<polygon points="{ring}" '
                         f'fill="{_height_color(b.height, h_max)}" '
                         'stroke="#333" stroke-width="0.4"/>')
    parts.append("</svg>")
    return "\n".join(parts)
