"""Deterministic synthetic multi-style city corpus.

The city is a grid of well-separated communities; each community is a 3x3
street grid of blocks sharing one of three styles (dense grid, sparse
suburban, mixed).  Within a community the middle column is widened, and
wide blocks carry a second layout variant, so neighboring blocks are
similar but not identical.  Building layouts are exact per
(community, variant): block shape plus visible neighbors fully determine a
block's layout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

STYLES = ("dense", "suburban", "mixed")

BLOCK_ROWS = 3
COL_WIDTHS = (100.0, 140.0, 100.0)
ROW_HEIGHT = 100.0
STREET = 20.0
COMMUNITY_PITCH = 1400.0  # keeps 500 m subgraphs inside one community

# per-style (variant A, variant B) templates: list of (u, v, w, h)
TEMPLATES = {
    "dense": (
        [(u, v, 0.22, 0.22) for v in (0.2, 0.5, 0.8) for u in (0.2, 0.5, 0.8)],
        [(0.5, 0.25, 0.6, 0.2), (0.5, 0.55, 0.6, 0.2),
         (0.2, 0.85, 0.18, 0.14), (0.8, 0.85, 0.18, 0.14)],
    ),
    "suburban": (
        [(0.3, 0.5, 0.2, 0.2), (0.7, 0.5, 0.2, 0.2)],
        [(0.2, 0.2, 0.13, 0.13), (0.8, 0.2, 0.13, 0.13),
         (0.8, 0.8, 0.13, 0.13), (0.2, 0.8, 0.13, 0.13),
         (0.5, 0.5, 0.2, 0.13)],
    ),
    "mixed": (
        [(0.28, 0.3, 0.34, 0.4), (0.74, 0.72, 0.34, 0.4)],
        [(0.5, 0.42, 0.5, 0.34), (0.18, 0.85, 0.15, 0.12),
         (0.5, 0.85, 0.15, 0.12), (0.82, 0.85, 0.15, 0.12)],
    ),
}

STYLE_HEIGHT = {"dense": 30.0, "suburban": 6.0, "mixed": 15.0}


@dataclass
class ToyConfig:
    communities_x: int = 6
    communities_y: int = 6
    seed: int = 0


def _rect(x0, y0, w, h):
    return [[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]]


def make_toy(cfg: ToyConfig) -> tuple[dict, dict]:
    """Returns (blocks, buildings) GeoJSON FeatureCollections."""
    blocks = []
    buildings = []
    for ci in range(cfg.communities_x):
        for cj in range(cfg.communities_y):
            comm_index = ci * cfg.communities_y + cj
            style = STYLES[comm_index % 3]
            crng = np.random.default_rng(
                np.random.SeedSequence([cfg.seed, comm_index]))
            size_factor = crng.uniform(0.85, 1.15)
            height = STYLE_HEIGHT[style] * crng.uniform(0.8, 1.2)
            ox = ci * COMMUNITY_PITCH
            oy = cj * COMMUNITY_PITCH
            col_x = [ox, ox + COL_WIDTHS[0] + STREET,
                     ox + COL_WIDTHS[0] + COL_WIDTHS[1] + 2 * STREET]
            for col in range(3):
                for row in range(BLOCK_ROWS):
                    bw = COL_WIDTHS[col]
                    bh = ROW_HEIGHT
                    x0 = col_x[col]
                    y0 = oy + row * (ROW_HEIGHT + STREET)
                    block_id = f"c{ci}-{cj}_b{col}-{row}"
                    blocks.append({
                        "type": "Feature",
                        "geometry": {"type": "Polygon",
                                     "coordinates": [_rect(x0, y0, bw, bh)]},
                        "properties": {"block_id": block_id,
                                       "style": style,
                                       "variant": "B" if col == 1 else "A"},
                    })
                    variant = 1 if col == 1 else 0
                    for (u, v, w, h) in TEMPLATES[style][variant]:
                        ew = w * size_factor * bw
                        eh = h * size_factor * bh
                        cx = x0 + u * bw
                        cy = y0 + v * bh
                        buildings.append({
                            "type": "Feature",
                            "geometry": {
                                "type": "Polygon",
                                "coordinates": [_rect(cx - ew / 2, cy - eh / 2,
                                                      ew, eh)],
                            },
                            "properties": {"block_id": block_id,
                                           "height_m": round(height, 6),
                                           "source": "osm"},
                        })
    fc = lambda feats: {"type": "FeatureCollection", "features": feats}
    return fc(blocks), fc(buildings)


def write_toy(cfg: ToyConfig, blocks_path, buildings_path):
    blocks, buildings = make_toy(cfg)
    with open(blocks_path, "w") as f:
        json.dump(blocks, f, sort_keys=True, separators=(",", ":"))
    with open(buildings_path, "w") as f:
        json.dump(buildings, f, sort_keys=True, separators=(",", ":"))
