"""City graph construction: GeoJSON ingestion, source merging, adjacency,
shape features, community sampling, and JSON persistence.

Coordinates are kept in a local meter plane.  WGS84 inputs are projected
equirectangularly about the city centroid latitude; distortion is
negligible at city scale.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometry, ParseError, ValidationError
from .geometry import (Polygon, convex_hull, intersection_area,
                       oriented_bounding_frame, point_to_polygon_distance,
                       points_in_polygon, polygon_area, polygon_centroid,
                       polygon_min_distance)

log = logging.getLogger(__name__)

GRAPH_FORMAT_VERSION = 1
EARTH_RADIUS_M = 6371000.0


@dataclass
class ShapeFeatures:
    aspect_ratio: float      # long/short extent of the oriented frame, >= 1
    block_area: float        # m^2
    convexity: float         # area / hull area, in (0, 1]
    centroid_distance: float  # meters from the city centroid

    def as_array(self) -> np.ndarray:
        return np.array([self.aspect_ratio, self.block_area,
                         self.convexity, self.centroid_distance], np.float64)


@dataclass
class Building:
    footprint: Polygon
    height: float
    source: str = "osm"


@dataclass
class BlockNode:
    block_id: str
    contour: Polygon
    buildings: list[Building] = field(default_factory=list)
    shape_features: ShapeFeatures | None = None
    layout_code: np.ndarray | None = None  # int indices, length D_q
    split: str = "train"


@dataclass
class Edge:
    i: int
    j: int
    distance: float


@dataclass
class CityGraph:
    city_id: str
    nodes: list[BlockNode]
    edges: list[Edge]
    centroid: tuple[float, float]
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def variable_count(self, code_dim: int = 512) -> int:
        return (code_dim + 4) * self.num_nodes + self.num_edges

    def neighbor_lists(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in self.nodes]
        for e in self.edges:
            adj[e.i].append(e.j)
            adj[e.j].append(e.i)
        return adj

    def node_centroids(self) -> np.ndarray:
        return np.array([polygon_centroid(n.contour) for n in self.nodes])


@dataclass
class IngestConfig:
    epsilon: float = 25.0       # max contour gap (m) for adjacency
    k_max: int = 8              # neighbor cap per node
    crs: str = "local-meters"   # or "wgs84"
    bounds: tuple | None = None  # (minx, miny, maxx, maxy) validation box
    iou_threshold: float = 0.3  # cross-source "highly overlapped" cutoff
    default_height: float = 6.0  # fallback when a block has no height data
    height_jitter: float = 0.1  # +-10% around block mean for missing heights
    split_fractions: tuple = (0.7, 0.2, 0.1)
    seed: int = 0


# ---------------------------------------------------------------------------
# source merging


def _overlap_clusters(set_a: list[Building], set_b: list[Building],
                      iou_threshold: float):
    """Connected components of the cross-source IoU > threshold graph.

    Returns (clusters, lonely_a, lonely_b); each cluster is (a_idx, b_idx).
    """
    pairs = []
    for ia, ba in enumerate(set_a):
        area_a = polygon_area(ba.footprint)
        for ib, bb in enumerate(set_b):
            inter = intersection_area(ba.footprint, bb.footprint)
            if inter <= 0:
                continue
            union = area_a + polygon_area(bb.footprint) - inter
            if union > 0 and inter / union > iou_threshold:
                pairs.append((ia, ib))
    parent: dict = {}

    def find(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    for ia, ib in pairs:
        ra, rb = find(("a", ia)), find(("b", ib))
        if ra != rb:
            parent[ra] = rb
    groups: dict = {}
    for ia, ib in pairs:
        groups.setdefault(find(("a", ia)), [set(), set()])
        root = find(("a", ia))
        groups[root][0].add(ia)
        groups[root][1].add(ib)
    in_a = {ia for g in groups.values() for ia in g[0]}
    in_b = {ib for g in groups.values() for ib in g[1]}
    lonely_a = [i for i in range(len(set_a)) if i not in in_a]
    lonely_b = [i for i in range(len(set_b)) if i not in in_b]
    return list(groups.values()), lonely_a, lonely_b


def merge_building_sources(primary_set: list[Building],
                           secondary_set: list[Building],
                           block: Polygon,
                           iou_threshold: float = 0.3,
                           default_height: float = 6.0,
                           height_jitter: float = 0.1,
                           rng: np.random.Generator | None = None) -> list[Building]:
    """Composite two candidate building sets for one block.

    Non-overlapping buildings from both sets survive.  Where the sets are
    mutually overlapped (cross-source IoU above threshold), the source
    contributing more buildings to that region wins.  Missing heights fall
    back to the block mean with a small uniform jitter.
    """
    rng = rng or np.random.default_rng(0)
    clusters, lonely_a, lonely_b = _overlap_clusters(
        primary_set, secondary_set, iou_threshold)
    kept: list[Building] = [primary_set[i] for i in lonely_a]
    kept += [secondary_set[i] for i in lonely_b]
    for a_idx, b_idx in clusters:
        if len(b_idx) > len(a_idx):
            kept += [secondary_set[i] for i in sorted(b_idx)]
        else:
            kept += [primary_set[i] for i in sorted(a_idx)]

    known = [b.height for b in kept if b.height is not None and b.height > 0]
    mean_h = float(np.mean(known)) if known else default_height
    out = []
    for b in kept:
        h = b.height
        if h is None or h <= 0:
            h = mean_h * (1.0 + rng.uniform(-height_jitter, height_jitter))
        out.append(Building(b.footprint, float(h), b.source))
    return out


# ---------------------------------------------------------------------------
# adjacency / features / subgraphs


def build_adjacency(nodes: list[BlockNode], epsilon: float,
                    k_max: int) -> list[Edge]:
    """Edges between blocks whose contours come within `epsilon` meters,
    truncated to each node's `k_max` nearest such neighbors (union rule
    keeps the result symmetric).  Edge distance is the centroid distance."""
    n = len(nodes)
    if n == 0:
        return []
    boxes = np.array([[*node.contour.vertices.min(axis=0),
                       *node.contour.vertices.max(axis=0)] for node in nodes])
    centroids = np.array([polygon_centroid(node.contour) for node in nodes])
    gaps: dict[tuple, float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            if (boxes[i, 0] - epsilon > boxes[j, 2]
                    or boxes[j, 0] - epsilon > boxes[i, 2]
                    or boxes[i, 1] - epsilon > boxes[j, 3]
                    or boxes[j, 1] - epsilon > boxes[i, 3]):
                continue
            gap = polygon_min_distance(nodes[i].contour, nodes[j].contour)
            if gap <= epsilon:
                gaps[(i, j)] = gap
    by_node: list[list[tuple]] = [[] for _ in range(n)]
    for (i, j), gap in gaps.items():
        by_node[i].append((gap, j))
        by_node[j].append((gap, i))
    selected = set()
    for i in range(n):
        for gap, j in sorted(by_node[i])[:k_max]:
            selected.add((min(i, j), max(i, j)))
    edges = []
    for i, j in sorted(selected):
        dist = float(np.linalg.norm(centroids[i] - centroids[j]))
        edges.append(Edge(i, j, dist))
    return edges


def block_shape_features(block: BlockNode,
                         city_centroid) -> ShapeFeatures:
    frame = oriented_bounding_frame(block.contour)
    area = polygon_area(block.contour)
    hull_area = polygon_area(convex_hull(block.contour))
    centroid = polygon_centroid(block.contour)
    return ShapeFeatures(
        aspect_ratio=frame.extent[0] / frame.extent[1],
        block_area=area,
        convexity=min(1.0, area / hull_area),
        centroid_distance=float(np.linalg.norm(centroid - np.asarray(city_centroid))),
    )


def sample_community_subgraph(g: CityGraph, center: int,
                              radius: float) -> CityGraph:
    """Induced subgraph on nodes within `radius` of the center centroid."""
    centroids = g.node_centroids()
    d = np.linalg.norm(centroids - centroids[center], axis=1)
    keep = np.where(d <= radius)[0]
    remap = {int(old): new for new, old in enumerate(keep)}
    nodes = [g.nodes[i] for i in keep]
    edges = [Edge(remap[e.i], remap[e.j], e.distance)
             for e in g.edges if e.i in remap and e.j in remap]
    return CityGraph(g.city_id, nodes, edges, g.centroid, g.seed,
                     dict(g.meta, parent_center=int(center), radius=float(radius)))


def assign_splits(nodes: list[BlockNode], fractions=(0.7, 0.2, 0.1),
                  seed: int = 0):
    order = np.random.default_rng(seed).permutation(len(nodes))
    n_train = int(round(fractions[0] * len(nodes)))
    n_val = int(round(fractions[1] * len(nodes)))
    for rank, idx in enumerate(order):
        if rank < n_train:
            nodes[idx].split = "train"
        elif rank < n_train + n_val:
            nodes[idx].split = "val"
        else:
            nodes[idx].split = "test"


# ---------------------------------------------------------------------------
# ingestion


def _project_ring(coords, origin_lon, origin_lat):
    lat0 = math.radians(origin_lat)
    out = []
    for lon, lat in coords:
        x = EARTH_RADIUS_M * math.cos(lat0) * math.radians(lon - origin_lon)
        y = EARTH_RADIUS_M * math.radians(lat - origin_lat)
        out.append((x, y))
    return out


def _load_feature_collection(path):
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if data.get("type") != "FeatureCollection" or "features" not in data:
        raise ParseError(f"{path}: not a GeoJSON FeatureCollection")
    return data["features"]


def _feature_ring(feat, idx, path):
    geom = feat.get("geometry") or {}
    if geom.get("type") != "Polygon" or not geom.get("coordinates"):
        raise ParseError(f"{path}: feature {idx} is not a Polygon")
    return geom["coordinates"][0]


def ingest_city(blocks_path, buildings_path, config: IngestConfig,
                city_id: str = "city") -> CityGraph:
    """Parse, validate, merge, and assemble a CityGraph.  Deterministic."""
    rng = np.random.default_rng(config.seed)
    block_feats = _load_feature_collection(blocks_path)
    building_feats = _load_feature_collection(buildings_path)

    # optional projection needs the raw centroid first
    origin = None
    if config.crs == "wgs84":
        all_pts = [pt for f in block_feats
                   for pt in _feature_ring(f, 0, blocks_path)]
        arr = np.asarray(all_pts, dtype=np.float64)
        origin = (float(arr[:, 0].mean()), float(arr[:, 1].mean()))

    def to_plane(ring):
        if origin is not None:
            return _project_ring(ring, *origin)
        return ring

    def check_bounds(ring, what):
        if config.bounds is None:
            return
        arr = np.asarray(ring, dtype=np.float64)
        minx, miny, maxx, maxy = config.bounds
        if (arr[:, 0].min() < minx or arr[:, 0].max() > maxx
                or arr[:, 1].min() < miny or arr[:, 1].max() > maxy):
            raise ValidationError(f"{what}: coordinate outside declared bounds")

    nodes: list[BlockNode] = []
    index_by_id: dict[str, int] = {}
    skipped_blocks = 0
    for idx, feat in enumerate(block_feats):
        props = feat.get("properties") or {}
        block_id = props.get("block_id")
        if block_id is None:
            raise ParseError(f"{blocks_path}: feature {idx} missing block_id")
        ring = to_plane(_feature_ring(feat, idx, blocks_path))
        check_bounds(ring, f"block {block_id}")
        try:
            contour = Polygon(ring)
        except DegenerateGeometry as exc:
            log.warning("skipping block %s: %s", block_id, exc)
            skipped_blocks += 1
            continue
        index_by_id[str(block_id)] = len(nodes)
        nodes.append(BlockNode(str(block_id), contour))

    per_block: dict[int, dict[str, list[Building]]] = {}
    dropped_buildings = 0
    for idx, feat in enumerate(building_feats):
        props = feat.get("properties") or {}
        block_id = str(props.get("block_id"))
        source = props.get("source", "osm")
        height = props.get("height_m")
        ring = to_plane(_feature_ring(feat, idx, buildings_path))
        check_bounds(ring, f"building {idx}")
        if block_id not in index_by_id:
            dropped_buildings += 1
            continue
        node_idx = index_by_id[block_id]
        try:
            footprint = Polygon(ring)
        except DegenerateGeometry as exc:
            log.warning("skipping building %d: %s", idx, exc)
            dropped_buildings += 1
            continue
        c = polygon_centroid(footprint)
        contour = nodes[node_idx].contour
        inside = bool(points_in_polygon(c[None, :], contour)[0])
        if not inside and point_to_polygon_distance(c, contour) > 1.0:
            dropped_buildings += 1
            continue
        per_block.setdefault(node_idx, {"osm": [], "msf": []})
        per_block[node_idx].setdefault(source, [])
        per_block[node_idx][source].append(Building(footprint, height, source))

    for node_idx, by_source in per_block.items():
        nodes[node_idx].buildings = merge_building_sources(
            by_source.get("osm", []), by_source.get("msf", []),
            nodes[node_idx].contour, config.iou_threshold,
            config.default_height, config.height_jitter, rng)

    centroids = np.array([polygon_centroid(n.contour) for n in nodes])
    city_centroid = tuple(centroids.mean(axis=0)) if len(nodes) else (0.0, 0.0)
    for node in nodes:
        node.shape_features = block_shape_features(node, city_centroid)

    edges = build_adjacency(nodes, config.epsilon, config.k_max)
    assign_splits(nodes, config.split_fractions, config.seed)
    g = CityGraph(city_id, nodes, edges,
                  (float(city_centroid[0]), float(city_centroid[1])),
                  config.seed,
                  {"skipped_blocks": skipped_blocks,
                   "dropped_buildings": dropped_buildings})
    if dropped_buildings:
        log.warning("%d buildings dropped (no block / outside contour)",
                    dropped_buildings)
    return g


# ---------------------------------------------------------------------------
# persistence


def _poly_coords(p: Polygon):
    return [[float(x), float(y)] for x, y in p.vertices]


def graph_to_dict(g: CityGraph) -> dict:
    return {
        "format_version": GRAPH_FORMAT_VERSION,
        "city_id": g.city_id,
        "crs": "local-meters",
        "seed": g.seed,
        "centroid": [float(g.centroid[0]), float(g.centroid[1])],
        "meta": g.meta,
        "nodes": [
            {
                "block_id": n.block_id,
                "contour": _poly_coords(n.contour),
                "buildings": [
                    {"footprint": _poly_coords(b.footprint),
                     "height_m": float(b.height), "source": b.source}
                    for b in n.buildings
                ],
                "shape_features": (
                    None if n.shape_features is None else
                    [float(v) for v in n.shape_features.as_array()]),
                "layout_code": (
                    None if n.layout_code is None
                    else [int(v) for v in n.layout_code]),
                "split": n.split,
            }
            for n in g.nodes
        ],
        "edges": [[e.i, e.j, float(e.distance)] for e in g.edges],
    }


def graph_from_dict(data: dict) -> CityGraph:
    if data.get("format_version") != GRAPH_FORMAT_VERSION:
        raise ParseError(f"unsupported graph format {data.get('format_version')}")
    nodes = []
    for nd in data["nodes"]:
        sf = nd.get("shape_features")
        nodes.append(BlockNode(
            block_id=nd["block_id"],
            contour=Polygon(nd["contour"], check_simple=False),
            buildings=[Building(Polygon(b["footprint"], check_simple=False),
                                b["height_m"], b.get("source", "osm"))
                       for b in nd["buildings"]],
            shape_features=None if sf is None else ShapeFeatures(*sf),
            layout_code=(None if nd.get("layout_code") is None
                         else np.asarray(nd["layout_code"], dtype=np.int64)),
            split=nd.get("split", "train"),
        ))
    edges = [Edge(int(i), int(j), float(d)) for i, j, d in data["edges"]]
    return CityGraph(data["city_id"], nodes, edges,
                     tuple(data["centroid"]), data.get("seed", 0),
                     data.get("meta", {}))


def save_graph(g: CityGraph, path):
    with open(path, "w") as f:
        json.dump(graph_to_dict(g), f, sort_keys=True, separators=(",", ":"))


def load_graph(path) -> CityGraph:
    with open(path) as f:
        return graph_from_dict(json.load(f))
