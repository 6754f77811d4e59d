"""Evaluation suite: block layout similarity, community context score,
1D Wasserstein distances over building features, and overlap /
out-of-block / reconstruction percentages.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .citygraph import BlockNode, CityGraph
from .errors import ContractViolation, NoContext
from .geometry import (Polygon, intersection_area, oriented_bounding_frame,
                       polygon_area)

# matching-penalty constants: a half-frame displacement halves a pair's
# weight twice
CP = 2.0
CS = 2.0


@dataclass
class CommunityReport:
    ct_gen: float
    ct_real: float
    cts: float
    wd_5d: float
    wd_count: float
    overlap_gen: float
    overlap_real: float
    out_block_gen: float
    out_block_real: float
    per_node_ct: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "CT_gen": self.ct_gen, "CT_real": self.ct_real, "CTS": self.cts,
            "WD_5D": self.wd_5d, "WD_CO": self.wd_count,
            "Overlap_gen": self.overlap_gen, "Overlap_real": self.overlap_real,
            "O_Blk_gen": self.out_block_gen, "O_Blk_real": self.out_block_real,
        }


# ---------------------------------------------------------------------------
# block layout similarity


def _unit_records(block: BlockNode):
    """Buildings as (center_uv, extent_wh, area) in the block's unit frame."""
    frame = oriented_bounding_frame(block.contour)
    w_f, h_f = frame.extent
    recs = []
    for b in block.buildings:
        local = frame.to_local(b.footprint.vertices)
        lo, hi = local.min(axis=0), local.max(axis=0)
        c = np.array([(lo[0] + hi[0]) / 2 / w_f, (lo[1] + hi[1]) / 2 / h_f])
        e = np.array([(hi[0] - lo[0]) / w_f, (hi[1] - lo[1]) / h_f])
        recs.append((c, e, float(e[0] * e[1])))
    return recs


def layout_sim(a: BlockNode, b: BlockNode) -> float:
    """Greedy matched similarity in [0, 1] over unit-frame buildings.

    Pair weight: min(area_u, area_v) * 2^(-Cp*|dc| - Cs*(|dw|+|dh|));
    similarity is matched weight over the larger total area.  Two empty
    blocks score 1; exactly one empty scores 0.
    """
    ra, rb = _unit_records(a), _unit_records(b)
    if not ra and not rb:
        return 1.0
    if not ra or not rb:
        return 0.0
    weights = np.zeros((len(ra), len(rb)))
    for i, (ca, ea, aa) in enumerate(ra):
        for j, (cb, eb, ab) in enumerate(rb):
            dc = float(np.linalg.norm(ca - cb))
            ds = float(np.abs(ea - eb).sum())
            weights[i, j] = min(aa, ab) * 2.0 ** (-CP * dc - CS * ds)
    total = 0.0
    used_a: set = set()
    used_b: set = set()
    order = np.dstack(np.unravel_index(
        np.argsort(-weights, axis=None), weights.shape))[0]
    for i, j in order:
        if i in used_a or j in used_b:
            continue
        used_a.add(int(i))
        used_b.add(int(j))
        total += weights[i, j]
    denom = max(sum(r[2] for r in ra), sum(r[2] for r in rb))
    return float(total / denom) if denom > 0 else 1.0


def community_ct(g: CityGraph, skip=None) -> tuple[float, list]:
    """Mean over non-isolated nodes of mean neighbor layout similarity."""
    adj = g.neighbor_lists()
    per_node = []
    skip = skip or (lambda n: False)
    for i, node in enumerate(g.nodes):
        if skip(node):
            continue
        neighbors = [j for j in adj[i] if not skip(g.nodes[j])]
        if not neighbors:
            continue
        sims = [layout_sim(node, g.nodes[j]) for j in neighbors]
        per_node.append((i, float(np.mean(sims))))
    if not per_node:
        raise NoContext("graph has no edges between scorable nodes")
    return float(np.mean([v for _, v in per_node])), per_node


def context_score(gen: CityGraph, real: CityGraph, skip=None) -> dict:
    """CTS = CT_gen - CT_real over matching graph structure."""
    if gen.num_nodes != real.num_nodes or gen.num_edges != real.num_edges:
        raise ContractViolation("graphs must share node/edge structure")
    ct_gen, per_gen = community_ct(gen, skip)
    ct_real, _ = community_ct(real, skip)
    return {"CT_gen": ct_gen, "CT_real": ct_real, "CTS": ct_gen - ct_real,
            "per_node": per_gen}


# ---------------------------------------------------------------------------
# Wasserstein distances


def wasserstein_1d(x, y) -> float:
    """W1 between empirical distributions via the quantile coupling."""
    x = np.sort(np.asarray(x, dtype=np.float64))
    y = np.sort(np.asarray(y, dtype=np.float64))
    if len(x) == 0 or len(y) == 0:
        raise ContractViolation("wasserstein_1d requires non-empty samples")
    if len(x) == len(y):
        return float(np.mean(np.abs(x - y)))
    # piecewise quantile integral on the merged CDF breakpoints
    qx = np.arange(1, len(x) + 1) / len(x)
    qy = np.arange(1, len(y) + 1) / len(y)
    qs = np.union1d(qx, qy)
    prev = 0.0
    total = 0.0
    for q in qs:
        ix = min(len(x) - 1, int(np.ceil(q * len(x) - 1e-12)) - 1)
        iy = min(len(y) - 1, int(np.ceil(q * len(y) - 1e-12)) - 1)
        total += (q - prev) * abs(x[ix] - y[iy])
        prev = q
    return float(total)


def building_features(g: CityGraph, skip=None) -> np.ndarray:
    """Per-building [x, y, length, width, height]; x/y relative to the city
    centroid, length >= width from the footprint's oriented frame."""
    skip = skip or (lambda n: False)
    rows = []
    cx, cy = g.centroid
    for node in g.nodes:
        if skip(node):
            continue
        for b in node.buildings:
            frame = oriented_bounding_frame(b.footprint)
            c = b.footprint.vertices.mean(axis=0)
            rows.append([c[0] - cx, c[1] - cy,
                         frame.extent[0], frame.extent[1], b.height])
    return np.asarray(rows, dtype=np.float64).reshape(-1, 5)


def wd_5d(gen: CityGraph, real: CityGraph, skip=None) -> float:
    """Mean of five per-feature W1 distances, z-scored by real stats."""
    fg = building_features(gen, skip)
    fr = building_features(real, skip)
    if len(fg) == 0 or len(fr) == 0:
        raise ContractViolation("both corpora need at least one building")
    mean = fr.mean(axis=0)
    std = fr.std(axis=0)
    std[std < 1e-9] = 1.0
    zg = (fg - mean) / std
    zr = (fr - mean) / std
    return float(np.mean([wasserstein_1d(zg[:, k], zr[:, k])
                          for k in range(5)]))


def wd_count(gen: CityGraph, real: CityGraph, skip=None) -> float:
    """W1 between per-block building-count distributions."""
    skip = skip or (lambda n: False)
    cg = [len(n.buildings) for n in gen.nodes if not skip(n)]
    cr = [len(n.buildings) for n in real.nodes if not skip(n)]
    if not cg or not cr:
        raise ContractViolation("both corpora need at least one block")
    return wasserstein_1d(cg, cr)


# ---------------------------------------------------------------------------
# overlap / containment percentages


def overlap_pct(blocks: list[BlockNode]) -> float:
    """Intra-block pairwise overlap area over total building area, x100."""
    total_area = 0.0
    overlap = 0.0
    for block in blocks:
        polys = [b.footprint for b in block.buildings]
        areas = [polygon_area(p) for p in polys]
        total_area += sum(areas)
        for i in range(len(polys)):
            for j in range(i + 1, len(polys)):
                overlap += intersection_area(polys[i], polys[j])
    if total_area <= 0:
        return 0.0
    return 100.0 * overlap / total_area


def out_block_pct(blocks: list[BlockNode]) -> float:
    """Building area protruding outside its block contour, x100."""
    total_area = 0.0
    outside = 0.0
    for block in blocks:
        for b in block.buildings:
            area = polygon_area(b.footprint)
            total_area += area
            outside += max(0.0, area - intersection_area(b.footprint,
                                                         block.contour))
    if total_area <= 0:
        return 0.0
    return 100.0 * outside / total_area


# ---------------------------------------------------------------------------
# paired reconstruction errors


def _greedy_matching(ra, rb):
    weights = np.zeros((len(ra), len(rb)))
    for i, (ca, ea, aa) in enumerate(ra):
        for j, (cb, eb, ab) in enumerate(rb):
            dc = float(np.linalg.norm(ca - cb))
            ds = float(np.abs(ea - eb).sum())
            weights[i, j] = min(aa, ab) * 2.0 ** (-CP * dc - CS * ds)
    pairs = []
    used_a: set = set()
    used_b: set = set()
    order = np.dstack(np.unravel_index(
        np.argsort(-weights, axis=None), weights.shape))[0]
    for i, j in order:
        if i in used_a or j in used_b:
            continue
        used_a.add(int(i))
        used_b.add(int(j))
        pairs.append((int(i), int(j)))
    return pairs


def reconstruction_errors(pred_blocks: list[BlockNode],
                          true_blocks: list[BlockNode],
                          h_ref: float = 1.0) -> dict:
    """Pos-E, Geom-E, Ct-E, Cov-E (all percent) over paired blocks.

    Matching reuses the layout-similarity greedy matcher in unit frames;
    Pos-E normalizes by the block diagonal, Geom-E by the frame scale.
    """
    pos, geom, cnt, cov = [], [], [], []
    for pred, true in zip(pred_blocks, true_blocks):
        frame = oriented_bounding_frame(true.contour)
        diag = float(np.hypot(*frame.extent))
        scale = max(frame.extent)
        rp = _unit_records_with_height(pred, h_ref)
        rt = _unit_records_with_height(true, h_ref)
        n_true = len(rt)
        n_pred = len(rp)
        if n_true > 0:
            cnt.append(100.0 * abs(n_pred - n_true) / n_true)
        else:
            cnt.append(100.0 * n_pred)
        block_area = polygon_area(true.contour)
        cov_pred = sum(polygon_area(b.footprint) for b in pred.buildings)
        cov_true = sum(polygon_area(b.footprint) for b in true.buildings)
        cov.append(100.0 * abs(cov_pred - cov_true) / block_area)
        if n_true == 0 or n_pred == 0:
            continue
        w_f, h_f = frame.extent
        for i, j in _greedy_matching([r[:3] for r in rp],
                                     [r[:3] for r in rt]):
            cp, ep, _, hp = rp[i]
            ct, et, _, ht = rt[j]
            d_world = np.hypot((cp[0] - ct[0]) * w_f, (cp[1] - ct[1]) * h_f)
            pos.append(100.0 * d_world / diag)
            dl = abs(ep[0] - et[0]) * w_f
            dw = abs(ep[1] - et[1]) * h_f
            dh = abs(hp - ht)
            geom.append(100.0 * (dl + dw + dh) / scale)
    return {
        "Pos-E": float(np.mean(pos)) if pos else 0.0,
        "Geom-E": float(np.mean(geom)) if geom else 0.0,
        "Ct-E": float(np.mean(cnt)) if cnt else 0.0,
        "Cov-E": float(np.mean(cov)) if cov else 0.0,
    }


def _unit_records_with_height(block: BlockNode, h_ref: float):
    frame = oriented_bounding_frame(block.contour)
    w_f, h_f = frame.extent
    recs = []
    for b in block.buildings:
        local = frame.to_local(b.footprint.vertices)
        lo, hi = local.min(axis=0), local.max(axis=0)
        c = np.array([(lo[0] + hi[0]) / 2 / w_f, (lo[1] + hi[1]) / 2 / h_f])
        e = np.array([(hi[0] - lo[0]) / w_f, (hi[1] - lo[1]) / h_f])
        recs.append((c, e, float(e[0] * e[1]), float(b.height)))
    return recs


# ---------------------------------------------------------------------------
# report assembly


def community_report(gen: CityGraph, real: CityGraph, skip=None) -> CommunityReport:
    cts = context_score(gen, real, skip)
    skip = skip or (lambda n: False)
    gen_blocks = [n for n in gen.nodes if not skip(n)]
    real_blocks = [n for n in real.nodes if not skip(n)]
    return CommunityReport(
        ct_gen=cts["CT_gen"], ct_real=cts["CT_real"], cts=cts["CTS"],
        wd_5d=wd_5d(gen, real, skip), wd_count=wd_count(gen, real, skip),
        overlap_gen=overlap_pct(gen_blocks), overlap_real=overlap_pct(real_blocks),
        out_block_gen=out_block_pct(gen_blocks),
        out_block_real=out_block_pct(real_blocks),
        per_node_ct=cts["per_node"],
    )
