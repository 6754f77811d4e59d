"""Priority-based scheduled iterative generation.

Each iteration predicts codes for every pending node, keeps the most
confident ones under a cumulative acceptance schedule, and finally decodes
accepted codes into world-frame buildings.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from . import gmae as gmae_mod
from .bvae import BvaeConfig, decanonicalize, decode_block
from .citygraph import BlockNode, CityGraph, Edge, block_shape_features
from .errors import ContractViolation
from .geometry import Polygon, oriented_bounding_frame, polygon_centroid
from .quantizer import Codebook, dequantize_code, sample_sigma

SUPER_PREFIX = "super:"


@dataclass
class ScheduleConfig:
    iterations: int = 12         # T
    family: str = "cosine"       # cosine | linear | logarithmic | literal-cosine
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ContractViolation("iterations must be >= 1")
        if self.family not in ("cosine", "linear", "logarithmic",
                               "literal-cosine"):
            raise ContractViolation(f"unknown schedule family {self.family}")


def schedule_fraction(t: int, cfg: ScheduleConfig) -> float:
    """Cumulative acceptance fraction after iteration t (monotone, in [0,1]).

    The default cosine family normalizes the argument so the schedule
    terminates at 1; the literal-cosine family evaluates 1 - cos(t/T)
    verbatim and relies on a forced full acceptance at t = T.
    """
    T = cfg.iterations
    if not 0 <= t <= T:
        raise ContractViolation(f"iteration {t} outside [0, {T}]")
    if t == 0:
        return 0.0
    if cfg.family == "cosine":
        return 1.0 - math.cos(math.pi * t / (2 * T))
    if cfg.family == "literal-cosine":
        return 1.0 if t == T else 1.0 - math.cos(t / T)
    if cfg.family == "linear":
        return t / T
    return math.log(1 + t) / math.log(1 + T)


def node_confidence(logits: np.ndarray) -> float:
    """Mean over code dimensions of the argmax class log-probability.

    Shift-invariant per node; 0 is the saturated maximum.
    """
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logprob = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    return float(logprob.max(axis=-1).mean())


@dataclass
class GenerationState:
    graph: CityGraph
    status: list[str]                  # per node: prior | accepted | pending
    codes: np.ndarray                  # [N, D_q], -1 where pending
    accepted_iteration: np.ndarray     # [N], 0 for priors, -1 pending
    trace: list[dict] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return all(s != "pending" for s in self.status)


def is_super_node(node: BlockNode) -> bool:
    return node.block_id.startswith(SUPER_PREFIX)


@dataclass
class SuperNode:
    style_code: np.ndarray
    attach_to: list[int]
    edge_distance: float = 50.0


def apply_super_node(g: CityGraph, sn: SuperNode, codebook: Codebook) -> CityGraph:
    """Append a styled steering node densely connected to `attach_to`.

    The node's code is fixed (treated as a prior) and it is excluded from
    decoding and metrics.
    """
    code = np.asarray(sn.style_code, dtype=np.int64)
    if code.shape != (codebook.dim,):
        raise ContractViolation("style code dimension mismatch")
    if not sn.attach_to:
        raise ContractViolation("super node must attach to at least one block")
    n = g.num_nodes
    for i in sn.attach_to:
        if not 0 <= i < n:
            raise ContractViolation(f"attach index {i} out of range")
    centroids = g.node_centroids()
    anchor = centroids[np.asarray(sn.attach_to, np.int64)].mean(axis=0)
    half = 10.0
    contour = Polygon([(anchor[0] - half, anchor[1] - half),
                       (anchor[0] + half, anchor[1] - half),
                       (anchor[0] + half, anchor[1] + half),
                       (anchor[0] - half, anchor[1] + half)])
    node = BlockNode(f"{SUPER_PREFIX}{n}", contour, [],
                     layout_code=code.copy(), split="train")
    node.shape_features = block_shape_features(node, g.centroid)
    nodes = list(g.nodes) + [node]
    edges = list(g.edges) + [Edge(i, n, float(sn.edge_distance))
                             for i in sn.attach_to]
    return CityGraph(g.city_id, nodes, edges, g.centroid, g.seed, dict(g.meta))


def generate(g: CityGraph, gmae_params: dict, gmae_cfg, codebook: Codebook,
             bvae_params: dict, bvae_cfg: BvaeConfig,
             schedule: ScheduleConfig, prior_flags,
             decode_buildings: bool = True) -> GenerationState:
    """Run the T-iteration acceptance loop and decode pending blocks.

    prior_flags: [N] bool -- nodes whose existing layout_code is pinned.
    Super nodes are implicit priors.  Deterministic given schedule.seed.
    """
    n = g.num_nodes
    prior = np.asarray(prior_flags, dtype=bool).copy()
    for i, node in enumerate(g.nodes):
        if is_super_node(node):
            prior[i] = True
        if prior[i] and node.layout_code is None:
            raise ContractViolation(f"prior node {node.block_id} has no code")
    codes = np.full((n, codebook.dim), -1, dtype=np.int64)
    for i, node in enumerate(g.nodes):
        if prior[i]:
            codes[i] = node.layout_code
    status = ["prior" if prior[i] else "pending" for i in range(n)]
    accepted_iter = np.where(prior, 0, -1)
    state = GenerationState(g, status, codes, accepted_iter)
    rng = np.random.default_rng(schedule.seed)

    pending = set(np.where(~prior)[0])
    T = schedule.iterations
    for t in range(1, T + 1):
        if not pending:
            break
        mask = np.zeros(n, dtype=bool)
        mask[list(pending)] = True
        logits = gmae_mod.predict_logits(gmae_params, gmae_cfg, g,
                                         np.where(codes < 0, 0, codes), mask)
        beta = schedule_fraction(t, schedule)
        target_total = math.ceil(beta * n)
        current = n - len(pending)
        k = max(1, target_total - current)
        k = min(k, len(pending))
        if t == T:
            k = len(pending)
        ranked = sorted(pending,
                        key=lambda i: (-node_confidence(logits[i]), i))
        chosen = ranked[:k]
        for i in chosen:
            codes[i] = logits[i].argmax(axis=-1)
            status[i] = "accepted"
            accepted_iter[i] = t
            pending.discard(i)
        state.trace.append({
            "t": t,
            "beta": beta,
            "target_total": target_total,
            "accepted": [int(i) for i in chosen],
            "confidences": {int(i): node_confidence(logits[i])
                            for i in chosen},
            "cumulative_done": int(n - len(pending)),
        })

    if decode_buildings:
        _decode_state(state, codebook, bvae_params, bvae_cfg, rng)
    return state


def _decode_state(state: GenerationState, codebook: Codebook,
                  bvae_params: dict, bvae_cfg: BvaeConfig,
                  rng: np.random.Generator):
    """Replace non-prior blocks' buildings with decoded layouts."""
    out_nodes = []
    for i, node in enumerate(state.graph.nodes):
        node = copy.copy(node)
        if state.status[i] == "accepted" and not is_super_node(node):
            mu = dequantize_code(state.codes[i], codebook)
            if len(codebook.sigma_pool):
                log_var = sample_sigma(codebook, rng)
                eps = rng.standard_normal(codebook.dim)
                z = mu + np.exp(0.5 * log_var) * eps
            else:
                z = mu
            frame = oriented_bounding_frame(node.contour)
            layout = decode_block(z, bvae_params, bvae_cfg, frame)
            node.buildings = decanonicalize(layout, frame, bvae_cfg.h_max)
        out_nodes.append(node)
    state.graph = CityGraph(state.graph.city_id, out_nodes, state.graph.edges,
                            state.graph.centroid, state.graph.seed,
                            dict(state.graph.meta))


def state_to_geojson(state: GenerationState) -> dict:
    """Generated buildings as a GeoJSON FeatureCollection."""
    features = []
    for i, node in enumerate(state.graph.nodes):
        if is_super_node(node):
            continue
        source = "prior" if state.status[i] == "prior" else "generated"
        for b in node.buildings:
            features.append({
                "type": "Feature",
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [[[float(x), float(y)]
                                     for x, y in b.footprint.vertices]],
                },
                "properties": {
                    "block_id": node.block_id,
                    "height_m": float(b.height),
                    "iteration_accepted": int(state.accepted_iteration[i]),
                    "source": source,
                },
            })
    return {"type": "FeatureCollection", "features": features}


def state_trace(state: GenerationState) -> dict:
    return {
        "iterations": state.trace,
        "status": list(state.status),
        "accepted_iteration": [int(v) for v in state.accepted_iteration],
    }
