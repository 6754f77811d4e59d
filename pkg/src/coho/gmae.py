"""City-scale graph masked autoencoder.

Nodes carry [code channel, z-scored shape features]; masked nodes get a
learned mask vector.  Encoder: D stacked GAT layers whose attention sees a
softened inverse edge distance; decoder: 2-layer MLP emitting per-node,
per-dimension class logits over the codebook.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import nn
from .checkpoint import save_checkpoint
from .citygraph import CityGraph
from .errors import CompatibilityError, ContractViolation, TrainingDiverged

log = logging.getLogger(__name__)

EDGE_SOFTEN_M = 100.0  # softening scale for the inverse-distance bias


@dataclass
class GmaeConfig:
    depth: int = 3
    heads: int = 4
    hidden: int = 128
    latent_dim: int = 32     # D_q
    levels: int = 20         # L
    mask_mean: float = 0.55
    mask_std: float = 0.25
    mask_lo: float = 0.5
    mask_hi: float = 1.0
    subgraph_radius: float = 500.0
    lr: float = 1e-3
    batch_subgraphs: int = 16
    steps: int = 2000
    seed: int = 0
    feat_mean: np.ndarray | None = None  # [4]
    feat_std: np.ndarray | None = None   # [4]

    def __post_init__(self):
        if not (0.0 <= self.mask_lo < self.mask_hi <= 1.0):
            raise ContractViolation("mask range must satisfy 0 <= lo < hi <= 1")
        if self.depth < 1:
            raise ContractViolation("depth must be >= 1")

    def to_hyperparameters(self) -> dict:
        hp = {"depth": self.depth, "heads": self.heads, "hidden": self.hidden,
              "D_q": self.latent_dim, "L": self.levels,
              "mask_mean": self.mask_mean, "mask_std": self.mask_std,
              "mask_lo": self.mask_lo, "mask_hi": self.mask_hi,
              "subgraph_radius": self.subgraph_radius}
        if self.feat_mean is not None:
            hp["feat_mean"] = [float(v) for v in self.feat_mean]
            hp["feat_std"] = [float(v) for v in self.feat_std]
        return hp

    @classmethod
    def from_hyperparameters(cls, hp: dict, **overrides) -> "GmaeConfig":
        return cls(depth=hp["depth"], heads=hp["heads"], hidden=hp["hidden"],
                   latent_dim=hp["D_q"], levels=hp["L"],
                   mask_mean=hp["mask_mean"], mask_std=hp["mask_std"],
                   mask_lo=hp["mask_lo"], mask_hi=hp["mask_hi"],
                   subgraph_radius=hp["subgraph_radius"],
                   feat_mean=np.asarray(hp["feat_mean"]) if "feat_mean" in hp else None,
                   feat_std=np.asarray(hp["feat_std"]) if "feat_std" in hp else None,
                   **overrides)


def fit_feature_stats(graphs: list[CityGraph]) -> tuple[np.ndarray, np.ndarray]:
    feats = np.concatenate([
        np.stack([n.shape_features.as_array() for n in g.nodes])
        for g in graphs])
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std < 1e-9] = 1.0
    return mean, std


def sample_mask_ratio(cfg: GmaeConfig, rng: np.random.Generator) -> float:
    """Rejection-sample N(mask_mean, mask_std) into [mask_lo, mask_hi]."""
    while True:
        m = rng.normal(cfg.mask_mean, cfg.mask_std)
        if cfg.mask_lo <= m <= cfg.mask_hi:
            return float(m)


def truncated_mask_mean(cfg: GmaeConfig, n_grid: int = 200001) -> float:
    """Numeric-quadrature mean of the truncated Gaussian (oracle use)."""
    x = np.linspace(cfg.mask_lo, cfg.mask_hi, n_grid)
    pdf = np.exp(-0.5 * ((x - cfg.mask_mean) / cfg.mask_std) ** 2)
    return float(np.trapezoid(x * pdf, x) / np.trapezoid(pdf, x))


# ---------------------------------------------------------------------------
# graph arrays / forward


def graph_arrays(g: CityGraph):
    """Directed edge arrays (both directions + self-loops) with attention
    bias 1/(1 + d/100m); self-loops use bias 1."""
    src = np.array([e.i for e in g.edges] + [e.j for e in g.edges], np.int64)
    dst = np.array([e.j for e in g.edges] + [e.i for e in g.edges], np.int64)
    dist = np.array([e.distance for e in g.edges] * 2, np.float64)
    bias = 1.0 / (1.0 + dist / EDGE_SOFTEN_M)
    return nn.add_self_loops(src, dst, g.num_nodes, bias, self_bias=1.0)


def init_gmae_params(cfg: GmaeConfig, rng: np.random.Generator) -> dict:
    p: dict = {}
    in_dim = cfg.latent_dim + 4
    nn.init_linear(p, rng, "enc.in", in_dim, cfg.hidden)
    for i in range(cfg.depth):
        nn.init_gat_layer(p, rng, f"enc.gat{i}", cfg.hidden, cfg.hidden,
                          cfg.heads, edge_bias=True)
    nn.init_linear(p, rng, "dec.h", cfg.hidden, cfg.hidden)
    nn.init_linear(p, rng, "dec.out", cfg.hidden, cfg.latent_dim * cfg.levels)
    p["mask_embed"] = ad.Tensor(
        0.1 * rng.standard_normal(cfg.latent_dim).astype(np.float32),
        requires_grad=True)
    return p


def build_node_inputs(params: dict, cfg: GmaeConfig, codes,
                      mask_flags, shape_feats):
    """Concatenate the code channel with z-scored shape features.

    codes: [N, D_q] int (rows for masked nodes are ignored); mask_flags:
    [N] bool; shape_feats: [N, 4] raw.  Returns Tensor [N, D_q + 4].
    """
    if cfg.feat_mean is None or cfg.feat_std is None:
        raise ContractViolation("feature stats not fitted")
    codes = np.asarray(codes, dtype=np.float64)
    flags = np.asarray(mask_flags, dtype=bool)
    chan = (codes + 0.5) / cfg.levels
    chan[flags] = 0.0
    base = ad.Tensor(chan.astype(np.float32))
    code_channel = base + ad.Tensor(flags.astype(np.float32)[:, None]) * \
        params["mask_embed"]
    feats = (np.asarray(shape_feats, np.float64) - cfg.feat_mean) / cfg.feat_std
    return ad.concat([code_channel, ad.Tensor(feats.astype(np.float32))], axis=1)


def gmae_forward(params: dict, cfg: GmaeConfig, node_inputs, src, dst,
                 edge_bias, num_nodes: int):
    """Returns logits Tensor [N, D_q, L]."""
    h = ad.leaky_relu(nn.linear(params, "enc.in", node_inputs), 0.2)
    for i in range(cfg.depth):
        h = ad.leaky_relu(
            nn.gat_layer(params, f"enc.gat{i}", h, src, dst, num_nodes,
                         cfg.heads, edge_bias=edge_bias), 0.2)
    d = ad.relu(nn.linear(params, "dec.h", h))
    out = nn.linear(params, "dec.out", d)
    return ad.reshape(out, (num_nodes, cfg.latent_dim, cfg.levels))


def gmae_loss(logits, targets, loss_mask):
    """Softmax cross-entropy averaged over masked nodes x dimensions."""
    idx = np.where(np.asarray(loss_mask, dtype=bool))[0]
    if len(idx) == 0:
        raise ContractViolation("loss requires at least one masked node")
    picked = ad.gather(logits, idx)
    t = np.asarray(targets, np.int64)[idx]
    return ad.softmax_cross_entropy(picked, t)


# ---------------------------------------------------------------------------
# training


def _union_subgraphs(g: CityGraph, centers, radius, centroids):
    """Node index list + union edge arrays for a batch of radius subgraphs,
    with node indices offset per subgraph."""
    node_idx = []
    src_all, dst_all, bias_all = [], [], []
    offset = 0
    edge_src = np.array([e.i for e in g.edges], np.int64)
    edge_dst = np.array([e.j for e in g.edges], np.int64)
    edge_d = np.array([e.distance for e in g.edges], np.float64)
    for c in centers:
        d = np.linalg.norm(centroids - centroids[c], axis=1)
        keep = np.where(d <= radius)[0]
        remap = -np.ones(g.num_nodes, np.int64)
        remap[keep] = np.arange(len(keep)) + offset
        sel = (remap[edge_src] >= 0) & (remap[edge_dst] >= 0)
        s, t = remap[edge_src[sel]], remap[edge_dst[sel]]
        dd = edge_d[sel]
        src_all.append(np.concatenate([s, t]))
        dst_all.append(np.concatenate([t, s]))
        bias_all.append(np.concatenate([1.0 / (1.0 + dd / EDGE_SOFTEN_M)] * 2))
        node_idx.append(keep)
        offset += len(keep)
    nodes = np.concatenate(node_idx)
    src = np.concatenate(src_all)
    dst = np.concatenate(dst_all)
    bias = np.concatenate(bias_all)
    src, dst, bias = nn.add_self_loops(src, dst, offset, bias)
    return nodes, src, dst, bias


def train_gmae(graphs: list[CityGraph], codebook_hash: str, cfg: GmaeConfig,
               out_path=None, log_every: int = 200):
    """Self-supervised masked-code training over radius subgraphs.

    Nodes outside the train split are always masked on input and excluded
    from the loss, so their codes never leak into training.
    """
    for g in graphs:
        for node in g.nodes:
            if node.layout_code is None:
                raise ContractViolation(
                    f"node {node.block_id} has no layout code")
    rng = np.random.default_rng(cfg.seed)
    if cfg.feat_mean is None:
        cfg.feat_mean, cfg.feat_std = fit_feature_stats(graphs)
    params = init_gmae_params(cfg, rng)
    state = ad.AdamState()
    per_graph = []
    for g in graphs:
        centroids = g.node_centroids()
        codes = np.stack([n.layout_code for n in g.nodes])
        feats = np.stack([n.shape_features.as_array() for n in g.nodes])
        train_nodes = np.array([i for i, n in enumerate(g.nodes)
                                if n.split == "train"], np.int64)
        is_train = np.zeros(g.num_nodes, bool)
        is_train[train_nodes] = True
        per_graph.append((g, centroids, codes, feats, train_nodes, is_train))
    history = []
    for step in range(cfg.steps):
        g, centroids, codes, feats, train_nodes, is_train = \
            per_graph[int(rng.integers(0, len(per_graph)))]
        centers = train_nodes[rng.integers(0, len(train_nodes),
                                           size=cfg.batch_subgraphs)]
        nodes, src, dst, bias = _union_subgraphs(
            g, centers, cfg.subgraph_radius, centroids)
        n_sub = len(nodes)
        m = sample_mask_ratio(cfg, rng)
        n_mask = max(1, math.ceil(m * n_sub))
        mask_pick = rng.choice(n_sub, size=n_mask, replace=False)
        mask_flags = np.zeros(n_sub, bool)
        mask_flags[mask_pick] = True
        mask_flags |= ~is_train[nodes]           # held-out codes never visible
        loss_mask = np.zeros(n_sub, bool)
        loss_mask[mask_pick] = True
        loss_mask &= is_train[nodes]
        if not loss_mask.any():
            continue
        ad.zero_grads(params)
        inputs = build_node_inputs(params, cfg, codes[nodes], mask_flags,
                                   feats[nodes])
        logits = gmae_forward(params, cfg, inputs, src, dst, bias, n_sub)
        loss = gmae_loss(logits, codes[nodes], loss_mask)
        val = float(loss.data)
        if not np.isfinite(val):
            raise TrainingDiverged(f"loss became non-finite at step {step}")
        history.append(val)
        loss.backward()
        ad.adam_step(params, state, lr=cfg.lr)
        if log_every and (step + 1) % log_every == 0:
            log.info("gmae step %d loss %.4f", step + 1, val)
    if out_path is not None:
        hp = cfg.to_hyperparameters()
        hp["codebook_hash"] = codebook_hash
        save_checkpoint(out_path, "gmae", hp, params,
                        extras={"loss_history_tail": history[-20:],
                                "seed": cfg.seed})
    return params, history


def check_codebook_hash(manifest: dict, codebook_hash: str):
    trained_against = manifest["hyperparameters"].get("codebook_hash", "")
    if trained_against and trained_against != codebook_hash:
        raise CompatibilityError(
            "checkpoint was trained against a different codebook")


def predict_logits(params: dict, cfg: GmaeConfig, g: CityGraph, codes,
                   mask_flags) -> np.ndarray:
    """Full-graph forward; returns numpy logits [N, D_q, L]."""
    src, dst, bias = graph_arrays(g)
    feats = np.stack([n.shape_features.as_array() for n in g.nodes])
    inputs = build_node_inputs(params, cfg, codes, mask_flags, feats)
    logits = gmae_forward(params, cfg, inputs, src, dst, bias, g.num_nodes)
    return logits.data.copy()


def masked_accuracy(params: dict, cfg: GmaeConfig, g: CityGraph,
                    node_indices) -> float:
    """Mask the given nodes (all others visible), predict, and score
    per-(node, dimension) top-1 accuracy."""
    codes = np.stack([n.layout_code for n in g.nodes])
    mask = np.zeros(g.num_nodes, bool)
    mask[np.asarray(node_indices, np.int64)] = True
    logits = predict_logits(params, cfg, g, codes, mask)
    pred = logits.argmax(axis=-1)
    sel = np.where(mask)[0]
    return float((pred[sel] == codes[sel]).mean())
