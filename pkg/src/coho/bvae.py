"""Block-level variational autoencoder over canonicalized building layouts.

A block's buildings are mapped into its oriented frame as up to M slot
records [exists, u, v, w, h, height]; slots form a bidirectional chain
graph.  Encoder: 3 GAT layers + mean pooling + affine heads for mu and
log-variance.  Decoder mirrors the structure and emits per-slot existence
logits and geometry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import nn
from .citygraph import BlockNode, Building
from .errors import TrainingDiverged
from .geometry import OrientedFrame, Polygon, oriented_bounding_frame
from .checkpoint import save_checkpoint

log = logging.getLogger(__name__)

SLOT_DIM = 6  # exists, u, v, w, h, height


@dataclass
class CanonicalBlockLayout:
    slots: np.ndarray            # [M, 6] float64 in [0, 1]
    frame: OrientedFrame | None = None

    @property
    def count(self) -> int:
        return int(self.slots[:, 0].round().sum())


@dataclass
class BvaeConfig:
    slot_capacity: int = 10      # M
    latent_dim: int = 32         # D_q
    heads: int = 4
    hidden: int = 64
    h_max: float = 60.0          # height normalizer (meters)
    lr: float = 1e-3
    batch_size: int = 32
    steps: int = 3000
    kl_weight: float = 1e-3
    kl_warmup_frac: float = 0.1
    seed: int = 0

    def to_hyperparameters(self) -> dict:
        return {"M": self.slot_capacity, "D_q": self.latent_dim,
                "heads": self.heads, "hidden": self.hidden,
                "H_max": self.h_max}

    @classmethod
    def from_hyperparameters(cls, hp: dict, **overrides) -> "BvaeConfig":
        return cls(slot_capacity=hp["M"], latent_dim=hp["D_q"],
                   heads=hp["heads"], hidden=hp["hidden"], h_max=hp["H_max"],
                   **overrides)


# ---------------------------------------------------------------------------
# canonicalization


def canonicalize_block(block: BlockNode, capacity: int,
                       h_max: float) -> CanonicalBlockLayout:
    """Map a block's buildings into its oriented frame as slot records.

    Slot order is ascending (u, v) of the building center; overflow is
    truncated keeping the largest footprints.
    """
    frame = oriented_bounding_frame(block.contour)
    w_f, h_f = frame.extent
    records = []
    for b in block.buildings:
        local = frame.to_local(b.footprint.vertices)
        lo, hi = local.min(axis=0), local.max(axis=0)
        cu = (lo[0] + hi[0]) / 2 / w_f
        cv = (lo[1] + hi[1]) / 2 / h_f
        ew = (hi[0] - lo[0]) / w_f
        eh = (hi[1] - lo[1]) / h_f
        records.append((cu, cv, ew, eh, min(1.0, b.height / h_max)))
    if len(records) > capacity:
        log.warning("block %s has %d buildings; keeping largest %d",
                    block.block_id, len(records), capacity)
        records.sort(key=lambda r: r[2] * r[3], reverse=True)
        records = records[:capacity]
    records.sort(key=lambda r: (round(r[0], 9), round(r[1], 9)))
    slots = np.zeros((capacity, SLOT_DIM))
    for i, (cu, cv, ew, eh, hh) in enumerate(records):
        slots[i] = (1.0, cu, cv, ew, eh, hh)
    return CanonicalBlockLayout(slots, frame)


def decanonicalize(layout: CanonicalBlockLayout, frame: OrientedFrame,
                   h_max: float) -> list[Building]:
    """Inverse map: slot records back to frame-aligned world boxes."""
    w_f, h_f = frame.extent
    out = []
    for exists, cu, cv, ew, eh, hh in layout.slots:
        if exists < 0.5 or ew * w_f < 1e-6 or eh * h_f < 1e-6:
            continue
        cx, cy = cu * w_f, cv * h_f
        hw, hhh = ew * w_f / 2, eh * h_f / 2
        corners = np.array([[cx - hw, cy - hhh], [cx + hw, cy - hhh],
                            [cx + hw, cy + hhh], [cx - hw, cy + hhh]])
        world = frame.to_world(corners)
        out.append(Building(Polygon(world, check_simple=False),
                            float(hh * h_max), "generated"))
    return out


# ---------------------------------------------------------------------------
# model


def init_bvae_params(cfg: BvaeConfig, rng: np.random.Generator) -> dict:
    p: dict = {}
    nn.init_linear(p, rng, "enc.in", SLOT_DIM, cfg.hidden)
    for i in range(3):
        nn.init_gat_layer(p, rng, f"enc.gat{i}", cfg.hidden, cfg.hidden, cfg.heads)
    nn.init_linear(p, rng, "enc.mu", cfg.hidden, cfg.latent_dim)
    nn.init_linear(p, rng, "enc.logvar", cfg.hidden, cfg.latent_dim)
    nn.init_linear(p, rng, "dec.in", cfg.latent_dim, cfg.hidden)
    p["dec.slot_embed"] = ad.Tensor(
        0.1 * rng.standard_normal((cfg.slot_capacity, cfg.hidden)).astype(np.float32),
        requires_grad=True)
    for i in range(3):
        nn.init_gat_layer(p, rng, f"dec.gat{i}", cfg.hidden, cfg.hidden, cfg.heads)
    nn.init_linear(p, rng, "dec.exist", cfg.hidden, 1)
    nn.init_linear(p, rng, "dec.geom", cfg.hidden, SLOT_DIM - 1)
    return p


def _slot_graph(cfg: BvaeConfig, batch: int):
    src, dst = nn.chain_edges(cfg.slot_capacity, batch)
    return nn.add_self_loops(src, dst, cfg.slot_capacity * batch)[:2]


def encode_batch(params: dict, cfg: BvaeConfig, slots: np.ndarray):
    """slots: [B, M, 6] -> (mu, log_var) Tensors of shape [B, D_q]."""
    B, M = slots.shape[0], cfg.slot_capacity
    x = ad.Tensor(slots.reshape(B * M, SLOT_DIM).astype(np.float32))
    src, dst = _slot_graph(cfg, B)
    h = ad.leaky_relu(nn.linear(params, "enc.in", x), 0.2)
    for i in range(3):
        h = ad.leaky_relu(
            nn.gat_layer(params, f"enc.gat{i}", h, src, dst, B * M, cfg.heads), 0.2)
    pooled = ad.tmean(ad.reshape(h, (B, M, cfg.hidden)), axis=1)
    mu = nn.linear(params, "enc.mu", pooled)
    log_var = nn.linear(params, "enc.logvar", pooled)
    return mu, log_var


def decode_batch(params: dict, cfg: BvaeConfig, z):
    """z: Tensor [B, D_q] -> (exist_logits [B, M], geom [B, M, 5] in (0,1))."""
    B, M = z.shape[0], cfg.slot_capacity
    base = nn.linear(params, "dec.in", z)                   # [B, hidden]
    tiled = ad.reshape(base, (B, 1, cfg.hidden)) + ad.reshape(
        params["dec.slot_embed"], (1, M, cfg.hidden))
    h = ad.leaky_relu(ad.reshape(tiled, (B * M, cfg.hidden)), 0.2)
    src, dst = _slot_graph(cfg, B)
    for i in range(3):
        h = ad.leaky_relu(
            nn.gat_layer(params, f"dec.gat{i}", h, src, dst, B * M, cfg.heads), 0.2)
    exist = ad.reshape(nn.linear(params, "dec.exist", h), (B, M))
    geom = ad.sigmoid(ad.reshape(nn.linear(params, "dec.geom", h),
                                 (B, M, SLOT_DIM - 1)))
    return exist, geom


def encode_block(layout: CanonicalBlockLayout, params: dict,
                 cfg: BvaeConfig):
    mu, log_var = encode_batch(params, cfg, layout.slots[None])
    return mu.data[0].copy(), log_var.data[0].copy()


def decode_block(z: np.ndarray, params: dict, cfg: BvaeConfig,
                 frame: OrientedFrame | None = None) -> CanonicalBlockLayout:
    zt = ad.Tensor(np.asarray(z, np.float32).reshape(1, -1))
    exist, geom = decode_batch(params, cfg, zt)
    prob = 1.0 / (1.0 + np.exp(-exist.data[0]))
    slots = np.zeros((cfg.slot_capacity, SLOT_DIM))
    on = prob >= 0.5
    slots[on, 0] = 1.0
    slots[on, 1:] = np.clip(geom.data[0][on], 0.0, 1.0)
    return CanonicalBlockLayout(slots, frame)


def bvae_loss(exist_logits, geom, target: np.ndarray, mu, log_var,
              kl_weight: float):
    """BCE on existence + masked L1 on geometry/height + KL."""
    t_exist = ad.Tensor(target[:, :, 0].astype(np.float32))
    t_geom = ad.Tensor(target[:, :, 1:].astype(np.float32))
    mask = ad.Tensor(target[:, :, :1].astype(np.float32))
    bce = ad.tmean(ad.softplus(exist_logits) - t_exist * exist_logits)
    denom = max(1.0, float(target[:, :, 0].sum()) * (SLOT_DIM - 1))
    l1 = ad.mul(ad.tsum(ad.absolute(geom - t_geom) * mask), 1.0 / denom)
    kl = ad.gaussian_kl(mu, log_var)
    return bce + l1 + ad.mul(kl, kl_weight)


# ---------------------------------------------------------------------------
# training


def train_bvae(corpus: list[CanonicalBlockLayout], cfg: BvaeConfig,
               out_path=None, log_every: int = 500):
    """Adam training with reparameterized sampling; deterministic per seed.

    Returns (params, loss_history); writes a checkpoint when out_path is
    given.
    """
    if not corpus:
        raise ValueError("empty training corpus")
    rng = np.random.default_rng(cfg.seed)
    params = init_bvae_params(cfg, rng)
    state = ad.AdamState()
    data = np.stack([lay.slots for lay in corpus])
    n = len(corpus)
    history = []
    order = rng.permutation(n)
    cursor = 0
    for step in range(cfg.steps):
        if cursor + cfg.batch_size > n:
            order = rng.permutation(n)
            cursor = 0
        idx = order[cursor:cursor + cfg.batch_size]
        cursor += cfg.batch_size
        batch = data[idx]
        ad.zero_grads(params)
        mu, log_var = encode_batch(params, cfg, batch)
        eps = rng.standard_normal(mu.shape).astype(np.float32)
        z = mu + ad.exp(ad.mul(log_var, 0.5)) * ad.Tensor(eps)
        exist, geom = decode_batch(params, cfg, z)
        warm = min(1.0, (step + 1) / max(1.0, cfg.kl_warmup_frac * cfg.steps))
        loss = bvae_loss(exist, geom, batch, mu, log_var, cfg.kl_weight * warm)
        val = float(loss.data)
        if not np.isfinite(val):
            raise TrainingDiverged(f"loss became non-finite at step {step}")
        history.append(val)
        loss.backward()
        ad.adam_step(params, state, lr=cfg.lr)
        if log_every and (step + 1) % log_every == 0:
            log.info("bvae step %d loss %.4f", step + 1, val)
    if out_path is not None:
        save_checkpoint(out_path, "bvae", cfg.to_hyperparameters(), params,
                        extras={"loss_history_tail": history[-20:],
                                "seed": cfg.seed})
    return params, history


def reconstruction_pairs(corpus: list[CanonicalBlockLayout], params: dict,
                         cfg: BvaeConfig, batch: int = 64):
    """Deterministic round trips (z = mu) for evaluation."""
    recon = []
    for start in range(0, len(corpus), batch):
        chunk = corpus[start:start + batch]
        slots = np.stack([lay.slots for lay in chunk])
        mu, _ = encode_batch(params, cfg, slots)
        exist, geom = decode_batch(params, cfg, ad.Tensor(mu.data))
        prob = 1.0 / (1.0 + np.exp(-exist.data))
        for b, lay in enumerate(chunk):
            out = np.zeros_like(lay.slots)
            on = prob[b] >= 0.5
            out[on, 0] = 1.0
            out[on, 1:] = np.clip(geom.data[b][on], 0.0, 1.0)
            recon.append(CanonicalBlockLayout(out, lay.frame))
    return recon
