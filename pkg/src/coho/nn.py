"""Model building blocks on top of the autodiff engine.

Layers are plain functions over a flat name->Tensor parameter dict; the
`init_*` helpers populate that dict from a seeded Generator so training
runs reproduce bit-exactly.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .errors import ContractViolation

LEAKY_SLOPE = 0.2  # standard GAT convention


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    shape = shape or (fan_in, fan_out)
    return rng.uniform(-limit, limit, size=shape).astype(np.float32)


def init_linear(params: dict, rng, prefix: str, in_dim: int, out_dim: int):
    params[f"{prefix}.W"] = ad.Tensor(glorot(rng, in_dim, out_dim), requires_grad=True)
    params[f"{prefix}.b"] = ad.Tensor(np.zeros(out_dim, np.float32), requires_grad=True)


def linear(params: dict, prefix: str, x):
    return x @ params[f"{prefix}.W"] + params[f"{prefix}.b"]


def init_gat_layer(params: dict, rng, prefix: str, in_dim: int, out_dim: int,
                   heads: int, edge_bias: bool = False):
    if out_dim % heads != 0:
        raise ContractViolation("out_dim must be divisible by heads")
    f_out = out_dim // heads
    params[f"{prefix}.W"] = ad.Tensor(glorot(rng, in_dim, out_dim), requires_grad=True)
    params[f"{prefix}.a_src"] = ad.Tensor(
        glorot(rng, f_out, 1, shape=(heads, f_out)), requires_grad=True)
    params[f"{prefix}.a_dst"] = ad.Tensor(
        glorot(rng, f_out, 1, shape=(heads, f_out)), requires_grad=True)
    params[f"{prefix}.b"] = ad.Tensor(np.zeros(out_dim, np.float32), requires_grad=True)
    if edge_bias:
        params[f"{prefix}.w_edge"] = ad.Tensor(
            np.zeros(heads, np.float32), requires_grad=True)


def gat_layer(params: dict, prefix: str, x, src, dst, num_nodes: int,
              heads: int, edge_bias=None):
    """Multi-head graph attention over directed edges src -> dst.

    Edges must include a self-loop for every node (checked).  `edge_bias`
    is an optional per-edge scalar entering each head's attention logit
    through a learned weight.
    """
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    if len(np.unique(dst)) != num_nodes:
        raise ContractViolation("every node needs at least one incoming edge "
                                "(add self-loops)")
    W = params[f"{prefix}.W"]
    out_dim = W.shape[1]
    f_out = out_dim // heads

    h = x @ W                                   # [N, H*F]
    hh = ad.reshape(h, (num_nodes, heads, f_out))
    e_src = ad.tsum(hh * params[f"{prefix}.a_src"], axis=2)   # [N, H]
    e_dst = ad.tsum(hh * params[f"{prefix}.a_dst"], axis=2)
    e = ad.gather(e_src, src) + ad.gather(e_dst, dst)         # [E, H]
    if edge_bias is not None:
        bias = np.asarray(edge_bias, dtype=np.float32).reshape(-1, 1)
        if bias.shape[0] != len(src):
            raise ContractViolation("edge_bias length must match edge count")
        e = e + ad.Tensor(bias) * params[f"{prefix}.w_edge"]
    e = ad.leaky_relu(e, LEAKY_SLOPE)
    alpha = ad.segment_softmax(e, dst, num_nodes)             # [E, H]
    msg = ad.gather(hh, src) * ad.reshape(alpha, (len(src), heads, 1))
    agg = ad.segment_sum(msg, dst, num_nodes)                 # [N, H, F]
    return ad.reshape(agg, (num_nodes, out_dim)) + params[f"{prefix}.b"]


def add_self_loops(src, dst, num_nodes, edge_bias=None, self_bias=1.0):
    """Append one self-loop per node; returns (src, dst[, bias])."""
    loop = np.arange(num_nodes, dtype=np.int64)
    src2 = np.concatenate([np.asarray(src, np.int64), loop])
    dst2 = np.concatenate([np.asarray(dst, np.int64), loop])
    if edge_bias is None:
        return src2, dst2, None
    bias2 = np.concatenate([np.asarray(edge_bias, np.float32),
                            np.full(num_nodes, self_bias, np.float32)])
    return src2, dst2, bias2


def chain_edges(num_slots: int, num_graphs: int = 1):
    """Bidirectional chain over slots, replicated with offsets for a batch."""
    base_src = np.concatenate([np.arange(num_slots - 1), np.arange(1, num_slots)])
    base_dst = np.concatenate([np.arange(1, num_slots), np.arange(num_slots - 1)])
    src = np.concatenate([base_src + g * num_slots for g in range(num_graphs)])
    dst = np.concatenate([base_dst + g * num_slots for g in range(num_graphs)])
    return src.astype(np.int64), dst.astype(np.int64)
