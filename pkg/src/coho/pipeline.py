"""High-level pipeline stages shared by the CLI and the HTTP service.

Every stage reads/writes the artifact paths in the pipeline config, so
stages compose into: make-toy -> ingest -> train-bvae -> fit-codebook ->
train-gmae -> generate -> eval -> render.  Stage boundaries are guarded by
content hashes: the codebook records the BVAE checkpoint hash it was fit
from, and the masked-autoencoder checkpoint records the codebook hash it
was trained against.
"""

from __future__ import annotations

import json
import os

import numpy as np

from . import metrics as metrics_mod
from .bvae import BvaeConfig, canonicalize_block, encode_batch, train_bvae
from .checkpoint import file_hash, load_checkpoint
from .citygraph import CityGraph, IngestConfig, ingest_city, load_graph, save_graph
from .config import PipelineConfig
from .errors import CompatibilityError
from .gmae import GmaeConfig, check_codebook_hash, train_gmae
from .quantizer import fit_codebook, load_codebook, quantize_latent, save_codebook
from .render import render_svg
from .sampler import (GenerationState, ScheduleConfig, SuperNode,
                      apply_super_node, generate, is_super_node,
                      state_to_geojson, state_trace)
from .toy import ToyConfig, write_toy


def _ensure_dir(cfg: PipelineConfig):
    os.makedirs(cfg.paths.data_dir, exist_ok=True)


def stage_make_toy(cfg: PipelineConfig) -> dict:
    _ensure_dir(cfg)
    write_toy(ToyConfig(cfg.toy.communities_x, cfg.toy.communities_y, cfg.seed),
              cfg.paths.blocks, cfg.paths.buildings)
    return {"blocks": cfg.paths.blocks, "buildings": cfg.paths.buildings}


def stage_ingest(cfg: PipelineConfig) -> dict:
    _ensure_dir(cfg)
    ic = IngestConfig(epsilon=cfg.ingest.epsilon, k_max=cfg.ingest.k_max,
                      crs=cfg.ingest.crs,
                      iou_threshold=cfg.ingest.iou_threshold,
                      default_height=cfg.ingest.default_height,
                      seed=cfg.seed)
    g = ingest_city(cfg.paths.blocks, cfg.paths.buildings, ic, cfg.city_id)
    save_graph(g, cfg.paths.graph)
    return {"graph": cfg.paths.graph, "nodes": g.num_nodes,
            "edges": g.num_edges}


def _bvae_config(cfg: PipelineConfig, h_max: float) -> BvaeConfig:
    b = cfg.bvae
    return BvaeConfig(slot_capacity=b.slot_capacity, latent_dim=b.latent_dim,
                      heads=b.heads, hidden=b.hidden, h_max=h_max,
                      lr=b.lr, batch_size=b.batch_size, steps=b.steps,
                      kl_weight=b.kl_weight, seed=cfg.seed)


def _corpus_h_max(g: CityGraph) -> float:
    heights = [b.height for n in g.nodes for b in n.buildings]
    if not heights:
        return 60.0
    return float(np.quantile(heights, 0.99))


def stage_train_bvae(cfg: PipelineConfig) -> dict:
    g = load_graph(cfg.paths.graph)
    bcfg = _bvae_config(cfg, _corpus_h_max(g))
    corpus = [canonicalize_block(n, bcfg.slot_capacity, bcfg.h_max)
              for n in g.nodes if n.split == "train"]
    _, history = train_bvae(corpus, bcfg, out_path=cfg.paths.bvae_checkpoint)
    return {"checkpoint": cfg.paths.bvae_checkpoint,
            "final_loss": history[-1], "steps": len(history)}


def stage_fit_codebook(cfg: PipelineConfig) -> dict:
    g = load_graph(cfg.paths.graph)
    manifest, params = load_checkpoint(cfg.paths.bvae_checkpoint, "bvae")
    bcfg = BvaeConfig.from_hyperparameters(manifest["hyperparameters"],
                                           seed=cfg.seed)
    layouts = [canonicalize_block(n, bcfg.slot_capacity, bcfg.h_max)
               for n in g.nodes]
    slots = np.stack([lay.slots for lay in layouts])
    mus, lvs = [], []
    for start in range(0, len(slots), 256):
        mu, lv = encode_batch(params, bcfg, slots[start:start + 256])
        mus.append(mu.data)
        lvs.append(lv.data)
    mu_all = np.concatenate(mus)
    lv_all = np.concatenate(lvs)
    train_idx = [i for i, n in enumerate(g.nodes) if n.split == "train"]
    cb = fit_codebook(mu_all[train_idx], cfg.quantizer.levels,
                      sigma_samples=lv_all[train_idx], seed=cfg.seed,
                      source_checkpoint_hash=file_hash(cfg.paths.bvae_checkpoint))
    save_codebook(cb, cfg.paths.codebook)
    codes = quantize_latent(mu_all, cb)
    for i, node in enumerate(g.nodes):
        node.layout_code = codes[i]
    save_graph(g, cfg.paths.graph)
    return {"codebook": cfg.paths.codebook, "levels": cb.levels,
            "dim": cb.dim}


def _gmae_config(cfg: PipelineConfig, dim: int, levels: int) -> GmaeConfig:
    m = cfg.gmae
    return GmaeConfig(depth=m.depth, heads=m.heads, hidden=m.hidden,
                      latent_dim=dim, levels=levels, mask_mean=m.mask_mean,
                      mask_std=m.mask_std, mask_lo=m.mask_lo,
                      mask_hi=m.mask_hi, subgraph_radius=m.subgraph_radius,
                      lr=m.lr, batch_subgraphs=m.batch_subgraphs,
                      steps=m.steps, seed=cfg.seed)


def stage_train_gmae(cfg: PipelineConfig) -> dict:
    g = load_graph(cfg.paths.graph)
    cb = load_codebook(cfg.paths.codebook)
    if cb.source_checkpoint_hash != file_hash(cfg.paths.bvae_checkpoint):
        raise CompatibilityError(
            "codebook was fit from a different encoder checkpoint")
    mcfg = _gmae_config(cfg, cb.dim, cb.levels)
    _, history = train_gmae([g], file_hash(cfg.paths.codebook), mcfg,
                            out_path=cfg.paths.gmae_checkpoint)
    return {"checkpoint": cfg.paths.gmae_checkpoint,
            "final_loss": history[-1] if history else float("nan"),
            "steps": len(history)}


def load_models(cfg: PipelineConfig):
    """Load graph + all artifacts with cross-stage hash verification."""
    g = load_graph(cfg.paths.graph)
    cb = load_codebook(cfg.paths.codebook)
    if cb.source_checkpoint_hash != file_hash(cfg.paths.bvae_checkpoint):
        raise CompatibilityError(
            "codebook was fit from a different encoder checkpoint")
    b_manifest, b_params = load_checkpoint(cfg.paths.bvae_checkpoint, "bvae")
    bcfg = BvaeConfig.from_hyperparameters(b_manifest["hyperparameters"])
    m_manifest, m_params = load_checkpoint(cfg.paths.gmae_checkpoint, "gmae")
    check_codebook_hash(m_manifest, file_hash(cfg.paths.codebook))
    mcfg = GmaeConfig.from_hyperparameters(m_manifest["hyperparameters"])
    return g, cb, bcfg, b_params, mcfg, m_params


def run_generation(cfg: PipelineConfig, g=None, prior_indices=None,
                   super_node: SuperNode | list[SuperNode] | None = None,
                   seed: int | None = None) -> GenerationState:
    graph, cb, bcfg, b_params, mcfg, m_params = load_models(cfg)
    if g is not None:
        graph = g
    if super_node is not None:
        nodes = (super_node if isinstance(super_node, (list, tuple))
                 else [super_node])
        for sn in nodes:
            graph = apply_super_node(graph, sn, cb)
    seed = cfg.seed if seed is None else seed
    if prior_indices is None:
        frac = cfg.generate.prior_fraction
        rng = np.random.default_rng(seed)
        n_real = sum(1 for n in graph.nodes if not is_super_node(n))
        k = int(round(frac * n_real))
        prior_indices = rng.choice(n_real, size=k, replace=False) if k else []
    prior = np.zeros(graph.num_nodes, bool)
    for i in prior_indices:
        prior[int(i)] = True
    schedule = ScheduleConfig(iterations=cfg.generate.iterations,
                              family=cfg.generate.family, seed=seed)
    return generate(graph, m_params, mcfg, cb, b_params, bcfg, schedule, prior)


def stage_generate(cfg: PipelineConfig) -> dict:
    state = run_generation(cfg)
    with open(cfg.paths.generated, "w") as f:
        json.dump(state_to_geojson(state), f, sort_keys=True,
                  separators=(",", ":"))
    with open(cfg.paths.trace, "w") as f:
        json.dump(state_trace(state), f, sort_keys=True, separators=(",", ":"))
    save_graph(state.graph, cfg.paths.generated_graph)
    return {"generated": cfg.paths.generated, "trace": cfg.paths.trace,
            "graph": cfg.paths.generated_graph,
            "iterations": len(state.trace)}


def stage_eval(cfg: PipelineConfig) -> dict:
    real = load_graph(cfg.paths.graph)
    gen = load_graph(cfg.paths.generated_graph)
    # metric comparison needs matching structure; drop any steering nodes
    gen = _strip_super(gen)
    report = metrics_mod.community_report(gen, real).to_dict()
    with open(cfg.paths.report, "w") as f:
        json.dump(report, f, sort_keys=True, indent=2)
    return report


def _strip_super(g: CityGraph) -> CityGraph:
    keep = [i for i, n in enumerate(g.nodes) if not is_super_node(n)]
    if len(keep) == g.num_nodes:
        return g
    from .citygraph import Edge
    remap = {old: new for new, old in enumerate(keep)}
    nodes = [g.nodes[i] for i in keep]
    edges = [Edge(remap[e.i], remap[e.j], e.distance) for e in g.edges
             if e.i in remap and e.j in remap]
    return CityGraph(g.city_id, nodes, edges, g.centroid, g.seed, dict(g.meta))


def stage_render(cfg: PipelineConfig, which: str = "generated") -> dict:
    path = (cfg.paths.generated_graph if which == "generated"
            else cfg.paths.graph)
    g = _strip_super(load_graph(path))
    svg = render_svg(g)
    with open(cfg.paths.svg, "w") as f:
        f.write(svg)
    return {"svg": cfg.paths.svg, "bytes": len(svg)}
