"""Train the masked code model: predict hidden block codes from context.

Nodes carry discrete layout codes plus shape features; a random subset of
codes is masked each step and a graph-attention stack learns to recover
them from visible neighbors.  This is the engine behind generation.
"""

import tempfile
from pathlib import Path

import numpy as np

from coho.bvae import BvaeConfig, canonicalize_block, encode_batch, train_bvae
from coho.citygraph import IngestConfig, ingest_city
from coho.gmae import GmaeConfig, masked_accuracy, train_gmae
from coho.quantizer import fit_codebook, quantize_latent
from coho.toy import ToyConfig, write_toy

root = Path(tempfile.mkdtemp(prefix="coho-demo-"))
write_toy(ToyConfig(4, 4, seed=0), root / "b.geojson", root / "u.geojson")
g = ingest_city(root / "b.geojson", root / "u.geojson", IngestConfig(), "demo")
print(f"city: {g.num_nodes} blocks")

# Compact encoder + codebook to produce the discrete codes.
h_max = float(np.quantile([b.height for n in g.nodes for b in n.buildings],
                          0.99))
bcfg = BvaeConfig(latent_dim=16, hidden=48, h_max=h_max, steps=800, seed=0)
layouts = [canonicalize_block(n, bcfg.slot_capacity, bcfg.h_max)
           for n in g.nodes]
bparams, _ = train_bvae(layouts, bcfg)
mu, _ = encode_batch(bparams, bcfg, np.stack([l.slots for l in layouts]))
cb = fit_codebook(mu.data, levels=10, seed=0)
codes = quantize_latent(mu.data, cb)
for i, node in enumerate(g.nodes):
    node.layout_code = codes[i]
print(f"codes: {cb.dim} dims x {cb.levels} levels")

mcfg = GmaeConfig(latent_dim=cb.dim, levels=cb.levels, hidden=64,
                  steps=2500, seed=0)
print(f"training masked model for {mcfg.steps} steps ...")
params, history = train_gmae([g], "demo-codebook", mcfg)
print(f"masked cross-entropy {history[0]:.3f} -> {history[-1]:.3f}")

rng = np.random.default_rng(0)
train_idx = [i for i, n in enumerate(g.nodes) if n.split == "train"]
test_idx = [i for i, n in enumerate(g.nodes) if n.split == "test"]
half = rng.choice(train_idx, size=len(train_idx) // 2, replace=False)
print(f"\ntop-1 code accuracy, half of train masked: "
      f"{100 * masked_accuracy(params, mcfg, g, half):.1f}%")
print(f"top-1 code accuracy, held-out blocks masked: "
      f"{100 * masked_accuracy(params, mcfg, g, test_idx):.1f}%")
