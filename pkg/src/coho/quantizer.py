"""Per-dimension equal-percentile quantization of BVAE latents.

Each latent dimension is binned at its k/L quantiles; a code is the vector
of bin indices.  Representatives are per-bin medians of the fit data, and
an empirical pool of encoder log-variance vectors is kept for stochastic
decoding.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DegenerateDimension, ParseError

CODEBOOK_FORMAT_VERSION = 1
SIGMA_POOL_CAP = 10000


@dataclass
class Codebook:
    levels: int                    # L
    dim: int                       # D_q
    edges: np.ndarray              # [D_q, L-1], strictly ascending per row
    representatives: np.ndarray    # [D_q, L] bin medians
    sigma_pool: np.ndarray         # [P, D_q] stored log_var vectors
    source_checkpoint_hash: str = ""

    def bin_width(self, d: int, k: int) -> float:
        """Width of bin k in dimension d (outer bins use the fit range)."""
        lo = self.edges[d, k - 1] if k > 0 else self.representatives[d, 0]
        hi = self.edges[d, k] if k < self.levels - 1 else self.representatives[d, -1]
        return float(hi - lo)


def fit_codebook(latents, levels: int, sigma_samples=None, seed: int = 0,
                 source_checkpoint_hash: str = "") -> Codebook:
    """Equal-percentile codebook over a matrix of mu vectors [N, D_q]."""
    mus = np.asarray(latents, dtype=np.float64)
    if mus.ndim != 2:
        raise ContractViolation("latents must be [N, D_q]")
    n, dim = mus.shape
    if levels < 2:
        raise ContractViolation("levels must be >= 2")
    edges = np.empty((dim, levels - 1))
    reps = np.empty((dim, levels))
    for d in range(dim):
        col = mus[:, d]
        if len(np.unique(col)) < levels:
            raise DegenerateDimension(
                f"dimension {d} has fewer than {levels} distinct values")
        qs = np.arange(1, levels) / levels
        edges[d] = np.quantile(col, qs, method="linear")
        if np.any(np.diff(edges[d]) <= 0):
            raise DegenerateDimension(
                f"dimension {d}: non-ascending quantile edges (heavy ties)")
        bins = np.searchsorted(edges[d], col, side="right")
        for k in range(levels):
            members = col[bins == k]
            if len(members) == 0:
                # empty bin can only arise from ties; fall back to midpoint
                lo = edges[d, k - 1] if k > 0 else col.min()
                hi = edges[d, k] if k < levels - 1 else col.max()
                reps[d, k] = (lo + hi) / 2
            else:
                reps[d, k] = np.median(members)
    pool = np.zeros((0, dim), dtype=np.float32)
    if sigma_samples is not None:
        sig = np.asarray(sigma_samples, dtype=np.float32)
        if len(sig) > SIGMA_POOL_CAP:
            keep = np.random.default_rng(seed).choice(
                len(sig), SIGMA_POOL_CAP, replace=False)
            sig = sig[np.sort(keep)]
        pool = sig
    return Codebook(levels, dim, edges, reps, pool, source_checkpoint_hash)


def quantize_latent(mu, cb: Codebook) -> np.ndarray:
    """Per-dimension bin index; values exactly on an edge go to the upper
    bin.  Monotone non-decreasing in every dimension."""
    mu = np.asarray(mu, dtype=np.float64)
    flat = mu.reshape(-1, cb.dim)
    out = np.empty(flat.shape, dtype=np.int64)
    for d in range(cb.dim):
        out[:, d] = np.searchsorted(cb.edges[d], flat[:, d], side="right")
    return out.reshape(mu.shape).astype(np.int64)


def dequantize_code(code, cb: Codebook) -> np.ndarray:
    """Bin-median representative per dimension."""
    code = np.asarray(code, dtype=np.int64)
    if code.min(initial=0) < 0 or code.max(initial=0) >= cb.levels:
        raise ContractViolation("code index out of range")
    flat = code.reshape(-1, cb.dim)
    out = np.empty(flat.shape, dtype=np.float64)
    for d in range(cb.dim):
        out[:, d] = cb.representatives[d][flat[:, d]]
    return out.reshape(code.shape).astype(np.float64)


def sample_sigma(cb: Codebook, rng: np.random.Generator) -> np.ndarray:
    """Uniform whole-vector draw from the stored log_var pool, preserving
    cross-dimension correlation."""
    if len(cb.sigma_pool) == 0:
        raise ContractViolation("sigma pool is empty")
    idx = int(rng.integers(0, len(cb.sigma_pool)))
    return cb.sigma_pool[idx].astype(np.float64).copy()


# ---------------------------------------------------------------------------
# persistence


def save_codebook(cb: Codebook, path):
    payload = {
        "format_version": CODEBOOK_FORMAT_VERSION,
        "L": cb.levels,
        "D_q": cb.dim,
        "edges": cb.edges.tolist(),
        "representatives": cb.representatives.tolist(),
        "sigma_pool": base64.b64encode(
            np.ascontiguousarray(cb.sigma_pool, dtype="<f4").tobytes()).decode(),
        "source_checkpoint_hash": cb.source_checkpoint_hash,
    }
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, separators=(",", ":"))


def load_codebook(path) -> Codebook:
    with open(path) as f:
        data = json.load(f)
    if data.get("format_version") != CODEBOOK_FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported codebook version")
    dim = data["D_q"]
    raw = base64.b64decode(data["sigma_pool"])
    pool = np.frombuffer(raw, dtype="<f4").reshape(-1, dim).copy()
    return Codebook(
        levels=data["L"], dim=dim,
        edges=np.asarray(data["edges"], dtype=np.float64),
        representatives=np.asarray(data["representatives"], dtype=np.float64),
        sigma_pool=pool,
        source_checkpoint_hash=data.get("source_checkpoint_hash", ""),
    )
