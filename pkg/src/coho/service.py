"""HTTP API over the trained pipeline artifacts.

Endpoints:
  GET  /api/health                 liveness + artifact availability
  GET  /api/city/{city_id}/graph   stored city graph as JSON
  POST /api/generate               run scheduled generation, returns run_id
  POST /api/metrics                evaluation report for a run
  GET  /api/render/{run_id}.svg    SVG rendering of a run ("real" = corpus)
"""

from __future__ import annotations

import os
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import metrics as metrics_mod
from . import pipeline
from .citygraph import graph_to_dict, load_graph
from .config import PipelineConfig
from .errors import CohoError
from .render import render_svg
from .sampler import SuperNode, state_to_geojson, state_trace


class SuperNodeSpec(BaseModel):
    style_code: list[int]
    attach_to: list[str]
    edge_distance: float = 50.0


class GenerateRequest(BaseModel):
    city_id: str | None = None
    seed: int | None = None
    iterations: int | None = None
    family: str | None = None
    prior_blocks: list[str] = []
    masked_blocks: list[str] = []       # regenerate exactly these; rest pinned
    super_node: SuperNodeSpec | None = None
    super_nodes: list[SuperNodeSpec] = []
    decode_buildings: bool = True


class MetricsRequest(BaseModel):
    run_id: str


def create_app(cfg: PipelineConfig) -> FastAPI:
    app = FastAPI(title="coho", version="1.0")
    # the studio frontend is served from its own origin
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    runs: dict[str, object] = {}

    def _graph():
        if not os.path.exists(cfg.paths.graph):
            raise HTTPException(404, "city graph not found; run the pipeline")
        return load_graph(cfg.paths.graph)

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "artifacts": {
                name: os.path.exists(path)
                for name, path in [
                    ("graph", cfg.paths.graph),
                    ("bvae_checkpoint", cfg.paths.bvae_checkpoint),
                    ("codebook", cfg.paths.codebook),
                    ("gmae_checkpoint", cfg.paths.gmae_checkpoint),
                ]
            },
        }

    @app.get("/api/city/{city_id}/graph")
    def city_graph(city_id: str):
        g = _graph()
        if city_id != g.city_id:
            raise HTTPException(404, f"unknown city {city_id}")
        return graph_to_dict(g)

    @app.post("/api/generate")
    def generate(req: GenerateRequest):
        g = _graph()
        if req.city_id is not None and req.city_id != g.city_id:
            raise HTTPException(404, f"unknown city {req.city_id}")
        index_by_id = {n.block_id: i for i, n in enumerate(g.nodes)}

        def lookup(block_ids):
            try:
                return [index_by_id[b] for b in block_ids]
            except KeyError as exc:
                raise HTTPException(422, f"unknown block {exc}") from exc

        if req.masked_blocks:
            masked = set(lookup(req.masked_blocks))
            prior_indices = [i for i in range(g.num_nodes) if i not in masked]
        else:
            prior_indices = lookup(req.prior_blocks)
        specs = list(req.super_nodes)
        if req.super_node is not None:
            specs.append(req.super_node)
        sn = [SuperNode(np.asarray(spec.style_code, np.int64),
                        lookup(spec.attach_to), spec.edge_distance)
              for spec in specs] or None
        run_cfg = cfg
        if req.iterations is not None or req.family is not None:
            import copy
            run_cfg = copy.deepcopy(cfg)
            if req.iterations is not None:
                run_cfg.generate.iterations = req.iterations
            if req.family is not None:
                run_cfg.generate.family = req.family
        try:
            state = pipeline.run_generation(
                run_cfg, g=g, prior_indices=prior_indices, super_node=sn,
                seed=req.seed)
        except CohoError as exc:
            raise HTTPException(422, str(exc)) from exc
        except FileNotFoundError as exc:
            raise HTTPException(404, f"missing artifact: {exc}") from exc
        run_id = uuid.uuid4().hex[:12]
        runs[run_id] = state
        return {
            "run_id": run_id,
            "geojson": state_to_geojson(state),
            "trace": state_trace(state),
            "complete": state.complete,
        }

    @app.post("/api/metrics")
    def metrics(req: MetricsRequest):
        state = runs.get(req.run_id)
        if state is None:
            raise HTTPException(404, f"unknown run {req.run_id}")
        real = _graph()
        gen = pipeline._strip_super(state.graph)
        try:
            report = metrics_mod.community_report(gen, real)
        except CohoError as exc:
            raise HTTPException(422, str(exc)) from exc
        return report.to_dict()

    @app.get("/api/render/{run_id}.svg")
    def render(run_id: str):
        if run_id == "real":
            g = _graph()
        else:
            state = runs.get(run_id)
            if state is None:
                raise HTTPException(404, f"unknown run {run_id}")
            g = pipeline._strip_super(state.graph)
        return Response(render_svg(g), media_type="image/svg+xml")

    return app
