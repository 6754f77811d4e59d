/** Studio entry point: wires the canvas, controls, and API client.
 *
 * All model math happens server-side; this file only routes user intent
 * (block toggling, super-node placement, schedule settings) into API
 * requests and binds responses back onto the canvas and trace slider.
 */

import { ApiError, StudioApi } from "./api.js";
import {
  SessionState,
  buildGenerateRequest,
  canGenerate,
  complete,
  newSession,
  submit,
  toggleBlock,
} from "./state.js";
import { TracePlayback } from "./trace.js";
import { buildScene, drawScene, makeViewport, pickBlock } from "./render.js";
import type { GenerateRequest, GraphPayload } from "./types.js";

const CANVAS_W = 960;
const CANVAS_H = 720;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

class StudioApp {
  private api = new StudioApi("");
  private graph: GraphPayload | null = null;
  private session: SessionState | null = null;
  private playback: TracePlayback | null = null;
  private traceStep = 0;
  private isometric = false;
  private superDraft: string[] = [];
  private placingSuper = false;

  private canvas = el<HTMLCanvasElement>("city");
  private banner = el<HTMLDivElement>("banner");
  private slider = el<HTMLInputElement>("trace-step");
  private stepLabel = el<HTMLSpanElement>("step-label");
  private report = el<HTMLPreElement>("report");

  async start(): Promise<void> {
    this.canvas.width = CANVAS_W;
    this.canvas.height = CANVAS_H;
    this.canvas.addEventListener("click", (ev) => this.onCanvasClick(ev));
    el<HTMLButtonElement>("generate").addEventListener("click", () =>
      this.onGenerate(),
    );
    el<HTMLButtonElement>("place-super").addEventListener("click", () =>
      this.onPlaceSuper(),
    );
    el<HTMLInputElement>("isometric").addEventListener("change", (ev) => {
      this.isometric = (ev.target as HTMLInputElement).checked;
      this.redraw();
    });
    this.slider.addEventListener("input", () => {
      this.traceStep = Number(this.slider.value);
      this.stepLabel.textContent = `t=${this.traceStep}`;
      this.redraw();
    });

    try {
      const health = await this.api.health();
      if (!health.artifacts["graph"]) {
        this.showError("no city ingested yet — run the pipeline first");
        return;
      }
      // city id is discoverable from the graph payload of the only city
      const graph = await this.api.cityGraph(await this.findCityId());
      this.graph = graph;
      this.session = newSession(
        graph.city_id,
        graph.nodes.map((n) => n.block_id),
      );
      if (graph.nodes.length === 0) {
        this.showError("empty city: nothing to display");
      } else {
        this.clearError();
      }
      this.redraw();
    } catch (err) {
      this.showError(this.describe(err));
    }
  }

  private async findCityId(): Promise<string> {
    // the service hosts one corpus; probe the conventional id first
    for (const guess of ["toy", "city"]) {
      try {
        const g = await this.api.cityGraph(guess);
        return g.city_id;
      } catch {
        /* try next */
      }
    }
    throw new Error("could not resolve city id from the service");
  }

  private onCanvasClick(ev: MouseEvent): void {
    if (!this.graph || !this.session) {
      return;
    }
    const rect = this.canvas.getBoundingClientRect();
    const vp = makeViewport(this.graph, CANVAS_W, CANVAS_H);
    const idx = pickBlock(this.graph, vp, [
      ev.clientX - rect.left,
      ev.clientY - rect.top,
    ]);
    if (idx === null) {
      return;
    }
    const blockId = this.graph.nodes[idx]!.block_id;
    if (this.placingSuper) {
      this.superDraft.push(blockId);
      el<HTMLSpanElement>("super-draft").textContent =
        `${this.superDraft.length} blocks`;
    } else {
      toggleBlock(this.session, blockId);
    }
    this.redraw();
  }

  private onPlaceSuper(): void {
    if (!this.session || !this.graph) {
      return;
    }
    if (!this.placingSuper) {
      this.placingSuper = true;
      this.superDraft = [];
      el<HTMLButtonElement>("place-super").textContent = "attach + finish";
      return;
    }
    this.placingSuper = false;
    el<HTMLButtonElement>("place-super").textContent = "place super node";
    if (this.superDraft.length === 0) {
      return;
    }
    const styleFrom = el<HTMLInputElement>("style-block").value.trim();
    const source = this.graph.nodes.find((n) => n.block_id === styleFrom);
    if (!source || !source.layout_code) {
      this.showError(`style block "${styleFrom}" not found or has no code`);
      return;
    }
    this.session.superNodes.push({
      style_code: source.layout_code,
      attach_to: [...this.superDraft],
    });
    el<HTMLSpanElement>("super-count").textContent = String(
      this.session.superNodes.length,
    );
    this.redraw();
  }

  private onGenerate(): void {
    if (!this.session) {
      return;
    }
    this.session.schedule.seed = Number(el<HTMLInputElement>("seed").value);
    this.session.schedule.iterations = Number(
      el<HTMLInputElement>("iterations").value,
    );
    if (!canGenerate(this.session)) {
      // nothing masked and no super node: regenerate all non-prior blocks
      this.clearError();
    }
    const req = submit(this.session, buildGenerateRequest(this.session));
    if (req) {
      void this.send(req);
    }
  }

  private async send(req: GenerateRequest): Promise<void> {
    if (!this.session) {
      return;
    }
    try {
      const res = await this.api.generate(req);
      this.playback = new TracePlayback(res.trace);
      this.traceStep = this.playback.steps;
      this.slider.max = String(this.playback.steps);
      this.slider.value = String(this.traceStep);
      this.stepLabel.textContent = `t=${this.traceStep}`;
      const next = complete(this.session, res, null);
      this.clearError();
      this.redraw();
      void this.loadMetrics(res.run_id);
      if (next) {
        void this.send(next);
      }
    } catch (err) {
      const next = complete(this.session, null, this.describe(err));
      this.showError(this.session.error ?? "generation failed");
      if (next) {
        void this.send(next);
      }
    }
  }

  private async loadMetrics(runId: string): Promise<void> {
    try {
      const rep = await this.api.metrics(runId);
      this.report.textContent = JSON.stringify(rep, null, 2);
    } catch (err) {
      this.report.textContent = `metrics unavailable: ${this.describe(err)}`;
    }
  }

  private redraw(): void {
    if (!this.graph || !this.session) {
      return;
    }
    const ctx = this.canvas.getContext("2d");
    if (!ctx) {
      return;
    }
    ctx.clearRect(0, 0, CANVAS_W, CANVAS_H);
    const res = this.session.lastResponse;
    const ops = buildScene(this.graph, {
      width: CANVAS_W,
      height: CANVAS_H,
      blockStatus: this.session.blockStatus,
      generated: res?.geojson ?? null,
      highlight: this.playback
        ? this.playback.acceptedUpTo(this.traceStep)
        : null,
      justAccepted: this.playback
        ? new Set(this.playback.acceptedAt(this.traceStep))
        : null,
      isometric: this.isometric,
    });
    drawScene(ctx, ops);
  }

  private describe(err: unknown): string {
    if (err instanceof ApiError) {
      return `server error (${err.status}): ${err.message}`;
    }
    return err instanceof Error ? err.message : String(err);
  }

  private showError(msg: string): void {
    this.banner.textContent = msg;
    this.banner.style.display = "block";
  }

  private clearError(): void {
    this.banner.style.display = "none";
  }
}

void new StudioApp().start();
