/** Deterministic rendering pipeline.
 *
 * Scene building is pure: (graph, generated buildings, UI state, trace
 * step) -> ordered display list.  Identical inputs give deeply-equal
 * display lists, so "same seed renders identically" is testable without
 * a canvas; drawing the list is a thin, stateless loop at the end.
 */

import type { BlockUiStatus } from "./state.js";
import type {
  GeoFeatureCollection,
  GraphPayload,
  Point,
} from "./types.js";
import {
  Viewport,
  boundsOf,
  heightColor,
  isometricOffset,
  maxBuildingHeight,
} from "./geometry.js";

export interface PolyOp {
  kind: "poly";
  layer: "block" | "building" | "roof" | "overlay";
  points: Point[];
  fill: string;
  stroke: string;
  lineWidth: number;
  blockId: string;
}

export type DisplayOp = PolyOp;

export interface SceneOptions {
  width: number;
  height: number;
  blockStatus?: Map<string, BlockUiStatus>;
  /** generated buildings to draw instead of the corpus ones */
  generated?: GeoFeatureCollection | null;
  /** highlight the blocks accepted up to this set of node indices */
  highlight?: Set<number> | null;
  /** accent the blocks accepted exactly at the playback step */
  justAccepted?: Set<number> | null;
  isometric?: boolean;
}

const BLOCK_FILL: Record<BlockUiStatus, string> = {
  untouched: "#edeae1",
  prior: "#cfe3cf",
  masked: "#dfd3ef",
};

export function makeViewport(
  graph: GraphPayload,
  width: number,
  height: number,
): Viewport {
  return new Viewport(
    boundsOf(graph.nodes.map((n) => n.contour)),
    width,
    height,
  );
}

export function buildScene(
  graph: GraphPayload,
  opts: SceneOptions,
): DisplayOp[] {
  const vp = makeViewport(graph, opts.width, opts.height);
  const hMax = Math.max(maxBuildingHeight(graph), 1e-9);
  const ops: DisplayOp[] = [];

  graph.nodes.forEach((node, idx) => {
    const status = opts.blockStatus?.get(node.block_id) ?? "untouched";
    const inHighlight = opts.highlight?.has(idx) ?? false;
    const accent = opts.justAccepted?.has(idx) ?? false;
    ops.push({
      kind: "poly",
      layer: "block",
      points: vp.ringToCanvas(node.contour),
      fill: BLOCK_FILL[status],
      stroke: accent ? "#d4582a" : inHighlight ? "#4a7db5" : "#b9b4a6",
      lineWidth: accent ? 2.5 : inHighlight ? 1.8 : 1,
      blockId: node.block_id,
    });
  });

  const byBlock = new Map<string, { ring: Point[]; height: number }[]>();
  if (opts.generated) {
    for (const f of opts.generated.features) {
      const ring = f.geometry.coordinates[0] ?? [];
      const list = byBlock.get(f.properties.block_id) ?? [];
      list.push({ ring, height: f.properties.height_m });
      byBlock.set(f.properties.block_id, list);
    }
  } else {
    for (const node of graph.nodes) {
      byBlock.set(
        node.block_id,
        node.buildings.map((b) => ({ ring: b.footprint, height: b.height_m })),
      );
    }
  }

  for (const node of graph.nodes) {
    for (const { ring, height } of byBlock.get(node.block_id) ?? []) {
      const base = vp.ringToCanvas(ring);
      ops.push({
        kind: "poly",
        layer: "building",
        points: base,
        fill: heightColor(height, hMax),
        stroke: "#6d665a",
        lineWidth: 0.5,
        blockId: node.block_id,
      });
      if (opts.isometric) {
        const [dx, dy] = isometricOffset(height, hMax, vp.scale);
        ops.push({
          kind: "poly",
          layer: "roof",
          points: base.map(([x, y]) => [x + dx, y + dy] as Point),
          fill: heightColor(height * 0.85, hMax),
          stroke: "#6d665a",
          lineWidth: 0.5,
          blockId: node.block_id,
        });
      }
    }
  }
  return ops;
}

type Canvas2D = CanvasRenderingContext2D;

export function drawScene(ctx: Canvas2D, ops: DisplayOp[]): void {
  for (const op of ops) {
    if (op.points.length < 3) {
      continue;
    }
    ctx.beginPath();
    const first = op.points[0]!;
    ctx.moveTo(first[0], first[1]);
    for (let i = 1; i < op.points.length; i++) {
      const p = op.points[i]!;
      ctx.lineTo(p[0], p[1]);
    }
    ctx.closePath();
    ctx.fillStyle = op.fill;
    ctx.fill();
    ctx.strokeStyle = op.stroke;
    ctx.lineWidth = op.lineWidth;
    ctx.stroke();
  }
}

/** Hit test in canvas space: index of the topmost block containing p. */
export function pickBlock(
  graph: GraphPayload,
  vp: Viewport,
  p: Point,
): number | null {
  for (let i = graph.nodes.length - 1; i >= 0; i--) {
    const ring = vp.ringToCanvas(graph.nodes[i]!.contour);
    if (pointInRing(p, ring)) {
      return i;
    }
  }
  return null;
}

function pointInRing([x, y]: Point, ring: Point[]): boolean {
  let inside = false;
  for (let i = 0, j = ring.length - 1; i < ring.length; j = i++) {
    const [xi, yi] = ring[i]!;
    const [xj, yj] = ring[j]!;
    if (
      yi > y !== yj > y &&
      x < ((xj - xi) * (y - yi)) / (yj - yi) + xi
    ) {
      inside = !inside;
    }
  }
  return inside;
}
