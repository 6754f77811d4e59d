/** View-space math: fit-to-canvas projection, height colors, isometric
 * extrusion offsets, and small aggregations over API payloads.
 */

import type {
  GeoFeatureCollection,
  GraphPayload,
  Point,
} from "./types.js";

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function boundsOf(rings: Point[][]): Bounds {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const ring of rings) {
    for (const [x, y] of ring) {
      minX = Math.min(minX, x);
      minY = Math.min(minY, y);
      maxX = Math.max(maxX, x);
      maxY = Math.max(maxY, y);
    }
  }
  if (!Number.isFinite(minX)) {
    throw new Error("bounds of empty geometry");
  }
  return { minX, minY, maxX, maxY };
}

/** World meters -> canvas pixels: uniform scale, centered, y flipped so
 * north is up. */
export class Viewport {
  readonly scale: number;
  private readonly offsetX: number;
  private readonly offsetY: number;

  constructor(
    readonly bounds: Bounds,
    readonly width: number,
    readonly height: number,
    margin = 20,
  ) {
    const spanX = Math.max(bounds.maxX - bounds.minX, 1e-9);
    const spanY = Math.max(bounds.maxY - bounds.minY, 1e-9);
    this.scale = Math.min(
      (width - 2 * margin) / spanX,
      (height - 2 * margin) / spanY,
    );
    this.offsetX = (width - spanX * this.scale) / 2 - bounds.minX * this.scale;
    this.offsetY =
      (height - spanY * this.scale) / 2 + bounds.maxY * this.scale;
  }

  toCanvas([x, y]: Point): Point {
    return [x * this.scale + this.offsetX, this.offsetY - y * this.scale];
  }

  ringToCanvas(ring: Point[]): Point[] {
    return ring.map((p) => this.toCanvas(p));
  }
}

/** Height color ramp: low buildings pale, tall buildings deep red. */
export function heightColor(height: number, hMax: number): string {
  const t = Math.max(0, Math.min(1, hMax > 0 ? height / hMax : 0));
  const r = Math.round(252 - 72 * t);
  const g = Math.round(221 - 160 * t);
  const b = Math.round(164 - 120 * t);
  return `rgb(${r},${g},${b})`;
}

/** Offset of the extruded roof ring for the optional isometric 2.5D view
 * (pixels; up-right shear proportional to building height). */
export function isometricOffset(
  height: number,
  hMax: number,
  scale: number,
  maxRisePx = 18,
): Point {
  const t = hMax > 0 ? Math.max(0, Math.min(1, height / hMax)) : 0;
  const rise = t * Math.min(maxRisePx, 60 * scale);
  return [rise * 0.35, -rise];
}

export function maxBuildingHeight(graph: GraphPayload): number {
  let h = 0;
  for (const node of graph.nodes) {
    for (const b of node.buildings) {
      h = Math.max(h, b.height_m);
    }
  }
  return h;
}

/** Community key of a block id ("c2-3_b0-1" -> "c2-3"); blocks without
 * the separator are their own community. */
export function communityOf(blockId: string): string {
  const cut = blockId.indexOf("_");
  return cut < 0 ? blockId : blockId.slice(0, cut);
}

export function buildingCountByBlock(
  fc: GeoFeatureCollection,
): Map<string, number> {
  const counts = new Map<string, number>();
  for (const f of fc.features) {
    const id = f.properties.block_id;
    counts.set(id, (counts.get(id) ?? 0) + 1);
  }
  return counts;
}

/** Buildings per community — the what-if density readout. */
export function densityByCommunity(
  fc: GeoFeatureCollection,
): Map<string, number> {
  const density = new Map<string, number>();
  for (const [block, count] of buildingCountByBlock(fc)) {
    const comm = communityOf(block);
    density.set(comm, (density.get(comm) ?? 0) + count);
  }
  return density;
}
