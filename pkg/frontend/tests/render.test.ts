import { describe, expect, it } from "vitest";

import { buildScene, makeViewport, pickBlock } from "../src/render.js";
import type { BlockUiStatus } from "../src/state.js";
import { tinyGenerated, tinyGraph, tinyTrace } from "./fixtures.js";
import { TracePlayback } from "../src/trace.js";

const SIZE = { width: 400, height: 400 };

describe("scene determinism", () => {
  it("identical payloads build deeply-equal display lists", () => {
    const a = buildScene(tinyGraph(), { ...SIZE, generated: tinyGenerated() });
    const b = buildScene(tinyGraph(), { ...SIZE, generated: tinyGenerated() });
    expect(b).toEqual(a);
  });

  it("a changed payload changes the scene", () => {
    const base = buildScene(tinyGraph(), { ...SIZE, generated: tinyGenerated() });
    const other = tinyGenerated();
    other.features[0]!.properties.height_m = 99;
    const changed = buildScene(tinyGraph(), { ...SIZE, generated: other });
    expect(changed).not.toEqual(base);
  });
});

describe("scene content", () => {
  it("draws one block op per node, corpus buildings by default", () => {
    const ops = buildScene(tinyGraph(), SIZE);
    expect(ops.filter((o) => o.layer === "block")).toHaveLength(3);
    expect(ops.filter((o) => o.layer === "building")).toHaveLength(3);
    expect(ops.filter((o) => o.layer === "roof")).toHaveLength(0);
  });

  it("generated buildings replace corpus buildings", () => {
    const ops = buildScene(tinyGraph(), { ...SIZE, generated: tinyGenerated() });
    expect(ops.filter((o) => o.layer === "building")).toHaveLength(4);
  });

  it("block fills follow the UI status map", () => {
    const status = new Map<string, BlockUiStatus>([
      ["c0-0_b0-0", "prior"],
      ["c0-0_b1-0", "masked"],
    ]);
    const ops = buildScene(tinyGraph(), { ...SIZE, blockStatus: status });
    const fills = new Map(
      ops.filter((o) => o.layer === "block").map((o) => [o.blockId, o.fill]),
    );
    expect(fills.get("c0-0_b0-0")).toBe("#cfe3cf");
    expect(fills.get("c0-0_b1-0")).toBe("#dfd3ef");
    expect(fills.get("c1-0_b0-0")).toBe("#edeae1");
  });

  it("prior blocks keep the same styling across regenerations", () => {
    const status = new Map<string, BlockUiStatus>([["c0-0_b1-0", "prior"]]);
    const pick = (gen: ReturnType<typeof tinyGenerated>) =>
      buildScene(tinyGraph(), { ...SIZE, blockStatus: status, generated: gen })
        .filter((o) => o.blockId === "c0-0_b1-0");
    expect(pick(tinyGenerated())).toEqual(pick(tinyGenerated()));
  });

  it("isometric mode adds a roof op above each building", () => {
    const ops = buildScene(tinyGraph(), { ...SIZE, isometric: true });
    const buildings = ops.filter((o) => o.layer === "building");
    const roofs = ops.filter((o) => o.layer === "roof");
    expect(roofs).toHaveLength(buildings.length);
    // taller building -> roof shifted further up (smaller canvas y)
    const rise = (idx: number) =>
      buildings[idx]!.points[0]![1] - roofs[idx]!.points[0]![1];
    expect(rise(1)).toBeGreaterThan(rise(0)); // h=30 vs h=10
  });
});

describe("trace-driven accents", () => {
  it("strokes match acceptedUpTo/acceptedAt of the playback step", () => {
    const pb = new TracePlayback(tinyTrace());
    const ops = buildScene(tinyGraph(), {
      ...SIZE,
      highlight: pb.acceptedUpTo(1),
      justAccepted: new Set(pb.acceptedAt(1)),
    });
    const strokes = ops
      .filter((o) => o.layer === "block")
      .map((o) => o.stroke);
    expect(strokes).toEqual(["#4a7db5", "#d4582a", "#b9b4a6"]);
  });
});

describe("hit testing", () => {
  it("maps a canvas click back to the block under it", () => {
    const g = tinyGraph();
    const vp = makeViewport(g, SIZE.width, SIZE.height);
    for (let i = 0; i < g.nodes.length; i++) {
      const contour = g.nodes[i]!.contour;
      const cx = contour.reduce((s, p) => s + p[0], 0) / contour.length;
      const cy = contour.reduce((s, p) => s + p[1], 0) / contour.length;
      expect(pickBlock(g, vp, vp.toCanvas([cx, cy]))).toBe(i);
    }
    expect(pickBlock(g, vp, [-5, -5])).toBeNull();
  });
});
