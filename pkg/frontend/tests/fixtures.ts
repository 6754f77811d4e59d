import type {
  GeoFeatureCollection,
  GraphPayload,
  Point,
  TracePayload,
} from "../src/types.js";

function square(x0: number, y0: number, side: number): Point[] {
  return [
    [x0, y0],
    [x0 + side, y0],
    [x0 + side, y0 + side],
    [x0, y0 + side],
  ];
}

export function tinyGraph(): GraphPayload {
  return {
    format_version: 1,
    city_id: "toy",
    crs: "local-meters",
    seed: 0,
    centroid: [0, 0],
    meta: {},
    nodes: [
      {
        block_id: "c0-0_b0-0",
        contour: square(0, 0, 100),
        buildings: [
          { footprint: square(10, 10, 20), height_m: 10 },
          { footprint: square(50, 50, 20), height_m: 30 },
        ],
        shape_features: [1, 10000, 1, 50],
        layout_code: [1, 2, 3],
        split: "train",
      },
      {
        block_id: "c0-0_b1-0",
        contour: square(120, 0, 100),
        buildings: [{ footprint: square(130, 10, 30), height_m: 6 }],
        shape_features: [1, 10000, 1, 70],
        layout_code: [4, 5, 6],
        split: "train",
      },
      {
        block_id: "c1-0_b0-0",
        contour: square(0, 200, 100),
        buildings: [],
        shape_features: [1, 10000, 1, 150],
        layout_code: [7, 8, 9],
        split: "test",
      },
    ],
    edges: [
      [0, 1, 20],
      [1, 2, 120],
    ],
  };
}

export function tinyTrace(): TracePayload {
  return {
    iterations: [
      {
        t: 1,
        beta: 0.2,
        target_total: 1,
        accepted: [1],
        confidences: { "1": -0.5 },
        cumulative_done: 2,
      },
      {
        t: 2,
        beta: 1.0,
        target_total: 3,
        accepted: [2],
        confidences: { "2": -1.5 },
        cumulative_done: 3,
      },
    ],
    status: ["prior", "accepted", "accepted"],
    accepted_iteration: [0, 1, 2],
  };
}

export function tinyGenerated(): GeoFeatureCollection {
  return {
    type: "FeatureCollection",
    features: [
      {
        type: "Feature",
        geometry: { type: "Polygon", coordinates: [square(15, 15, 18)] },
        properties: {
          block_id: "c0-0_b0-0",
          height_m: 12,
          iteration_accepted: 1,
          source: "generated",
        },
      },
      {
        type: "Feature",
        geometry: { type: "Polygon", coordinates: [square(55, 55, 18)] },
        properties: {
          block_id: "c0-0_b0-0",
          height_m: 28,
          iteration_accepted: 1,
          source: "generated",
        },
      },
      {
        type: "Feature",
        geometry: { type: "Polygon", coordinates: [square(130, 10, 30)] },
        properties: {
          block_id: "c0-0_b1-0",
          height_m: 6,
          iteration_accepted: 0,
          source: "prior",
        },
      },
      {
        type: "Feature",
        geometry: { type: "Polygon", coordinates: [square(20, 220, 25)] },
        properties: {
          block_id: "c1-0_b0-0",
          height_m: 15,
          iteration_accepted: 2,
          source: "generated",
        },
      },
    ],
  };
}
