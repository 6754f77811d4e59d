/** Payload types mirroring the generation service's JSON API. */

export type Point = [number, number];

export interface BuildingPayload {
  footprint: Point[];
  height_m: number;
  source?: string;
}

export interface GraphNodePayload {
  block_id: string;
  contour: Point[];
  buildings: BuildingPayload[];
  shape_features: number[] | null;
  layout_code: number[] | null;
  split: string;
}

export interface GraphPayload {
  format_version: number;
  city_id: string;
  crs: string;
  seed: number;
  centroid: Point;
  meta: Record<string, unknown>;
  nodes: GraphNodePayload[];
  edges: [number, number, number][];
}

export interface TraceIteration {
  t: number;
  beta: number;
  target_total: number;
  accepted: number[];
  confidences: Record<string, number>;
  cumulative_done: number;
}

export type NodeStatus = "prior" | "accepted" | "pending";

export interface TracePayload {
  iterations: TraceIteration[];
  status: NodeStatus[];
  accepted_iteration: number[];
}

export interface GeoFeature {
  type: "Feature";
  geometry: { type: "Polygon"; coordinates: Point[][] };
  properties: {
    block_id: string;
    height_m: number;
    iteration_accepted: number;
    source: "prior" | "generated";
  };
}

export interface GeoFeatureCollection {
  type: "FeatureCollection";
  features: GeoFeature[];
}

export interface SuperNodeSpec {
  style_code: number[];
  attach_to: string[];
  edge_distance?: number;
}

export interface GenerateRequest {
  city_id?: string;
  seed?: number;
  iterations?: number;
  family?: string;
  prior_blocks?: string[];
  masked_blocks?: string[];
  super_nodes?: SuperNodeSpec[];
  decode_buildings?: boolean;
}

export interface GenerateResponse {
  run_id: string;
  geojson: GeoFeatureCollection;
  trace: TracePayload;
  complete: boolean;
}

export interface MetricsReport {
  CT_gen: number;
  CT_real: number;
  CTS: number;
  WD_5D: number;
  WD_CO: number;
  Overlap_gen: number;
  Overlap_real: number;
  O_Blk_gen: number;
  O_Blk_real: number;
}

export interface HealthResponse {
  status: string;
  artifacts: Record<string, boolean>;
}
