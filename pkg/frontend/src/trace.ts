/** Trace playback: pure views over the server's per-iteration acceptance
 * record.  Every set shown during playback comes verbatim from the trace
 * payload — nothing is recomputed client-side.
 */

import type { NodeStatus, TracePayload } from "./types.js";

export class TracePlayback {
  readonly steps: number;

  constructor(private readonly trace: TracePayload) {
    validateTrace(trace);
    this.steps = trace.iterations.length;
  }

  /** Node indices accepted exactly at iteration t (1-based). */
  acceptedAt(t: number): number[] {
    const rec = this.trace.iterations.find((it) => it.t === t);
    return rec ? [...rec.accepted] : [];
  }

  /** All node indices decided after iteration t, priors included (t=0). */
  acceptedUpTo(t: number): Set<number> {
    const done = new Set<number>();
    this.trace.accepted_iteration.forEach((it, idx) => {
      if (it >= 0 && it <= t) {
        done.add(idx);
      }
    });
    return done;
  }

  /** Per-node status as of iteration t. */
  statusAt(t: number): NodeStatus[] {
    return this.trace.accepted_iteration.map((it, idx) => {
      if (this.trace.status[idx] === "prior") {
        return "prior";
      }
      return it >= 0 && it <= t ? "accepted" : "pending";
    });
  }

  confidenceOf(t: number, node: number): number | undefined {
    const rec = this.trace.iterations.find((it) => it.t === t);
    return rec?.confidences[String(node)];
  }

  betaAt(t: number): number | undefined {
    return this.trace.iterations.find((it) => it.t === t)?.beta;
  }
}

/** Reject malformed payloads before they reach the canvas. */
export function validateTrace(trace: TracePayload): void {
  const n = trace.status.length;
  if (trace.accepted_iteration.length !== n) {
    throw new Error("trace: status and accepted_iteration length mismatch");
  }
  const seen = new Set<number>();
  let cumulative = trace.status.filter((s) => s === "prior").length;
  let lastT = 0;
  for (const rec of trace.iterations) {
    if (rec.t <= lastT) {
      throw new Error(`trace: iterations out of order at t=${rec.t}`);
    }
    lastT = rec.t;
    for (const idx of rec.accepted) {
      if (idx < 0 || idx >= n) {
        throw new Error(`trace: accepted index ${idx} out of range`);
      }
      if (seen.has(idx)) {
        throw new Error(`trace: node ${idx} accepted twice`);
      }
      seen.add(idx);
      if (trace.accepted_iteration[idx] !== rec.t) {
        throw new Error(
          `trace: node ${idx} accepted_iteration disagrees with iteration list`,
        );
      }
    }
    cumulative += rec.accepted.length;
    if (rec.cumulative_done !== cumulative) {
      throw new Error(
        `trace: cumulative_done ${rec.cumulative_done} != ${cumulative} at t=${rec.t}`,
      );
    }
  }
}
