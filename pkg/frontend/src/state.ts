/** Client-side session state: pure data + reducers, no DOM, no model math.
 *
 * Blocks have a three-way UI status: "untouched" (server decides),
 * "prior" (pinned: the block keeps its current layout) and "masked"
 * (explicitly regenerate).  The state never computes model outputs — it
 * only assembles requests and stores responses.
 */

import type {
  GenerateRequest,
  GenerateResponse,
  SuperNodeSpec,
} from "./types.js";

export type BlockUiStatus = "untouched" | "prior" | "masked";

export interface ScheduleParams {
  seed: number;
  iterations: number;
  family: "cosine" | "linear" | "logarithmic" | "literal-cosine";
}

export interface SessionState {
  cityId: string;
  blockIds: string[];
  blockStatus: Map<string, BlockUiStatus>;
  superNodes: SuperNodeSpec[];
  schedule: ScheduleParams;
  lastResponse: GenerateResponse | null;
  /** at most one request in flight; extra clicks queue client-side */
  inFlight: boolean;
  queued: GenerateRequest | null;
  error: string | null;
}

export function newSession(cityId: string, blockIds: string[]): SessionState {
  return {
    cityId,
    blockIds: [...blockIds],
    blockStatus: new Map(blockIds.map((id) => [id, "untouched"])),
    superNodes: [],
    schedule: { seed: 0, iterations: 12, family: "cosine" },
    lastResponse: null,
    inFlight: false,
    queued: null,
    error: null,
  };
}

const CYCLE: Record<BlockUiStatus, BlockUiStatus> = {
  untouched: "prior",
  prior: "masked",
  masked: "untouched",
};

/** Clicking a block cycles untouched -> prior -> masked -> untouched. */
export function toggleBlock(state: SessionState, blockId: string): void {
  const current = state.blockStatus.get(blockId);
  if (current === undefined) {
    throw new Error(`unknown block ${blockId}`);
  }
  state.blockStatus.set(blockId, CYCLE[current]);
}

export function setBlockStatus(
  state: SessionState,
  blockId: string,
  status: BlockUiStatus,
): void {
  if (!state.blockStatus.has(blockId)) {
    throw new Error(`unknown block ${blockId}`);
  }
  state.blockStatus.set(blockId, status);
}

export function blocksWithStatus(
  state: SessionState,
  status: BlockUiStatus,
): string[] {
  return state.blockIds.filter((id) => state.blockStatus.get(id) === status);
}

export function addSuperNode(state: SessionState, spec: SuperNodeSpec): void {
  if (spec.attach_to.length === 0) {
    throw new Error("super node must attach to at least one block");
  }
  for (const id of spec.attach_to) {
    if (!state.blockStatus.has(id)) {
      throw new Error(`unknown block ${id}`);
    }
  }
  state.superNodes.push(spec);
}

export function clearSuperNodes(state: SessionState): void {
  state.superNodes = [];
}

/** Generation needs something to do: a masked block or a super node. */
export function canGenerate(state: SessionState): boolean {
  return (
    blocksWithStatus(state, "masked").length > 0 ||
    state.superNodes.length > 0
  );
}

/** Assemble the request the server expects.
 *
 * If any block is explicitly masked, exactly those blocks regenerate and
 * everything else is pinned.  Otherwise pinned priors are sent and the
 * server regenerates the rest.
 */
export function buildGenerateRequest(state: SessionState): GenerateRequest {
  const masked = blocksWithStatus(state, "masked");
  const prior = blocksWithStatus(state, "prior");
  const req: GenerateRequest = {
    city_id: state.cityId,
    seed: state.schedule.seed,
    iterations: state.schedule.iterations,
    family: state.schedule.family,
  };
  if (masked.length > 0) {
    req.masked_blocks = masked;
  } else if (prior.length > 0) {
    req.prior_blocks = prior;
  }
  if (state.superNodes.length > 0) {
    req.super_nodes = state.superNodes;
  }
  return req;
}

/** Submit through the single-in-flight gate; returns the request to send
 * now, or null if it was queued behind an in-flight one. */
export function submit(
  state: SessionState,
  req: GenerateRequest,
): GenerateRequest | null {
  if (state.inFlight) {
    state.queued = req;
    return null;
  }
  state.inFlight = true;
  return req;
}

/** Record a response; returns a queued request to send next, if any. */
export function complete(
  state: SessionState,
  response: GenerateResponse | null,
  error: string | null,
): GenerateRequest | null {
  state.inFlight = false;
  state.error = error;
  if (response !== null) {
    state.lastResponse = response;
  }
  const next = state.queued;
  state.queued = null;
  if (next !== null) {
    state.inFlight = true;
  }
  return next;
}
