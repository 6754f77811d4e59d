/** Thin typed client over the generation service HTTP API.
 *
 * Every method resolves to parsed JSON or rejects with an ApiError whose
 * message carries the server's detail string, so the UI can surface the
 * failing stage in a banner without crashing.
 */

import type {
  GenerateRequest,
  GenerateResponse,
  GraphPayload,
  HealthResponse,
  MetricsReport,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

async function parseOrThrow<T>(res: Response): Promise<T> {
  if (res.ok) {
    return (await res.json()) as T;
  }
  let detail = `${res.status} ${res.statusText}`;
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string") {
      detail = body.detail;
    }
  } catch {
    /* non-JSON error body: keep the status line */
  }
  throw new ApiError(res.status, detail);
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class StudioApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  health(): Promise<HealthResponse> {
    return this.get<HealthResponse>("/api/health");
  }

  cityGraph(cityId: string): Promise<GraphPayload> {
    return this.get<GraphPayload>(
      `/api/city/${encodeURIComponent(cityId)}/graph`,
    );
  }

  async generate(req: GenerateRequest): Promise<GenerateResponse> {
    const res = await this.fetchImpl(`${this.baseUrl}/api/generate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    return parseOrThrow<GenerateResponse>(res);
  }

  async metrics(runId: string): Promise<MetricsReport> {
    const res = await this.fetchImpl(`${this.baseUrl}/api/metrics`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ run_id: runId }),
    });
    return parseOrThrow<MetricsReport>(res);
  }

  renderUrl(runId: string): string {
    return `${this.baseUrl}/api/render/${encodeURIComponent(runId)}.svg`;
  }

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`);
    return parseOrThrow<T>(res);
  }
}
