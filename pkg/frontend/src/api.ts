/** Typed client for the /api/v1 endpoints plus the what-if gate.
 *
 * The gate keeps at most one what-if in flight: a newer submission
 * aborts the pending request and its eventual settlement is reported as
 * superseded rather than applied.
 */

import type {
  ApiErrorBody,
  BridgeRow,
  ClassificationRow,
  Embedding2dRow,
  MetricsPayload,
  OverlayCollection,
  WhatIfRequestBody,
  WhatIfResponse,
} from "./types.js";

export const API_PREFIX = "/api/v1";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<never> {
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as ApiErrorBody;
    if (body && typeof body.error === "string") message = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(message, response.status);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async get<T>(name: string): Promise<T> {
    const response = await fetch(`${this.baseUrl}${API_PREFIX}/${name}`);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  getBridges(): Promise<BridgeRow[]> {
    return this.get("bridges");
  }

  getClassification(): Promise<ClassificationRow[]> {
    return this.get("classification");
  }

  getEmbedding2d(): Promise<Embedding2dRow[]> {
    return this.get("embedding2d");
  }

  getMetrics(): Promise<MetricsPayload> {
    return this.get("metrics");
  }

  getOverlay(): Promise<OverlayCollection> {
    return this.get("overlay");
  }

  async postWhatIf(body: WhatIfRequestBody, signal?: AbortSignal): Promise<WhatIfResponse> {
    const response = await fetch(`${this.baseUrl}${API_PREFIX}/whatif`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as WhatIfResponse;
  }
}

export type GateResult =
  | { kind: "ok"; response: WhatIfResponse }
  | { kind: "superseded" }
  | { kind: "error"; message: string };

type PostFn = (body: WhatIfRequestBody, signal: AbortSignal) => Promise<WhatIfResponse>;

export class WhatIfGate {
  private controller: AbortController | null = null;
  private generation = 0;

  constructor(private readonly post: PostFn) {}

  /** Submit a request, aborting and superseding any pending one. */
  async submit(body: WhatIfRequestBody): Promise<GateResult> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    const generation = ++this.generation;
    try {
      const response = await this.post(body, controller.signal);
      if (generation !== this.generation) return { kind: "superseded" };
      return { kind: "ok", response };
    } catch (err) {
      if (controller.signal.aborted || generation !== this.generation) {
        return { kind: "superseded" };
      }
      const message = err instanceof Error ? err.message : String(err);
      return { kind: "error", message };
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }

  get pending(): boolean {
    return this.controller !== null;
  }
}
