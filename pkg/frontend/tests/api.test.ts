import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, WhatIfGate } from "../src/api";
import type { WhatIfRequestBody, WhatIfResponse } from "../src/types";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

const EMPTY_RESPONSE: WhatIfResponse = {
  request: {
    k_shop: 3,
    k_hospital: 5,
    k_residence: 20,
    thresholds: { supply_min: 0.9, medical_min: 0.7, residential_min: 0.7, balanced_max: 0.3 },
    budget_n: null,
  },
  changed: [],
  category_totals_before: {
    SupplyChain: 0, MedicalAccess: 0, ResidentialProtection: 0, BalancedMultiUse: 0, Mixed: 0,
  },
  category_totals_after: {
    SupplyChain: 0, MedicalAccess: 0, ResidentialProtection: 0, BalancedMultiUse: 0, Mixed: 0,
  },
  coverage_before: { shop: 0, hospital: 0, residence: 0 },
  coverage_after: { shop: 0, hospital: 0, residence: 0 },
  coverage_delta: { shop: 0, hospital: 0, residence: 0 },
  budget: null,
};

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("GETs versioned endpoints", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse([{ bridge_id: 1 }]));
    vi.stubGlobal("fetch", fetchMock);
    const rows = await new ApiClient("http://x").getBridges();
    expect(fetchMock).toHaveBeenCalledWith("http://x/api/v1/bridges");
    expect(rows).toEqual([{ bridge_id: 1 }]);
  });

  it("raises ApiError with the service's message", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(jsonResponse({ error: "k_shop must be an integer >= 1" }, 400)),
    );
    const err = await new ApiClient().getMetrics().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(400);
    expect((err as ApiError).message).toContain("k_shop");
  });

  it("falls back to the status code on a non-JSON error body", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(new Response("<html>boom</html>", { status: 502 })),
    );
    const err = await new ApiClient().getOverlay().catch((e: unknown) => e);
    expect((err as ApiError).message).toBe("HTTP 502");
  });

  it("POSTs the what-if body as JSON", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(EMPTY_RESPONSE));
    vi.stubGlobal("fetch", fetchMock);
    const body: WhatIfRequestBody = { k_shop: 5 };
    await new ApiClient().postWhatIf(body);
    const [url, init] = fetchMock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/api/v1/whatif");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual({ k_shop: 5 });
  });
});

describe("WhatIfGate", () => {
  it("resolves a lone submission", async () => {
    const gate = new WhatIfGate(async () => EMPTY_RESPONSE);
    const result = await gate.submit({});
    expect(result).toEqual({ kind: "ok", response: EMPTY_RESPONSE });
    expect(gate.pending).toBe(false);
  });

  it("supersedes the pending request when a newer one arrives", async () => {
    const seen: AbortSignal[] = [];
    const gate = new WhatIfGate((_body, signal) => {
      seen.push(signal);
      return new Promise((resolve, reject) => {
        signal.addEventListener("abort", () => reject(new Error("aborted")));
        if (seen.length === 2) resolve(EMPTY_RESPONSE);
      });
    });
    const first = gate.submit({ k_shop: 3 });
    const second = gate.submit({ k_shop: 5 });
    expect(await first).toEqual({ kind: "superseded" });
    expect(await second).toEqual({ kind: "ok", response: EMPTY_RESPONSE });
    expect(seen[0].aborted).toBe(true);
    expect(seen[1].aborted).toBe(false);
  });

  it("only the newest of a burst wins", async () => {
    let calls = 0;
    const gate = new WhatIfGate((_body, signal) => {
      calls += 1;
      const mine = calls;
      return new Promise((resolve, reject) => {
        signal.addEventListener("abort", () => reject(new Error("aborted")));
        setTimeout(() => resolve({ ...EMPTY_RESPONSE, budget: null, changed: [] }), mine * 2);
      });
    });
    const results = await Promise.all([gate.submit({}), gate.submit({}), gate.submit({})]);
    expect(results.map((r) => r.kind)).toEqual(["superseded", "superseded", "ok"]);
  });

  it("reports a failure that was not superseded", async () => {
    const gate = new WhatIfGate(async () => {
      throw new ApiError("budget_n must be an integer in [1, 12]", 400);
    });
    const result = await gate.submit({ budget_n: 99 });
    expect(result.kind).toBe("error");
    if (result.kind === "error") expect(result.message).toContain("budget_n");
  });

  it("exposes pending while a request is in flight", async () => {
    let release!: () => void;
    const gate = new WhatIfGate(
      () =>
        new Promise((resolve) => {
          release = () => resolve(EMPTY_RESPONSE);
        }),
    );
    const pendingResult = gate.submit({});
    expect(gate.pending).toBe(true);
    release();
    await pendingResult;
    expect(gate.pending).toBe(false);
  });
});
