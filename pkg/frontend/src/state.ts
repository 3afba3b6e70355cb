/** Console state and the clamping rules applied before any request.
 *
 * The state holds the control values only; classification data always
 * comes back from the service, never from local recomputation.
 */

import type {
  MetricsPayload,
  Thresholds,
  WhatIfRequestBody,
  WhatIfResponse,
} from "./types.js";

export const K_MIN = 1;
export const K_MAX = 30;
export const THRESHOLD_STEP = 0.05;

export interface UiState {
  kShop: number;
  kHospital: number;
  kResidence: number;
  thresholds: Thresholds;
  budgetN: number | null;
  selectedBridgeId: number | null;
  lastDelta: WhatIfResponse | null;
  baseConfig: MetricsPayload["config"];
  contentHash: string;
  bridgeCount: number;
}

/** Clamp a k control to an integer in [K_MIN, K_MAX]; NaN resets low. */
export function clampK(value: number): number {
  if (Number.isNaN(value)) return K_MIN;
  return Math.min(K_MAX, Math.max(K_MIN, Math.round(value)));
}

/** Snap a threshold to the 0.05 grid inside [0, 1]; NaN resets to 0. */
export function clampThreshold(value: number): number {
  if (Number.isNaN(value)) return 0;
  const bounded = Math.min(1, Math.max(0, value));
  // Round in integer steps so 0.35 does not come back as 0.35000000000000003.
  return Math.round(bounded / THRESHOLD_STEP) / (1 / THRESHOLD_STEP);
}

/** Clamp a budget size to [1, bridgeCount]; null means no budget query. */
export function clampBudget(value: number | null, bridgeCount: number): number | null {
  if (value === null || Number.isNaN(value)) return null;
  return Math.min(Math.max(1, Math.round(value)), Math.max(1, bridgeCount));
}

export function initialState(metrics: MetricsPayload, bridgeCount: number): UiState {
  const config = metrics.config;
  return {
    kShop: clampK(config.k_shop),
    kHospital: clampK(config.k_hospital),
    kResidence: clampK(config.k_residence),
    thresholds: { ...config.thresholds },
    budgetN: null,
    selectedBridgeId: null,
    lastDelta: null,
    baseConfig: config,
    contentHash: metrics.content_hash,
    bridgeCount,
  };
}

/** Build the POST body, clamping every control first. */
export function buildRequest(state: UiState): WhatIfRequestBody {
  const body: WhatIfRequestBody = {
    k_shop: clampK(state.kShop),
    k_hospital: clampK(state.kHospital),
    k_residence: clampK(state.kResidence),
    thresholds: {
      supply_min: clampThreshold(state.thresholds.supply_min),
      medical_min: clampThreshold(state.thresholds.medical_min),
      residential_min: clampThreshold(state.thresholds.residential_min),
      balanced_max: clampThreshold(state.thresholds.balanced_max),
    },
  };
  const budget = clampBudget(state.budgetN, state.bridgeCount);
  if (budget !== null) {
    body.budget_n = budget;
  }
  return body;
}

/** True when the controls sit exactly at the snapshot's base config. */
export function isIdentityRequest(state: UiState): boolean {
  const base = state.baseConfig;
  const t = state.thresholds;
  const bt = base.thresholds;
  return (
    state.kShop === base.k_shop &&
    state.kHospital === base.k_hospital &&
    state.kResidence === base.k_residence &&
    t.supply_min === bt.supply_min &&
    t.medical_min === bt.medical_min &&
    t.residential_min === bt.residential_min &&
    t.balanced_max === bt.balanced_max
  );
}
