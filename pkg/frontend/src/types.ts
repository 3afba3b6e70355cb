/** Shapes of the /api/v1 payloads the console consumes.
 *
 * Field names are the service's wire names; nothing here is recomputed
 * client side.
 */

export type Category =
  | "SupplyChain"
  | "MedicalAccess"
  | "ResidentialProtection"
  | "BalancedMultiUse"
  | "Mixed";

export type BuildingKind = "shop" | "hospital" | "residence";

export interface BridgeRow {
  bridge_id: number;
  name: string;
  lat: number;
  lon: number;
  span_m: number;
  year_built: number;
}

export interface ClassificationRow {
  bridge_id: number;
  name: string;
  lat: number;
  lon: number;
  shop_paths: number;
  hospital_paths: number;
  residence_paths: number;
  highway_count: number;
  category: Category;
  label: string;
  confidence: number;
  cluster_id: number;
  color: string;
}

export interface Embedding2dRow {
  bridge_id: number;
  u: number;
  v: number;
  cluster_id: number;
}

export interface Thresholds {
  supply_min: number;
  medical_min: number;
  residential_min: number;
  balanced_max: number;
}

/** Subset of GET /metrics the console reads; extra keys pass through. */
export interface MetricsPayload {
  counts: Record<string, number>;
  config: {
    k_shop: number;
    k_hospital: number;
    k_residence: number;
    radius_m: number;
    thresholds: Thresholds;
    [key: string]: unknown;
  };
  content_hash: string;
  [key: string]: unknown;
}

export interface OverlayProperties {
  bridge_id: number;
  name: string;
  category: Category;
  label: string;
  confidence: number;
  shop_paths: number;
  hospital_paths: number;
  residence_paths: number;
  highway_count: number;
  cluster_id: number;
  color: string;
}

export interface OverlayFeature {
  type: "Feature";
  geometry: { type: "Point"; coordinates: [number, number] };
  properties: OverlayProperties;
}

export interface OverlayCollection {
  type: "FeatureCollection";
  features: OverlayFeature[];
}

export interface WhatIfRequestBody {
  k_shop?: number;
  k_hospital?: number;
  k_residence?: number;
  thresholds?: Partial<Thresholds>;
  budget_n?: number;
}

export interface ChangedSide {
  category: Category;
  label: string;
  confidence: number;
  shop_paths: number;
  hospital_paths: number;
  residence_paths: number;
}

export interface ChangedRow {
  bridge_id: number;
  name: string;
  before: ChangedSide;
  after: ChangedSide;
}

export interface BudgetRow {
  rank: number;
  bridge_id: number;
  name: string;
  category: Category;
  label: string;
  confidence: number;
  total_paths: number;
  highway_count: number;
}

export interface WhatIfResponse {
  request: {
    k_shop: number;
    k_hospital: number;
    k_residence: number;
    thresholds: Thresholds;
    budget_n: number | null;
  };
  changed: ChangedRow[];
  category_totals_before: Record<Category, number>;
  category_totals_after: Record<Category, number>;
  coverage_before: Record<BuildingKind, number>;
  coverage_after: Record<BuildingKind, number>;
  coverage_delta: Record<BuildingKind, number>;
  budget: BudgetRow[] | null;
}

export interface ApiErrorBody {
  error: string;
}
