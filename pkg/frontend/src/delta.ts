/** Apply a what-if response to the marker models.
 *
 * Only bridges named in the response delta change; every other model is
 * returned as the same object so a renderer can repaint exactly the
 * changed set.
 */

import { categoryColor, CATEGORY_ORDER } from "./palette.js";
import type { MarkerModel } from "./markers.js";
import type { BuildingKind, Category, WhatIfResponse } from "./types.js";

export interface CategoryChange {
  category: Category;
  before: number;
  after: number;
}

export interface CoverageChange {
  kind: BuildingKind;
  before: number;
  after: number;
  delta: number;
}

export interface DeltaSummary {
  noChanges: boolean;
  changedIds: number[];
  categoryChanges: CategoryChange[];
  coverageChanges: CoverageChange[];
}

export interface DeltaApplication {
  models: MarkerModel[];
  summary: DeltaSummary;
}

const COVERAGE_KINDS: BuildingKind[] = ["shop", "hospital", "residence"];

export function summarize(response: WhatIfResponse): DeltaSummary {
  const categoryChanges: CategoryChange[] = [];
  for (const category of CATEGORY_ORDER) {
    const before = response.category_totals_before[category] ?? 0;
    const after = response.category_totals_after[category] ?? 0;
    if (before !== after) categoryChanges.push({ category, before, after });
  }
  const coverageChanges = COVERAGE_KINDS.map((kind) => ({
    kind,
    before: response.coverage_before[kind] ?? 0,
    after: response.coverage_after[kind] ?? 0,
    delta: response.coverage_delta[kind] ?? 0,
  }));
  return {
    noChanges: response.changed.length === 0,
    changedIds: response.changed.map((row) => row.bridge_id),
    categoryChanges,
    coverageChanges,
  };
}

export function applyDelta(models: MarkerModel[], response: WhatIfResponse): DeltaApplication {
  const changedById = new Map(response.changed.map((row) => [row.bridge_id, row]));
  const next = models.map((model) => {
    const row = changedById.get(model.bridgeId);
    if (row === undefined) return model;
    return {
      ...model,
      category: row.after.category,
      label: row.after.label,
      confidence: row.after.confidence,
      shopPaths: row.after.shop_paths,
      hospitalPaths: row.after.hospital_paths,
      residencePaths: row.after.residence_paths,
      color: categoryColor(row.after.category),
    };
  });
  return { models: next, summary: summarize(response) };
}

/** Set the highlighted flag on exactly the given bridges. */
export function applyHighlights(models: MarkerModel[], ids: Set<number>): MarkerModel[] {
  return models.map((model) => {
    const wanted = ids.has(model.bridgeId);
    if (model.highlighted === wanted) return model;
    return { ...model, highlighted: wanted };
  });
}
