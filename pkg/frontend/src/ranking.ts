/** Funding-list helpers over the service's budget ranking.
 *
 * The service decides the order; the console preserves it, verifying
 * only that ranks are the contiguous 1..n it documents.
 */

import type { BudgetRow } from "./types.js";

/** Bridge ids in service rank order; rejects gaps or duplicates. */
export function budgetHighlightIds(budget: BudgetRow[]): number[] {
  const sorted = [...budget].sort((a, b) => a.rank - b.rank);
  sorted.forEach((row, i) => {
    if (row.rank !== i + 1) {
      throw new Error(`budget ranks must be contiguous from 1, got ${row.rank} at position ${i}`);
    }
  });
  return sorted.map((row) => row.bridge_id);
}

export interface FundingEntry {
  rank: number;
  bridgeId: number;
  title: string;
  detail: string;
}

export function fundingEntries(budget: BudgetRow[]): FundingEntry[] {
  const sorted = [...budget].sort((a, b) => a.rank - b.rank);
  return sorted.map((row) => ({
    rank: row.rank,
    bridgeId: row.bridge_id,
    title: `${row.rank}. ${row.name || "(unnamed)"} #${row.bridge_id}`,
    detail: `${row.label}, confidence ${row.confidence.toFixed(3)}, ${row.total_paths} paths`,
  }));
}
