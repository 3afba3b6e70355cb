/** Category colours, the wire contract with the overlay export.
 *
 * The service stamps each overlay feature and classification row with a
 * `color` already; this table exists for the legend and for recolouring
 * after a what-if, and must byte-match the served values.
 */

import type { Category } from "./types.js";

export const CATEGORY_COLORS: Record<Category, string> = {
  SupplyChain: "#1f77b4",
  MedicalAccess: "#d62728",
  ResidentialProtection: "#2ca02c",
  BalancedMultiUse: "#7f7f7f",
  Mixed: "#ff7f0e",
};

/** Display order for the legend and delta panel, most urgent first. */
export const CATEGORY_ORDER: Category[] = [
  "SupplyChain",
  "MedicalAccess",
  "ResidentialProtection",
  "Mixed",
  "BalancedMultiUse",
];

export function categoryColor(category: Category): string {
  return CATEGORY_COLORS[category];
}
