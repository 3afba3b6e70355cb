/** Leaflet is loaded as a classic script in index.html; only the types
 * come from the package. */

import type * as Leaflet from "leaflet";

declare global {
  const L: typeof Leaflet;
}

export {};
