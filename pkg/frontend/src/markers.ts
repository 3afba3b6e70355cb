/** Marker view-models: one per overlay feature, colour from the service.
 *
 * The map layer renders these one-to-one; everything shown in a popup
 * or panel is a field the service sent.
 */

import type { Category, OverlayCollection, OverlayProperties } from "./types.js";

export interface MarkerModel {
  bridgeId: number;
  name: string;
  lat: number;
  lon: number;
  category: Category;
  label: string;
  confidence: number;
  shopPaths: number;
  hospitalPaths: number;
  residencePaths: number;
  highwayCount: number;
  clusterId: number;
  color: string;
  highlighted: boolean;
}

function fromProperties(props: OverlayProperties, lat: number, lon: number): MarkerModel {
  return {
    bridgeId: props.bridge_id,
    name: props.name,
    lat,
    lon,
    category: props.category,
    label: props.label,
    confidence: props.confidence,
    shopPaths: props.shop_paths,
    hospitalPaths: props.hospital_paths,
    residencePaths: props.residence_paths,
    highwayCount: props.highway_count,
    clusterId: props.cluster_id,
    color: props.color,
    highlighted: false,
  };
}

/** One model per feature; GeoJSON order is [lon, lat]. */
export function markerModels(overlay: OverlayCollection): MarkerModel[] {
  return overlay.features.map((feature) => {
    const [lon, lat] = feature.geometry.coordinates;
    return fromProperties(feature.properties, lat, lon);
  });
}

/** Popup body for a marker; plain text assembled into table rows. */
export function detailRows(model: MarkerModel): Array<[string, string]> {
  return [
    ["Bridge", `${model.name || "(unnamed)"} #${model.bridgeId}`],
    ["Role", model.label],
    ["Confidence", model.confidence.toFixed(3)],
    ["Shop paths", String(model.shopPaths)],
    ["Hospital paths", String(model.hospitalPaths)],
    ["Residence paths", String(model.residencePaths)],
    ["Trunk junctions", String(model.highwayCount)],
    ["Cluster", model.clusterId < 0 ? "noise" : String(model.clusterId)],
  ];
}

export function modelIndex(models: MarkerModel[]): Map<number, MarkerModel> {
  return new Map(models.map((m) => [m.bridgeId, m]));
}

/** Build one rendered marker per model through the given factory.
 *
 * The leaflet layer construction funnels through here so the contract
 * (exactly one marker per bridge) is testable without a DOM.
 */
export function buildMarkerIndex<T>(
  models: MarkerModel[],
  factory: (model: MarkerModel) => T,
): Map<number, T> {
  const index = new Map<number, T>();
  for (const model of models) {
    if (index.has(model.bridgeId)) {
      throw new Error(`duplicate bridge_id ${model.bridgeId} in overlay`);
    }
    index.set(model.bridgeId, factory(model));
  }
  return index;
}
