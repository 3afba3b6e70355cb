import { describe, expect, it } from "vitest";

import { buildMarkerIndex, detailRows, markerModels, modelIndex } from "../src/markers";
import type { OverlayCollection, OverlayFeature } from "../src/types";

function feature(id: number, lon: number, lat: number): OverlayFeature {
  return {
    type: "Feature",
    geometry: { type: "Point", coordinates: [lon, lat] },
    properties: {
      bridge_id: id,
      name: `Bridge ${id}`,
      category: "SupplyChain",
      label: "SupplyChain",
      confidence: 0.91,
      shop_paths: 9,
      hospital_paths: 1,
      residence_paths: 0,
      highway_count: 2,
      cluster_id: 0,
      color: "#1f77b4",
    },
  };
}

const OVERLAY: OverlayCollection = {
  type: "FeatureCollection",
  features: [feature(101, 139.69, 35.68), feature(102, 139.71, 35.7)],
};

describe("markerModels", () => {
  it("builds one model per feature", () => {
    const models = markerModels(OVERLAY);
    expect(models).toHaveLength(2);
    expect(models.map((m) => m.bridgeId)).toEqual([101, 102]);
  });

  it("swaps GeoJSON [lon, lat] into lat/lon fields", () => {
    const model = markerModels(OVERLAY)[0];
    expect(model.lat).toBeCloseTo(35.68, 10);
    expect(model.lon).toBeCloseTo(139.69, 10);
  });

  it("carries the service colour and counts verbatim", () => {
    const model = markerModels(OVERLAY)[0];
    expect(model.color).toBe("#1f77b4");
    expect(model.shopPaths).toBe(9);
    expect(model.confidence).toBe(0.91);
    expect(model.highlighted).toBe(false);
  });
});

describe("buildMarkerIndex", () => {
  it("invokes the factory exactly once per bridge", () => {
    const models = markerModels(OVERLAY);
    const made: number[] = [];
    const index = buildMarkerIndex(models, (m) => {
      made.push(m.bridgeId);
      return `marker-${m.bridgeId}`;
    });
    expect(made).toEqual([101, 102]);
    expect(index.size).toBe(models.length);
    expect(index.get(101)).toBe("marker-101");
  });

  it("rejects duplicate bridge ids", () => {
    const models = markerModels({
      type: "FeatureCollection",
      features: [feature(7, 0, 0), feature(7, 1, 1)],
    });
    expect(() => buildMarkerIndex(models, () => 0)).toThrow(/duplicate bridge_id 7/);
  });
});

describe("detailRows", () => {
  it("renders every displayed number from the model", () => {
    const rows = detailRows(markerModels(OVERLAY)[0]);
    const byKey = new Map(rows);
    expect(byKey.get("Bridge")).toBe("Bridge 101 #101");
    expect(byKey.get("Confidence")).toBe("0.910");
    expect(byKey.get("Shop paths")).toBe("9");
    expect(byKey.get("Cluster")).toBe("0");
  });

  it("renders negative cluster ids as noise", () => {
    const model = { ...markerModels(OVERLAY)[0], clusterId: -1 };
    expect(new Map(detailRows(model)).get("Cluster")).toBe("noise");
  });
});

describe("modelIndex", () => {
  it("keys models by bridge id", () => {
    const index = modelIndex(markerModels(OVERLAY));
    expect(index.get(102)?.name).toBe("Bridge 102");
  });
});
