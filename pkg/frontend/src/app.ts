/** Console wiring: leaflet map, control panel, and the what-if loop.
 *
 * Data flow is strictly service -> state -> render. A what-if response
 * is always applied against the base snapshot models, because the
 * service computes its delta against the snapshot, not against the
 * previous request.
 */

import { ApiClient, WhatIfGate } from "./api.js";
import { applyDelta, applyHighlights } from "./delta.js";
import type { DeltaSummary } from "./delta.js";
import { buildMarkerIndex, detailRows, markerModels } from "./markers.js";
import type { MarkerModel } from "./markers.js";
import { CATEGORY_COLORS, CATEGORY_ORDER } from "./palette.js";
import { budgetHighlightIds, fundingEntries } from "./ranking.js";
import { buildRequest, clampBudget, clampK, clampThreshold, initialState } from "./state.js";
import type { UiState } from "./state.js";
import type { Thresholds, WhatIfResponse } from "./types.js";
import type { CircleMarker, Map as LeafletMap } from "leaflet";

const TILE_URL = "https://tile.openstreetmap.org/{z}/{x}/{y}.png";
const TILE_ATTRIBUTION = '&copy; <a href="https://www.openstreetmap.org/copyright">OpenStreetMap</a> contributors';

const BASE_STYLE = { radius: 8, weight: 1, color: "#26323d", fillOpacity: 0.9 };
const HIGHLIGHT_STYLE = { radius: 11, weight: 3, color: "#111111", fillOpacity: 1.0 };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function showBanner(message: string): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = message;
  banner.classList.remove("hidden");
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

class Console {
  private readonly api = new ApiClient("");
  private readonly gate: WhatIfGate;
  private state!: UiState;
  private baseModels: MarkerModel[] = [];
  private models: MarkerModel[] = [];
  private markers = new Map<number, CircleMarker>();
  private map!: LeafletMap;

  constructor() {
    this.gate = new WhatIfGate((body, signal) => this.api.postWhatIf(body, signal));
  }

  async boot(): Promise<void> {
    let overlay;
    let metrics;
    try {
      [overlay, metrics] = await Promise.all([this.api.getOverlay(), this.api.getMetrics()]);
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      showBanner(`Could not load snapshot data: ${message}`);
      return;
    }
    this.baseModels = markerModels(overlay);
    this.models = this.baseModels;
    this.state = initialState(metrics, this.baseModels.length);

    el<HTMLSpanElement>("meta-bridges").textContent = String(this.baseModels.length);
    el<HTMLSpanElement>("meta-hash").textContent = this.state.contentHash.slice(0, 12);

    this.initMap();
    this.initLegend();
    this.initControls();
    this.renderDelta(null);
    this.renderFunding(null);
  }

  private initMap(): void {
    this.map = L.map("map", { zoomSnap: 0.5 });
    const points = this.baseModels.map((m) => [m.lat, m.lon] as [number, number]);
    if (points.length > 0) {
      this.map.fitBounds(L.latLngBounds(points).pad(0.25));
    } else {
      this.map.setView([0, 0], 2);
    }

    const tiles = L.tileLayer(TILE_URL, { attribution: TILE_ATTRIBUTION, maxZoom: 19 });
    // Offline demos: first tile failure drops to a plain coordinate scatter.
    tiles.once("tileerror", () => {
      this.map.removeLayer(tiles);
      el<HTMLDivElement>("map").classList.add("scatter");
      el<HTMLDivElement>("scatter-note").classList.remove("hidden");
    });
    tiles.addTo(this.map);

    this.markers = buildMarkerIndex(this.baseModels, (model) => {
      const marker = L.circleMarker([model.lat, model.lon], {
        ...BASE_STYLE,
        fillColor: model.color,
      });
      marker.bindTooltip(`${model.name || "bridge"} #${model.bridgeId}`);
      marker.on("click", () => this.select(model.bridgeId));
      marker.addTo(this.map);
      return marker;
    });
  }

  private initLegend(): void {
    const legend = el<HTMLUListElement>("legend");
    for (const category of CATEGORY_ORDER) {
      const item = document.createElement("li");
      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.backgroundColor = CATEGORY_COLORS[category];
      item.appendChild(swatch);
      item.appendChild(document.createTextNode(category));
      legend.appendChild(item);
    }
  }

  private initControls(): void {
    const bindK = (id: string, get: () => number, set: (v: number) => void) => {
      const input = el<HTMLInputElement>(id);
      const readout = el<HTMLOutputElement>(`${id}-value`);
      input.value = String(get());
      readout.textContent = input.value;
      input.addEventListener("input", () => {
        set(clampK(Number(input.value)));
        readout.textContent = String(get());
      });
      input.addEventListener("change", () => void this.submit());
    };
    bindK("k-shop", () => this.state.kShop, (v) => (this.state.kShop = v));
    bindK("k-hospital", () => this.state.kHospital, (v) => (this.state.kHospital = v));
    bindK("k-residence", () => this.state.kResidence, (v) => (this.state.kResidence = v));

    const bindThreshold = (id: string, key: keyof Thresholds) => {
      const input = el<HTMLInputElement>(id);
      const readout = el<HTMLOutputElement>(`${id}-value`);
      input.value = String(this.state.thresholds[key]);
      readout.textContent = this.state.thresholds[key].toFixed(2);
      input.addEventListener("input", () => {
        this.state.thresholds[key] = clampThreshold(Number(input.value));
        readout.textContent = this.state.thresholds[key].toFixed(2);
      });
      input.addEventListener("change", () => void this.submit());
    };
    bindThreshold("t-supply", "supply_min");
    bindThreshold("t-medical", "medical_min");
    bindThreshold("t-residential", "residential_min");
    bindThreshold("t-balanced", "balanced_max");

    const budget = el<HTMLInputElement>("budget-n");
    budget.max = String(this.state.bridgeCount);
    budget.addEventListener("change", () => {
      const raw = budget.value.trim();
      this.state.budgetN = raw === "" ? null : clampBudget(Number(raw), this.state.bridgeCount);
      budget.value = this.state.budgetN === null ? "" : String(this.state.budgetN);
      void this.submit();
    });
    el<HTMLButtonElement>("budget-clear").addEventListener("click", () => {
      budget.value = "";
      this.state.budgetN = null;
      void this.submit();
    });

    el<HTMLButtonElement>("reset").addEventListener("click", () => {
      this.resetControls();
      void this.submit();
    });
  }

  private resetControls(): void {
    const base = this.state.baseConfig;
    this.state.kShop = base.k_shop;
    this.state.kHospital = base.k_hospital;
    this.state.kResidence = base.k_residence;
    this.state.thresholds = { ...base.thresholds };
    this.state.budgetN = null;
    for (const [id, value] of [
      ["k-shop", String(base.k_shop)],
      ["k-hospital", String(base.k_hospital)],
      ["k-residence", String(base.k_residence)],
      ["t-supply", String(base.thresholds.supply_min)],
      ["t-medical", String(base.thresholds.medical_min)],
      ["t-residential", String(base.thresholds.residential_min)],
      ["t-balanced", String(base.thresholds.balanced_max)],
    ] as const) {
      const input = el<HTMLInputElement>(id);
      input.value = value;
      const readout = el<HTMLOutputElement>(`${id}-value`);
      readout.textContent = id.startsWith("t-") ? Number(value).toFixed(2) : value;
    }
    el<HTMLInputElement>("budget-n").value = "";
  }

  private async submit(): Promise<void> {
    const status = el<HTMLParagraphElement>("status");
    status.textContent = "Running what-if...";
    status.classList.remove("error");
    const result = await this.gate.submit(buildRequest(this.state));
    if (result.kind === "superseded") return;
    if (result.kind === "error") {
      // Leave the previous map state untouched.
      status.textContent = `Request failed: ${result.message}`;
      status.classList.add("error");
      return;
    }
    status.textContent = "Up to date.";
    this.apply(result.response);
  }

  private apply(response: WhatIfResponse): void {
    this.state.lastDelta = response;
    const { models, summary } = applyDelta(this.baseModels, response);
    const highlightIds = response.budget === null
      ? new Set<number>()
      : new Set(budgetHighlightIds(response.budget));
    this.models = applyHighlights(models, highlightIds);
    this.repaint();
    this.renderDelta(summary);
    this.renderFunding(response);
    if (this.state.selectedBridgeId !== null) this.select(this.state.selectedBridgeId);
  }

  private repaint(): void {
    for (const model of this.models) {
      const marker = this.markers.get(model.bridgeId);
      if (marker === undefined) continue;
      marker.setStyle(
        model.highlighted
          ? { ...HIGHLIGHT_STYLE, fillColor: model.color }
          : { ...BASE_STYLE, fillColor: model.color },
      );
    }
  }

  private renderDelta(summary: DeltaSummary | null): void {
    const panel = el<HTMLDivElement>("delta");
    if (summary === null) {
      panel.innerHTML = "<p>Adjust the controls to run a what-if.</p>";
      return;
    }
    if (summary.noChanges) {
      panel.innerHTML = "<p><strong>No changes.</strong> Every bridge keeps its role.</p>";
      return;
    }
    const parts: string[] = [];
    parts.push(`<p><strong>${summary.changedIds.length}</strong> bridge(s) changed role.</p>`);
    if (summary.categoryChanges.length > 0) {
      parts.push("<ul>");
      for (const change of summary.categoryChanges) {
        parts.push(`<li>${change.category}: ${change.before} &rarr; ${change.after}</li>`);
      }
      parts.push("</ul>");
    }
    parts.push("<ul>");
    for (const cov of summary.coverageChanges) {
      const sign = cov.delta > 0 ? "+" : "";
      parts.push(
        `<li>${cov.kind} paths: ${cov.before} &rarr; ${cov.after} (${sign}${cov.delta})</li>`,
      );
    }
    parts.push("</ul>");
    panel.innerHTML = parts.join("");
  }

  private renderFunding(response: WhatIfResponse | null): void {
    const panel = el<HTMLDivElement>("funding");
    if (response === null || response.budget === null) {
      panel.innerHTML = "<p>Set a budget size to rank bridges for funding.</p>";
      return;
    }
    const entries = fundingEntries(response.budget);
    const items = entries.map(
      (entry) =>
        `<li><strong>${escapeHtml(entry.title)}</strong><br><small>${escapeHtml(entry.detail)}</small></li>`,
    );
    panel.innerHTML = `<ol class="funding-list">${items.join("")}</ol>`;
  }

  private select(bridgeId: number): void {
    this.state.selectedBridgeId = bridgeId;
    const model = this.models.find((m) => m.bridgeId === bridgeId);
    const panel = el<HTMLDivElement>("detail");
    if (model === undefined) {
      panel.innerHTML = "<p>Click a bridge marker for details.</p>";
      return;
    }
    const rows = detailRows(model)
      .map(([k, v]) => `<tr><th>${escapeHtml(k)}</th><td>${escapeHtml(v)}</td></tr>`)
      .join("");
    panel.innerHTML = `<table>${rows}</table>`;
  }
}

void new Console().boot();
