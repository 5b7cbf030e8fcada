// WhatIfState and the per-panel request sequencing.
//
// Overrides hold only sliders the user actually touched, so an untouched
// dashboard sends no overrides and reproduces the plain recommendation
// for the district. Slider positions themselves are seeded from the
// server's features_used after each response.

import type { FeatureName, Recommendation, RecommendBody } from "./types.js";

export type LocationChoice =
  | { kind: "district"; district: string }
  | { kind: "point"; lat: number; lon: number };

export type RequestStatus = "idle" | "loading" | "ok" | "error";

export interface WhatIfState {
  location: LocationChoice;
  overrides: Partial<Record<FeatureName, number>>;
  sliderValues: Partial<Record<FeatureName, number>>;
  horizonByCrop: Record<string, number>;
  lastRecommendation: Recommendation | null;
  status: RequestStatus;
  error: string | null;
}

export function initialState(district: string): WhatIfState {
  return {
    location: { kind: "district", district },
    overrides: {},
    sliderValues: {},
    horizonByCrop: {},
    lastRecommendation: null,
    status: "idle",
    error: null,
  };
}

export function setDistrict(state: WhatIfState, district: string): void {
  state.location = { kind: "district", district };
  // A new place is a new baseline; stale overrides would silently distort it.
  state.overrides = {};
  state.horizonByCrop = {};
}

export function setPoint(state: WhatIfState, lat: number, lon: number): void {
  state.location = { kind: "point", lat, lon };
  state.overrides = {};
  state.horizonByCrop = {};
}

export function touchSlider(state: WhatIfState, name: FeatureName, value: number): void {
  state.overrides[name] = value;
  state.sliderValues[name] = value;
}

export function recommendBody(state: WhatIfState): RecommendBody {
  const body: RecommendBody =
    state.location.kind === "district"
      ? { district: state.location.district }
      : { lat: state.location.lat, lon: state.location.lon };
  if (Object.keys(state.overrides).length > 0) {
    body.overrides = { ...state.overrides };
  }
  return body;
}

export function applyRecommendation(state: WhatIfState, rec: Recommendation): void {
  state.lastRecommendation = rec;
  state.status = "ok";
  state.error = null;
  for (const [name, value] of Object.entries(rec.features_used)) {
    const feature = name as FeatureName;
    if (!(feature in state.overrides)) {
      state.sliderValues[feature] = value;
    }
  }
  for (const candidate of rec.candidates) {
    if (candidate.horizon_months !== null && !(candidate.crop in state.horizonByCrop)) {
      state.horizonByCrop[candidate.crop] = candidate.horizon_months;
    }
  }
}

export function horizonFor(state: WhatIfState, crop: string, fallback: number): number {
  return state.horizonByCrop[crop] ?? fallback;
}

/**
 * One of these per panel. `begin()` aborts the previous in-flight request
 * and hands out a token; handlers check `isCurrent(token)` before touching
 * the DOM, so a superseded response can never overwrite a newer one.
 */
export class Sequencer {
  private current = 0;
  private controller: AbortController | null = null;

  begin(): { token: number; signal: AbortSignal } {
    this.controller?.abort();
    this.controller = new AbortController();
    this.current += 1;
    return { token: this.current, signal: this.controller.signal };
  }

  isCurrent(token: number): boolean {
    return token === this.current;
  }
}
