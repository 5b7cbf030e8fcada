// Boot: fetch server capabilities (the single source for slider and
// horizon bounds), build the controls, and wire the three panels
// together. No domain numbers originate here.

import { api } from "./api.js";
import {
  createForecastPanel,
  createQueryPanel,
  createRecommendationPanel,
  $,
  escapeHtml,
} from "./panels.js";
import {
  applyRecommendation,
  initialState,
  recommendBody,
  setDistrict,
  setPoint,
  touchSlider,
  type WhatIfState,
} from "./state.js";
import {
  FEATURE_LABELS,
  FEATURE_ORDER,
  type Capabilities,
  type FeatureName,
  type Recommendation,
} from "./types.js";

// Display granularity per slider; bounds always come from the server.
const SLIDER_STEPS: Record<FeatureName, number> = {
  n: 1,
  p: 1,
  k: 1,
  ph: 0.1,
  temperature: 0.5,
  humidity: 1,
  rainfall: 10,
};

function controlsHtml(caps: Capabilities): string {
  const options = caps.districts
    .map((d) => `<option value="${escapeHtml(d)}">${escapeHtml(d)}</option>`)
    .join("");
  const sliders = FEATURE_ORDER.map((name) => {
    const bounds = caps.override_bounds[name];
    if (!bounds) return "";
    const [lo, hi] = bounds;
    return (
      `<label class="slider-row" data-feature="${name}">` +
      `<span class="slider-label">${FEATURE_LABELS[name]}</span>` +
      `<input type="range" data-role="feature-slider" data-feature="${name}"` +
      ` min="${lo}" max="${hi}" step="${SLIDER_STEPS[name]}">` +
      `<input type="number" data-role="feature-number" data-feature="${name}"` +
      ` min="${lo}" max="${hi}" step="${SLIDER_STEPS[name]}">` +
      `</label>`
    );
  }).join("");
  return (
    `<div class="location-row">` +
    `<label>District <select data-role="district-select">${options}</select></label>` +
    `<span class="or">or</span>` +
    `<label>lat <input type="number" data-role="lat" step="0.01" placeholder="13.00"></label>` +
    `<label>lon <input type="number" data-role="lon" step="0.01" placeholder="76.10"></label>` +
    `<button type="button" data-role="use-point">Use coordinates</button>` +
    `</div>` +
    `<details class="overrides" open>` +
    `<summary>Soil &amp; weather overrides</summary>` +
    `<div class="sliders">${sliders}</div>` +
    `<button type="button" data-role="reset-overrides">Reset to district values</button>` +
    `</details>`
  );
}

function syncSliders(host: HTMLElement, state: WhatIfState): void {
  for (const name of FEATURE_ORDER) {
    const value = state.sliderValues[name];
    if (value === undefined) continue;
    const slider = $<HTMLInputElement>(`[data-role="feature-slider"][data-feature="${name}"]`, host);
    const number = $<HTMLInputElement>(`[data-role="feature-number"][data-feature="${name}"]`, host);
    if (slider && document.activeElement !== slider) slider.value = String(value);
    if (number && document.activeElement !== number) number.value = String(value);
  }
}

async function boot(): Promise<void> {
  const controls = $("#controls");
  const recHost = $('#recommendation [data-role="panel-body"]');
  const forecastHost = $('#forecast [data-role="panel-body"]');
  const queryHost = $('#query [data-role="panel-body"]');
  if (!controls || !recHost || !forecastHost || !queryHost) return;

  let caps: Capabilities;
  try {
    caps = await api.getCapabilities();
  } catch (err) {
    controls.innerHTML = `<div class="banner" role="alert">${escapeHtml(
      err instanceof Error ? err.message : String(err)
    )} — reload once the service is up.</div>`;
    return;
  }

  controls.innerHTML = controlsHtml(caps);
  const state = initialState(caps.districts[0] ?? "");

  const forecastPanel = createForecastPanel(forecastHost, {
    horizonBounds: caps.horizon_months,
  });

  const recommendationPanel = createRecommendationPanel(recHost, {
    onRecommendation: (rec: Recommendation) => {
      applyRecommendation(state, rec);
      syncSliders(controls, state);
      void forecastPanel.showCandidates(rec);
    },
  });

  createQueryPanel(queryHost, {
    onRecommendation: (rec) => {
      recommendationPanel.render(rec);
      applyRecommendation(state, rec);
      syncSliders(controls, state);
      void forecastPanel.showCandidates(rec);
    },
    onForecast: (forecast) => forecastPanel.showForecast(forecast),
  });

  const reload = () => void recommendationPanel.load(recommendBody(state));

  $<HTMLSelectElement>('[data-role="district-select"]', controls)?.addEventListener(
    "change",
    (event) => {
      setDistrict(state, (event.target as HTMLSelectElement).value);
      reload();
    }
  );

  $('[data-role="use-point"]', controls)?.addEventListener("click", () => {
    const lat = Number($<HTMLInputElement>('[data-role="lat"]', controls)?.value);
    const lon = Number($<HTMLInputElement>('[data-role="lon"]', controls)?.value);
    if (!Number.isFinite(lat) || !Number.isFinite(lon)) return;
    setPoint(state, lat, lon);
    reload();
  });

  controls.addEventListener("change", (event) => {
    const target = event.target as HTMLInputElement;
    const role = target.getAttribute("data-role");
    if (role !== "feature-slider" && role !== "feature-number") return;
    const feature = target.getAttribute("data-feature") as FeatureName | null;
    const value = Number(target.value);
    if (!feature || !Number.isFinite(value)) return;
    touchSlider(state, feature, value);
    syncSliders(controls, state);
    reload();
  });

  $('[data-role="reset-overrides"]', controls)?.addEventListener("click", () => {
    state.overrides = {};
    reload();
  });

  reload();
}

void boot();
