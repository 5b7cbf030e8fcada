// The three dashboard panels. Each one owns a Sequencer so a stale
// response can never repaint over a newer one, and each renders API
// errors as a dismissible banner (or inline note) instead of a blank
// panel. Raw payload values ride along in data-* attributes.

import { ApiFault, api, type Api } from "./api.js";
import { renderForecastChart } from "./chart.js";
import { Sequencer } from "./state.js";
import {
  isForecast,
  isRecommendation,
  type CandidateCrop,
  type Forecast,
  type QueryResponse,
  type Recommendation,
  type RecommendBody,
} from "./types.js";

export const $ = <T extends HTMLElement = HTMLElement>(
  sel: string,
  ctx: Document | HTMLElement = document
): T | null => ctx.querySelector<T>(sel);

export const escapeHtml = (value: unknown): string =>
  String(value ?? "")
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");

const fmtPrice = (price: number | null): string =>
  price === null ? "—" : `₹${price.toFixed(2)}/kg`;

const fmtHorizon = (months: number | null): string => (months === null ? "—" : `${months} mo`);

function faultMessage(err: unknown): string {
  if (err instanceof ApiFault) return err.message;
  return err instanceof Error ? err.message : String(err);
}

function bannerHtml(message: string, withRetry: boolean): string {
  return (
    `<div class="banner" role="alert" data-role="error-banner">` +
    `<span data-role="error-message">${escapeHtml(message)}</span>` +
    (withRetry ? `<button type="button" data-role="retry">Retry</button>` : "") +
    `<button type="button" data-role="dismiss">Dismiss</button>` +
    `</div>`
  );
}

function showBanner(slot: HTMLElement, message: string, onRetry: (() => void) | null): void {
  slot.innerHTML = bannerHtml(message, onRetry !== null);
  $('[data-role="dismiss"]', slot)?.addEventListener("click", () => {
    slot.innerHTML = "";
  });
  if (onRetry) {
    $('[data-role="retry"]', slot)?.addEventListener("click", () => {
      slot.innerHTML = "";
      onRetry();
    });
  }
}

// ---------------------------------------------------------------------------
// Recommendation panel
// ---------------------------------------------------------------------------

export interface RecommendationPanel {
  load(body: RecommendBody): Promise<void>;
  render(rec: Recommendation): void;
}

export function createRecommendationPanel(
  host: HTMLElement,
  deps: {
    postRecommend?: Api["postRecommend"];
    onRecommendation?: (rec: Recommendation) => void;
  } = {}
): RecommendationPanel {
  const postRecommend = deps.postRecommend ?? api.postRecommend;
  const seq = new Sequencer();
  host.innerHTML =
    `<div data-role="banner-slot"></div>` +
    `<div data-role="status" class="status"></div>` +
    `<div data-role="content"></div>`;
  const bannerSlot = $('[data-role="banner-slot"]', host)!;
  const status = $('[data-role="status"]', host)!;
  const content = $('[data-role="content"]', host)!;

  function candidateRow(candidate: CandidateCrop, selected: string): string {
    const isSelected = candidate.crop === selected;
    const dataAttrs =
      ` data-crop="${escapeHtml(candidate.crop)}"` +
      ` data-suitability="${candidate.suitability}"` +
      (candidate.horizon_months === null ? "" : ` data-horizon="${candidate.horizon_months}"`) +
      (candidate.forecast_price === null ? "" : ` data-price="${candidate.forecast_price}"`);
    return (
      `<tr data-role="candidate"${dataAttrs}${isSelected ? ' class="is-selected"' : ""}>` +
      `<td class="crop">${escapeHtml(candidate.crop)}` +
      (isSelected ? ` <span class="badge">recommended</span>` : "") +
      `</td>` +
      `<td data-cell="suitability">${candidate.suitability}</td>` +
      `<td data-cell="horizon">${fmtHorizon(candidate.horizon_months)}</td>` +
      `<td data-cell="price">${fmtPrice(candidate.forecast_price)}</td>` +
      `</tr>`
    );
  }

  function render(rec: Recommendation): void {
    const warnings = rec.warnings
      .map((w) => `<li data-role="warning">${escapeHtml(w)}</li>`)
      .join("");
    content.innerHTML =
      `<p class="district-line">District: <strong data-role="district">${escapeHtml(rec.district)}</strong></p>` +
      `<table class="candidates">` +
      `<thead><tr><th>Crop</th><th>Suitability</th><th>Harvest</th><th>Forecast price</th></tr></thead>` +
      `<tbody>${rec.candidates.map((c) => candidateRow(c, rec.selected)).join("")}</tbody>` +
      `</table>` +
      (warnings ? `<ul class="warnings">${warnings}</ul>` : "") +
      `<p class="explanation" data-role="explanation">${escapeHtml(rec.explanation)}</p>`;
  }

  async function load(body: RecommendBody): Promise<void> {
    const { token, signal } = seq.begin();
    status.textContent = "Loading…";
    try {
      const rec = await postRecommend(body, signal);
      if (!seq.isCurrent(token)) return;
      status.textContent = "";
      bannerSlot.innerHTML = "";
      render(rec);
      deps.onRecommendation?.(rec);
    } catch (err) {
      if (!seq.isCurrent(token)) return;
      status.textContent = "";
      showBanner(bannerSlot, faultMessage(err), () => void load(body));
    }
  }

  return { load, render };
}

// ---------------------------------------------------------------------------
// Forecast chart panel
// ---------------------------------------------------------------------------

export interface ForecastPanel {
  showCandidates(rec: Recommendation): Promise<void>;
  showForecast(forecast: Forecast): void;
  refetch(crop: string, horizon: number): Promise<void>;
}

export function createForecastPanel(
  host: HTMLElement,
  deps: {
    getForecast?: Api["getForecast"];
    horizonBounds: { min: number; max: number };
  }
): ForecastPanel {
  const getForecast = deps.getForecast ?? api.getForecast;
  const { min, max } = deps.horizonBounds;
  const seq = new Sequencer();

  let crops: string[] = [];
  let active: string | null = null;
  const horizons: Record<string, number> = {};
  const cache = new Map<string, Forecast>();

  host.innerHTML =
    `<div data-role="chips" class="chips"></div>` +
    `<label class="horizon-control">Harvest horizon ` +
    `<input type="range" data-role="horizon-slider" min="${min}" max="${max}" step="1" value="${min}">` +
    ` <output data-role="horizon-value">${min}</output> months</label>` +
    `<div data-role="inline-error" class="inline-error"></div>` +
    `<div data-role="chart" class="chart"></div>`;

  const chipsEl = $('[data-role="chips"]', host)!;
  const slider = $<HTMLInputElement>('[data-role="horizon-slider"]', host)!;
  const sliderValue = $('[data-role="horizon-value"]', host)!;
  const inlineError = $('[data-role="inline-error"]', host)!;
  const chartEl = $('[data-role="chart"]', host)!;

  const clamp = (h: number) => Math.min(max, Math.max(min, h));

  function renderChips(): void {
    chipsEl.innerHTML = crops
      .map(
        (crop) =>
          `<button type="button" class="chip${crop === active ? " is-active" : ""}"` +
          ` data-role="chip" data-crop="${escapeHtml(crop)}">${escapeHtml(crop)}</button>`
      )
      .join("");
    chipsEl.querySelectorAll<HTMLButtonElement>('[data-role="chip"]').forEach((chip) => {
      chip.addEventListener("click", () => {
        active = chip.dataset["crop"]!;
        slider.value = String(horizons[active] ?? min);
        sliderValue.textContent = slider.value;
        renderChips();
      });
    });
  }

  function redraw(): void {
    const visible = crops
      .map((crop) => cache.get(crop))
      .filter((f): f is Forecast => f !== undefined);
    renderForecastChart(chartEl, visible);
  }

  async function refetch(crop: string, horizon: number): Promise<void> {
    const { token, signal } = seq.begin();
    inlineError.textContent = "";
    try {
      const forecast = await getForecast(crop, horizon, signal);
      if (!seq.isCurrent(token)) return;
      cache.set(crop, forecast);
      redraw();
    } catch (err) {
      if (!seq.isCurrent(token)) return;
      // An unknown crop (404) and the like stay inline; the chart keeps
      // showing whatever it had rather than going blank.
      inlineError.textContent = faultMessage(err);
    }
  }

  slider.addEventListener("change", () => {
    if (active === null) return;
    const horizon = clamp(Number(slider.value));
    horizons[active] = horizon;
    sliderValue.textContent = String(horizon);
    void refetch(active, horizon);
  });
  slider.addEventListener("input", () => {
    sliderValue.textContent = slider.value;
  });

  async function showCandidates(rec: Recommendation): Promise<void> {
    crops = rec.candidates.map((c) => c.crop);
    for (const candidate of rec.candidates) {
      horizons[candidate.crop] = clamp(candidate.horizon_months ?? min);
    }
    active = rec.selected;
    slider.value = String(horizons[active] ?? min);
    sliderValue.textContent = slider.value;
    renderChips();

    // One request per candidate; the shared token means a newer state
    // change throws the whole stale batch away.
    const { token, signal } = seq.begin();
    inlineError.textContent = "";
    try {
      const fetched = await Promise.all(
        crops.map((crop) => getForecast(crop, horizons[crop]!, signal))
      );
      if (!seq.isCurrent(token)) return;
      for (const forecast of fetched) cache.set(forecast.crop, forecast);
      redraw();
    } catch (err) {
      if (!seq.isCurrent(token)) return;
      inlineError.textContent = faultMessage(err);
    }
  }

  function showForecast(forecast: Forecast): void {
    if (!crops.includes(forecast.crop)) crops = [...crops, forecast.crop];
    horizons[forecast.crop] = clamp(forecast.horizon_months);
    cache.set(forecast.crop, forecast);
    active = forecast.crop;
    slider.value = String(horizons[forecast.crop]);
    sliderValue.textContent = slider.value;
    renderChips();
    redraw();
  }

  return { showCandidates, showForecast, refetch };
}

// ---------------------------------------------------------------------------
// Text query panel
// ---------------------------------------------------------------------------

export interface QueryPanel {
  submit(text: string): Promise<void>;
}

export function createQueryPanel(
  host: HTMLElement,
  deps: {
    postQuery?: Api["postQuery"];
    onRecommendation: (rec: Recommendation) => void;
    onForecast: (forecast: Forecast) => void;
  }
): QueryPanel {
  const postQuery = deps.postQuery ?? api.postQuery;
  const seq = new Sequencer();

  host.innerHTML =
    `<form data-role="query-form" class="query-form">` +
    `<input type="text" data-role="query-input" placeholder="e.g. recommend a crop for Hassan">` +
    `<button type="submit">Ask</button>` +
    `</form>` +
    `<div data-role="banner-slot"></div>` +
    `<p data-role="help" class="help" aria-live="polite"></p>`;

  const form = $<HTMLFormElement>('[data-role="query-form"]', host)!;
  const input = $<HTMLInputElement>('[data-role="query-input"]', host)!;
  const bannerSlot = $('[data-role="banner-slot"]', host)!;
  const help = $('[data-role="help"]', host)!;

  function route(response: QueryResponse): void {
    if (isRecommendation(response.result)) {
      help.textContent = `Showing the recommendation for ${response.result.district}.`;
      deps.onRecommendation(response.result);
      return;
    }
    if (isForecast(response.result)) {
      const f = response.result;
      help.textContent = `Showing the ${f.horizon_months}-month forecast for ${f.crop}.`;
      deps.onForecast(f);
      return;
    }
    help.textContent = response.message ?? "";
  }

  async function submit(text: string): Promise<void> {
    const { token, signal } = seq.begin();
    help.textContent = "Thinking…";
    try {
      const response = await postQuery(text, signal);
      if (!seq.isCurrent(token)) return;
      bannerSlot.innerHTML = "";
      route(response);
    } catch (err) {
      if (!seq.isCurrent(token)) return;
      help.textContent = "";
      showBanner(bannerSlot, faultMessage(err), () => void submit(text));
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (text) void submit(text);
  });

  return { submit };
}
