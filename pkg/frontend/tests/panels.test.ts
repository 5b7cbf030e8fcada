// @vitest-environment jsdom
import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiFault } from "../src/api.js";
import {
  createForecastPanel,
  createQueryPanel,
  createRecommendationPanel,
} from "../src/panels.js";
import type { Forecast, QueryResponse, Recommendation } from "../src/types.js";

// The same golden payloads the API tests pin, so the DOM assertions here
// can never drift away from what the service actually returns. vitest runs
// with cwd at frontend/, one level below the repo root.
const golden = <T>(name: string): T =>
  JSON.parse(
    readFileSync(resolve(process.cwd(), "..", "tests", "golden", `${name}.json`), "utf-8")
  ) as T;

const HASSAN = golden<Recommendation>("recommend_hassan");

const flush = () => new Promise((resolve) => setTimeout(resolve, 0));

function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (err: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

let host: HTMLElement;

beforeEach(() => {
  host = document.createElement("div");
});

describe("recommendation panel", () => {
  it("echoes every candidate field into the row's data attributes", () => {
    const panel = createRecommendationPanel(host);
    panel.render(HASSAN);
    const rows = host.querySelectorAll('[data-role="candidate"]');
    expect(rows.length).toBe(HASSAN.candidates.length);
    rows.forEach((row, i) => {
      const candidate = HASSAN.candidates[i]!;
      expect(row.getAttribute("data-crop")).toBe(candidate.crop);
      expect(Number(row.getAttribute("data-suitability"))).toBe(candidate.suitability);
      expect(Number(row.getAttribute("data-horizon"))).toBe(candidate.horizon_months);
      expect(Number(row.getAttribute("data-price"))).toBe(candidate.forecast_price);
    });
  });

  it("highlights exactly the crop the payload selected", () => {
    createRecommendationPanel(host).render(HASSAN);
    const highlighted = host.querySelectorAll("tr.is-selected");
    expect(highlighted.length).toBe(1);
    expect(highlighted[0]?.getAttribute("data-crop")).toBe(HASSAN.selected);
    expect(highlighted[0]?.querySelector(".badge")?.textContent).toBe("recommended");
  });

  it("renders a degraded candidate as an em dash and drops the data attrs", () => {
    const degraded: Recommendation = {
      ...HASSAN,
      candidates: [
        ...HASSAN.candidates,
        { crop: "Cocoa", suitability: 0.05, horizon_months: null, forecast_price: null },
      ],
      warnings: ["no growth-period entry for Cocoa; price forecast skipped"],
    };
    createRecommendationPanel(host).render(degraded);
    const row = host.querySelector('[data-role="candidate"][data-crop="Cocoa"]')!;
    expect(row.hasAttribute("data-horizon")).toBe(false);
    expect(row.hasAttribute("data-price")).toBe(false);
    expect(row.querySelector('[data-cell="horizon"]')?.textContent).toBe("—");
    expect(row.querySelector('[data-cell="price"]')?.textContent).toBe("—");
    const warning = host.querySelector('[data-role="warning"]');
    expect(warning?.textContent).toBe(degraded.warnings[0]);
  });

  it("paints the payload and notifies on a successful load", async () => {
    const onRecommendation = vi.fn();
    const panel = createRecommendationPanel(host, {
      postRecommend: async () => HASSAN,
      onRecommendation,
    });
    await panel.load({ district: "Hassan" });
    expect(host.querySelector('[data-role="district"]')?.textContent).toBe("Hassan");
    expect(onRecommendation).toHaveBeenCalledWith(HASSAN);
    expect(host.querySelector('[data-role="error-banner"]')).toBeNull();
  });

  it("shows API errors verbatim in a dismissible banner", async () => {
    const message = "override 'ph' must be within [0.0, 14.0], got 99.0";
    const panel = createRecommendationPanel(host, {
      postRecommend: async () => {
        throw new ApiFault(400, "invalid_override", message);
      },
    });
    await panel.load({ district: "Hassan", overrides: { ph: 99 } });
    expect(host.querySelector('[data-role="error-message"]')?.textContent).toBe(message);
    (host.querySelector('[data-role="dismiss"]') as HTMLButtonElement).click();
    expect(host.querySelector('[data-role="error-banner"]')).toBeNull();
  });

  it("retries the same request from the banner button", async () => {
    let calls = 0;
    const panel = createRecommendationPanel(host, {
      postRecommend: async () => {
        calls += 1;
        if (calls === 1) throw new ApiFault(503, "unavailable", "try again");
        return HASSAN;
      },
    });
    await panel.load({ district: "Hassan" });
    expect(host.querySelector('[data-role="error-banner"]')).not.toBeNull();
    (host.querySelector('[data-role="retry"]') as HTMLButtonElement).click();
    await flush();
    expect(calls).toBe(2);
    expect(host.querySelector('[data-role="error-banner"]')).toBeNull();
    expect(host.querySelectorAll('[data-role="candidate"]').length).toBe(3);
  });

  it("discards a stale response that resolves after a newer one", async () => {
    const slow = deferred<Recommendation>();
    const fast = deferred<Recommendation>();
    const responses = [slow, fast];
    const panel = createRecommendationPanel(host, {
      postRecommend: () => responses.shift()!.promise,
    });
    const first = panel.load({ district: "Hassan" });
    const second = panel.load({ district: "Mysuru" });
    fast.resolve({ ...HASSAN, district: "Mysuru" });
    await second;
    slow.resolve(HASSAN); // too late — the Hassan response must be dropped
    await first;
    expect(host.querySelector('[data-role="district"]')?.textContent).toBe("Mysuru");
  });
});

describe("forecast panel", () => {
  const fakeForecast = (crop: string, horizon: number): Forecast => ({
    crop,
    horizon_months: horizon,
    price_at_harvest: 100 + horizon,
    trajectory: Array.from({ length: horizon }, (_, i) => 100 + i + 1),
  });

  function makePanel() {
    const calls: Array<[string, number]> = [];
    const panel = createForecastPanel(host, {
      getForecast: async (crop, horizon) => {
        calls.push([crop, horizon]);
        return fakeForecast(crop, horizon);
      },
      horizonBounds: { min: 1, max: 24 },
    });
    return { panel, calls };
  }

  it("fetches one forecast per candidate at its own horizon", async () => {
    const { panel, calls } = makePanel();
    await panel.showCandidates(HASSAN);
    expect(calls).toEqual([
      ["Maize", 4],
      ["Coffee", 9],
      ["Pepper", 6],
    ]);
    for (const candidate of HASSAN.candidates) {
      const dots = host.querySelectorAll(`circle.dot[data-crop="${candidate.crop}"]`);
      expect(dots.length).toBe(candidate.horizon_months);
    }
    const activeChip = host.querySelector(".chip.is-active");
    expect(activeChip?.getAttribute("data-crop")).toBe(HASSAN.selected);
  });

  it("refetches only the active crop when the slider changes", async () => {
    const { panel, calls } = makePanel();
    await panel.showCandidates(HASSAN);
    calls.length = 0;

    const slider = host.querySelector<HTMLInputElement>('[data-role="horizon-slider"]')!;
    slider.value = "9";
    slider.dispatchEvent(new Event("change"));
    await flush();

    expect(calls).toEqual([["Pepper", 9]]);
    expect(host.querySelectorAll('circle.dot[data-crop="Pepper"]').length).toBe(9);
    // the other crops keep their original trajectories
    expect(host.querySelectorAll('circle.dot[data-crop="Maize"]').length).toBe(4);
  });

  it("keeps the old chart and shows a 404 inline", async () => {
    const { panel } = makePanel();
    await panel.showCandidates(HASSAN);
    const dotsBefore = host.querySelectorAll("circle.dot").length;

    const failing = createForecastPanel(host, {
      getForecast: async () => {
        throw new ApiFault(404, "unknown_crop", "unknown crop: 'Durian'");
      },
      horizonBounds: { min: 1, max: 24 },
    });
    await failing.refetch("Durian", 6);
    expect(host.querySelector('[data-role="inline-error"]')?.textContent).toBe(
      "unknown crop: 'Durian'"
    );
    expect(dotsBefore).toBeGreaterThan(0);
  });

  it("drops a stale slider fetch once a newer one has landed", async () => {
    const slow = deferred<Forecast>();
    const requests: Array<[string, number]> = [];
    const panel = createForecastPanel(host, {
      getForecast: (crop, horizon) => {
        requests.push([crop, horizon]);
        if (requests.length === 1) return slow.promise;
        return Promise.resolve(fakeForecast(crop, horizon));
      },
      horizonBounds: { min: 1, max: 24 },
    });
    panel.showForecast(fakeForecast("Pepper", 1)); // register the crop
    const first = panel.refetch("Pepper", 12);
    await panel.refetch("Pepper", 3);
    slow.resolve(fakeForecast("Pepper", 12));
    await first;
    expect(host.querySelectorAll('circle.dot[data-crop="Pepper"]').length).toBe(3);
  });
});

describe("query panel", () => {
  it("shows the server's help message for an unrecognised query", async () => {
    const response = golden<QueryResponse>("query_unknown");
    const panel = createQueryPanel(host, {
      postQuery: async () => response,
      onRecommendation: vi.fn(),
      onForecast: vi.fn(),
    });
    await panel.submit("what is the meaning of life");
    expect(host.querySelector('[data-role="help"]')?.textContent).toBe(response.message);
  });

  it("routes a recommendation result to the recommendation panel", async () => {
    const response = golden<QueryResponse>("query_recommend");
    const onRecommendation = vi.fn();
    const panel = createQueryPanel(host, {
      postQuery: async () => response,
      onRecommendation,
      onForecast: vi.fn(),
    });
    await panel.submit("recommend a crop for Hassan");
    expect(onRecommendation).toHaveBeenCalledWith(response.result);
    expect(host.querySelector('[data-role="help"]')?.textContent).toBe(
      "Showing the recommendation for Hassan."
    );
  });

  it("routes a forecast result to the chart panel", async () => {
    const response = golden<QueryResponse>("query_price");
    const onForecast = vi.fn();
    const panel = createQueryPanel(host, {
      postQuery: async () => response,
      onRecommendation: vi.fn(),
      onForecast,
    });
    await panel.submit("price of pepper in 3 months");
    expect(onForecast).toHaveBeenCalledWith(response.result);
    expect(host.querySelector('[data-role="help"]')?.textContent).toBe(
      "Showing the 3-month forecast for Pepper."
    );
  });

  it("submits through the form and clears errors on success", async () => {
    let fail = true;
    createQueryPanel(host, {
      postQuery: async () => {
        if (fail) throw new ApiFault(0, "network_error", "service unreachable — is the server running?");
        return golden<QueryResponse>("query_unknown");
      },
      onRecommendation: vi.fn(),
      onForecast: vi.fn(),
    });
    const input = host.querySelector<HTMLInputElement>('[data-role="query-input"]')!;
    const form = host.querySelector<HTMLFormElement>('[data-role="query-form"]')!;
    input.value = "hello";
    form.dispatchEvent(new Event("submit"));
    await flush();
    expect(host.querySelector('[data-role="error-message"]')?.textContent).toContain(
      "service unreachable"
    );
    fail = false;
    (host.querySelector('[data-role="retry"]') as HTMLButtonElement).click();
    await flush();
    expect(host.querySelector('[data-role="error-banner"]')).toBeNull();
  });
});
