// Thin fetch client for /api/v1. The base URL is configurable at runtime
// (window.CROPCAST_API_BASE) and at build time (the api-base <meta> tag);
// empty string means same-origin.

import type {
  Capabilities,
  DistrictInfo,
  Forecast,
  QueryResponse,
  Recommendation,
  RecommendBody,
} from "./types.js";

export class ApiFault extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string
  ) {
    super(message);
    this.name = "ApiFault";
  }
}

export function apiBase(): string {
  const runtime = (globalThis as Record<string, unknown>)["CROPCAST_API_BASE"];
  if (typeof runtime === "string") return runtime.replace(/\/+$/, "");
  if (typeof document !== "undefined") {
    const meta = document.querySelector<HTMLMetaElement>('meta[name="api-base"]');
    if (meta?.content) return meta.content.replace(/\/+$/, "");
  }
  return "";
}

async function call<T>(path: string, init?: RequestInit): Promise<T> {
  let response: Response;
  try {
    response = await fetch(apiBase() + "/api/v1" + path, init);
  } catch (err) {
    if ((err as Error).name === "AbortError") throw err;
    throw new ApiFault(0, "network_error", "service unreachable — is the server running?");
  }
  const text = await response.text();
  if (!response.ok) {
    // Error bodies are {"code", "message"}; surface the message verbatim.
    try {
      const body = JSON.parse(text) as { code?: string; message?: string };
      throw new ApiFault(
        response.status,
        body.code ?? "http_error",
        body.message ?? `HTTP ${response.status}`
      );
    } catch (err) {
      if (err instanceof ApiFault) throw err;
      throw new ApiFault(response.status, "http_error", `HTTP ${response.status}`);
    }
  }
  return JSON.parse(text) as T;
}

const JSON_HEADERS = { "Content-Type": "application/json" };

export function getCapabilities(signal?: AbortSignal): Promise<Capabilities> {
  return call("/capabilities", { signal });
}

export function getDistricts(signal?: AbortSignal): Promise<DistrictInfo[]> {
  return call("/districts", { signal });
}

export function postRecommend(body: RecommendBody, signal?: AbortSignal): Promise<Recommendation> {
  return call("/recommend", {
    method: "POST",
    headers: JSON_HEADERS,
    body: JSON.stringify(body),
    signal,
  });
}

export function getForecast(
  crop: string,
  horizon: number,
  signal?: AbortSignal
): Promise<Forecast> {
  return call(`/forecast/${encodeURIComponent(crop)}?horizon=${horizon}`, { signal });
}

export function postQuery(text: string, signal?: AbortSignal): Promise<QueryResponse> {
  return call("/query", {
    method: "POST",
    headers: JSON_HEADERS,
    body: JSON.stringify({ text }),
    signal,
  });
}

export interface Api {
  getCapabilities: typeof getCapabilities;
  getDistricts: typeof getDistricts;
  postRecommend: typeof postRecommend;
  getForecast: typeof getForecast;
  postQuery: typeof postQuery;
}

export const api: Api = { getCapabilities, getDistricts, postRecommend, getForecast, postQuery };
