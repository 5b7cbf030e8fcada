// Shapes of the /api/v1 JSON payloads. The UI never computes domain
// numbers itself — everything rendered comes straight from these fields.

export type FeatureName =
  | "n"
  | "p"
  | "k"
  | "ph"
  | "temperature"
  | "humidity"
  | "rainfall";

// Slider display order (soil nutrients, then pH, then weather).
export const FEATURE_ORDER: FeatureName[] = [
  "n",
  "p",
  "k",
  "ph",
  "temperature",
  "humidity",
  "rainfall",
];

export const FEATURE_LABELS: Record<FeatureName, string> = {
  n: "Nitrogen (N)",
  p: "Phosphorus (P)",
  k: "Potassium (K)",
  ph: "Soil pH",
  temperature: "Temperature °C",
  humidity: "Humidity %",
  rainfall: "Rainfall mm",
};

export interface Capabilities {
  crops: string[];
  districts: string[];
  horizon_months: { min: number; max: number };
  override_bounds: Record<string, [number, number]>;
}

export interface DistrictInfo {
  district: string;
  lat: number;
  lon: number;
  soil: { n: number; p: number; k: number; ph: number };
}

export interface CandidateCrop {
  crop: string;
  suitability: number;
  // Both are null when the crop has no growth-period entry or price model;
  // the server explains why in `warnings`.
  horizon_months: number | null;
  forecast_price: number | null;
}

export interface Recommendation {
  district: string;
  features_used: Record<string, number>;
  candidates: CandidateCrop[];
  selected: string;
  explanation: string;
  warnings: string[];
}

export interface Forecast {
  crop: string;
  horizon_months: number;
  price_at_harvest: number;
  trajectory: number[];
}

export interface Intent {
  kind: string;
  slots: Record<string, unknown>;
}

export interface QueryResponse {
  intent: Intent;
  result: Recommendation | Forecast | null;
  message?: string;
}

export interface RecommendBody {
  district?: string;
  lat?: number;
  lon?: number;
  overrides?: Partial<Record<FeatureName, number>>;
}

export function isRecommendation(
  result: Recommendation | Forecast | null
): result is Recommendation {
  return result !== null && "candidates" in result;
}

export function isForecast(result: Recommendation | Forecast | null): result is Forecast {
  return result !== null && "trajectory" in result;
}
