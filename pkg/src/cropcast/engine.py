"""Pipeline orchestration: location → features → top-3 crops → price-driven pick.

The recommendation flow resolves a district (by name or nearest centroid),
assembles the 7-feature vector from soil, live/fixture weather, and the
district's long-term rainfall, takes the forest's top-3 crops by
suitability, forecasts each crop's price at its own growth horizon, and
selects the highest forecast price. Candidates without a usable price
model degrade to warnings instead of failing the whole call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .data_ingest import FEATURE_FIELDS, SoilProfile, read_csv_rows
from .errors import (
    MissingPriceModel,
    NoForecastAvailable,
    RowParseError,
    UnknownDistrict,
    WeatherUnavailable,
)
from .errors import CropcastError
from .forest import ForestModel, predict_proba, top_k_crops
from .geocode import GeoPoint, nearest_district
from .lstm import ForecastResult
from .weather import WeatherSnapshot

GROWTH_COLUMNS = ("crop", "months")
RAINFALL_COLUMNS = ("district", "rainfall")

# Bounds for user-supplied override values (same limits the loaders apply).
FEATURE_BOUNDS: dict[str, tuple[float, float]] = {
    "n": (0.0, 1000.0),
    "p": (0.0, 1000.0),
    "k": (0.0, 1000.0),
    "temperature": (-50.0, 60.0),
    "humidity": (0.0, 100.0),
    "ph": (0.0, 14.0),
    "rainfall": (0.0, 20000.0),
}


@dataclass(frozen=True)
class FeatureVector:
    """Model input in the fixed order [N, P, K, temp, hum, pH, rain]."""

    n: float
    p: float
    k: float
    temperature: float
    humidity: float
    ph: float
    rainfall: float

    def __post_init__(self):
        for name in FEATURE_FIELDS:
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"feature {name!r} must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_FIELDS], dtype=float)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in FEATURE_FIELDS}


@dataclass(frozen=True)
class CandidateCrop:
    """One top-3 crop; forecast fields are None when its price model is missing."""

    crop: str
    suitability: float
    horizon_months: int | None
    forecast_price: float | None

    def to_dict(self) -> dict:
        return {
            "crop": self.crop,
            "suitability": self.suitability,
            "horizon_months": self.horizon_months,
            "forecast_price": self.forecast_price,
        }


@dataclass(frozen=True)
class Recommendation:
    district: str
    features_used: FeatureVector
    candidates: tuple[CandidateCrop, ...]
    selected: str
    explanation: str
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "district": self.district,
            "features_used": self.features_used.to_dict(),
            "candidates": [c.to_dict() for c in self.candidates],
            "selected": self.selected,
            "explanation": self.explanation,
            "warnings": list(self.warnings),
        }


# ---------------------------------------------------------------------------
# Lookup tables


def load_growth_csv(path: str | Path) -> dict[str, int]:
    """crop,months CSV → growth periods; months must be a positive integer."""
    table: dict[str, int] = {}
    seen: set[str] = set()
    for i, row in enumerate(read_csv_rows(path, GROWTH_COLUMNS), start=2):
        crop = row["crop"]
        if not crop:
            raise RowParseError(i, "crop", "empty crop")
        if crop.casefold() in seen:
            raise RowParseError(i, "crop", f"duplicate crop {crop!r}")
        seen.add(crop.casefold())
        try:
            months = int(row["months"])
        except ValueError:
            raise RowParseError(i, "months", f"not an integer: {row['months']!r}") from None
        if months < 1:
            raise RowParseError(i, "months", f"growth period must be >= 1, got {months}")
        table[crop] = months
    return table


def load_rainfall_csv(path: str | Path) -> dict[str, float]:
    """district,rainfall CSV → long-term annual rainfall in mm."""
    table: dict[str, float] = {}
    seen: set[str] = set()
    for i, row in enumerate(read_csv_rows(path, RAINFALL_COLUMNS), start=2):
        district = row["district"]
        if not district:
            raise RowParseError(i, "district", "empty district")
        if district.casefold() in seen:
            raise RowParseError(i, "district", f"duplicate district {district!r}")
        seen.add(district.casefold())
        try:
            rainfall = float(row["rainfall"])
        except ValueError:
            raise RowParseError(i, "rainfall", f"not a number: {row['rainfall']!r}") from None
        if not (0.0 <= rainfall <= 20000.0):
            raise RowParseError(i, "rainfall", f"rainfall {rainfall} outside [0, 20000]")
        table[district] = rainfall
    return table


# ---------------------------------------------------------------------------
# Feature assembly


def validate_overrides(overrides: Mapping[str, float]) -> dict[str, float]:
    """Check override keys and bounds; returns a clean float dict."""
    clean: dict[str, float] = {}
    for key, value in overrides.items():
        if key not in FEATURE_BOUNDS:
            raise ValueError(f"unknown override {key!r}; expected one of {sorted(FEATURE_BOUNDS)}")
        try:
            number = float(value)
        except (TypeError, ValueError):
            raise ValueError(f"override {key!r} is not a number: {value!r}") from None
        lo, hi = FEATURE_BOUNDS[key]
        if not (lo <= number <= hi):
            raise ValueError(f"override {key!r} must be within [{lo:g}, {hi:g}], got {number:g}")
        clean[key] = number
    return clean


def build_feature_vector(
    soil: SoilProfile,
    weather: WeatherSnapshot,
    rainfall_mm: float,
    overrides: Mapping[str, float] | None = None,
) -> FeatureVector:
    """N,P,K,pH from soil; temperature/humidity from weather; rainfall from
    the district's long-term figure. Explicit overrides replace any value."""
    vector = FeatureVector(
        n=soil.n,
        p=soil.p,
        k=soil.k,
        temperature=weather.temperature,
        humidity=weather.humidity,
        ph=soil.ph,
        rainfall=rainfall_mm,
    )
    if overrides:
        vector = replace(vector, **validate_overrides(overrides))
    return vector


# ---------------------------------------------------------------------------
# Recommendation


class PriceForecaster(Protocol):
    """Registry-provided per-crop forecaster (window handling included)."""

    def forecast(self, horizon: int) -> ForecastResult: ...


class Registry(Protocol):
    """What recommend() needs from a model registry."""

    forest: ForestModel
    growth_periods: Mapping[str, int]

    def soil_for(self, district: str) -> SoilProfile | None: ...

    def centroid_point(self, district: str) -> GeoPoint | None: ...

    def all_centroids(self) -> Sequence: ...

    def rainfall_for(self, district: str) -> float | None: ...

    def fetch_weather(self, point: GeoPoint) -> WeatherSnapshot: ...

    def forecaster_for(self, crop: str) -> PriceForecaster | None: ...


def _growth_period(registry: Registry, crop: str) -> int | None:
    for name, months in registry.growth_periods.items():
        if name.casefold() == crop.casefold():
            return months
    return None


def _forecast_candidates(
    registry: Registry, ranked: Sequence[str], probs: Mapping[str, float]
) -> tuple[list[CandidateCrop], list[str]]:
    candidates: list[CandidateCrop] = []
    warnings: list[str] = []
    for crop in ranked:
        horizon = _growth_period(registry, crop)
        if horizon is None:
            warnings.append(f"no growth-period entry for {crop}; price forecast skipped")
            candidates.append(CandidateCrop(crop, probs[crop], None, None))
            continue
        forecaster = registry.forecaster_for(crop)
        if forecaster is None:
            warnings.append(f"no price model for {crop}; price forecast skipped")
            candidates.append(CandidateCrop(crop, probs[crop], horizon, None))
            continue
        try:
            result = forecaster.forecast(horizon)
        except CropcastError as exc:
            warnings.append(f"price forecast for {crop} failed: {exc}")
            candidates.append(CandidateCrop(crop, probs[crop], horizon, None))
            continue
        candidates.append(
            CandidateCrop(crop, probs[crop], horizon, float(result.price_at_harvest))
        )
    return candidates, warnings


def _select(candidates: Sequence[CandidateCrop]) -> str:
    priced = [c for c in candidates if c.forecast_price is not None]
    if not priced:
        raise NoForecastAvailable("no candidate crop has a usable price model")
    # Highest price; ties: higher suitability, then lexicographic name.
    best = min(priced, key=lambda c: (-c.forecast_price, -c.suitability, c.crop))
    return best.crop


def resolve_district(registry: Registry, query: str | GeoPoint) -> tuple[str, GeoPoint]:
    """Resolve a district name or point to (canonical district, weather point)."""
    if isinstance(query, GeoPoint):
        district = nearest_district(query, registry.all_centroids())
        return district, query
    soil = registry.soil_for(query)
    if soil is None:
        raise UnknownDistrict(query)
    point = registry.centroid_point(soil.district)
    if point is None:
        raise UnknownDistrict(soil.district)
    return soil.district, point


def recommend(
    query: str | GeoPoint | FeatureVector,
    registry: Registry,
    overrides: Mapping[str, float] | None = None,
    language: str = "en",
) -> Recommendation:
    if isinstance(query, FeatureVector):
        district = "custom"
        vector = query
        if overrides:
            vector = replace(vector, **validate_overrides(overrides))
    else:
        district, point = resolve_district(registry, query)
        soil = registry.soil_for(district)
        if soil is None:
            raise UnknownDistrict(district)
        rainfall = registry.rainfall_for(district)
        if rainfall is None:
            raise UnknownDistrict(f"{district} (no long-term rainfall entry)")
        try:
            weather = registry.fetch_weather(point)
        except CropcastError as exc:
            raise WeatherUnavailable(f"weather lookup failed for {district}: {exc}") from exc
        vector = build_feature_vector(soil, weather, rainfall, overrides)

    probs = predict_proba(registry.forest, vector.as_array())
    ranked = top_k_crops(probs, 3)
    candidates, warnings = _forecast_candidates(registry, ranked, probs)
    selected = _select(candidates)
    explanation = _render_explanation(district, candidates, selected, language)
    return Recommendation(
        district=district,
        features_used=vector,
        candidates=tuple(candidates),
        selected=selected,
        explanation=explanation,
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Explanation text


def _render_explanation(
    district: str, candidates: Sequence[CandidateCrop], selected: str, language: str
) -> str:
    # The Kannada template slot stays empty until translated; fall back to
    # English for any unshipped language tag.
    if language != "en":
        language = "en"
    ranked_bit = ", ".join(f"{c.crop} (suitability {c.suitability:.2f})" for c in candidates)
    price_bits = []
    for c in candidates:
        if c.forecast_price is None:
            price_bits.append(f"{c.crop}: no price forecast available")
        else:
            price_bits.append(
                f"{c.crop}: ₹{c.forecast_price:.2f}/kg at its {c.horizon_months}-month harvest"
            )
    winner = next(c for c in candidates if c.crop == selected)
    return (
        f"For {district}, the most suitable crops are {ranked_bit}. "
        f"Forecast prices: {'; '.join(price_bits)}. "
        f"Recommended crop: {selected}, with the highest forecast price "
        f"(₹{winner.forecast_price:.2f}/kg in {winner.horizon_months} months). "
        "Note: this compares forecast price per kg only, not yield or cost of cultivation."
    )


def explain(recommendation: Recommendation, language: str = "en") -> str:
    """Deterministic plain-text summary — the TTS input."""
    return _render_explanation(
        recommendation.district,
        recommendation.candidates,
        recommendation.selected,
        language,
    )
