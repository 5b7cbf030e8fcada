"""Model registry: one manifest wires every artifact the engine needs.

The manifest is a JSON file; all paths inside it are relative to its own
directory, so a registry directory can be moved or shipped as a unit:

    {
      "format_version": 1,
      "forest_model": "forest.json",
      "growth_table": "growth_periods.csv",
      "soil": "soil.csv",
      "district_coords": "district_coords.csv",
      "rainfall": "rainfall.csv",
      "prices": "prices.csv",
      "price_models": {
        "Pepper": {"type": "lstm", "path": "models/pepper.json"},
        "Coffee": {"type": "fixed", "price": 255.0},
        "Maize":  {"type": "echo"}
      },
      "weather": {"mode": "fixture", "fixture_path": "weather.csv"},
      "geocoder": {"mode": "fixture", "fixture_path": "addresses.csv"}
    }

Price model types: "lstm" loads a trained model and forecasts from the
crop's most recent prices; "fixed" always returns one price (the
case-study stub mode); "echo" repeats the last observed price.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from . import forest as forest_mod
from . import lstm as lstm_mod
from .data_ingest import (
    DistrictCentroid,
    PriceSeries,
    SoilProfile,
    load_coords_csv,
    load_prices_csv,
    load_soil_csv,
    read_csv_rows,
)
from .engine import load_growth_csv, load_rainfall_csv
from .errors import HorizonNonPositive, ManifestError, RowParseError
from .geocode import AddressResolver, FixtureResolver, GeoPoint, HttpResolver
from .lstm import ForecastResult, LstmModel, forecast_iterative
from .weather import WeatherClient, WeatherConfig

MANIFEST_VERSION = 1

STUB_COLUMNS = ("crop", "price")


@dataclass(frozen=True)
class LstmForecaster:
    """Forecasts from a trained model seeded with the crop's latest window."""

    model: LstmModel
    recent: tuple[float, ...]

    @property
    def crop(self) -> str:
        return self.model.crop

    def forecast(self, horizon: int) -> ForecastResult:
        return forecast_iterative(self.model, list(self.recent), horizon)


@dataclass(frozen=True)
class FixedPriceForecaster:
    """Always forecasts one price — the case-study stub mode."""

    crop: str
    price: float

    def forecast(self, horizon: int) -> ForecastResult:
        if horizon < 1:
            raise HorizonNonPositive(horizon)
        return ForecastResult(self.crop, horizon, (self.price,) * horizon)


@dataclass(frozen=True)
class EchoForecaster:
    """Repeats the last observed price for every future month."""

    crop: str
    last_price: float

    def forecast(self, horizon: int) -> ForecastResult:
        if horizon < 1:
            raise HorizonNonPositive(horizon)
        return ForecastResult(self.crop, horizon, (self.last_price,) * horizon)


@dataclass
class ModelRegistry:
    """Everything recommend()/the service need, loaded once and immutable
    in use; hot reloads swap whole registry instances."""

    base_dir: Path
    forest: forest_mod.ForestModel
    growth_periods: dict[str, int]
    soils: list[SoilProfile]
    centroids: list[DistrictCentroid]
    rainfall: dict[str, float]
    prices: dict[str, PriceSeries]
    forecasters: dict[str, object] = field(default_factory=dict)  # key: casefolded crop
    weather: WeatherClient | None = None
    resolver: AddressResolver | None = None

    def soil_for(self, district: str) -> SoilProfile | None:
        for soil in self.soils:
            if soil.district.casefold() == district.casefold():
                return soil
        return None

    def centroid_point(self, district: str) -> GeoPoint | None:
        for c in self.centroids:
            if c.district.casefold() == district.casefold():
                return GeoPoint(c.lat, c.lon)
        return None

    def all_centroids(self) -> list[DistrictCentroid]:
        return self.centroids

    def rainfall_for(self, district: str) -> float | None:
        for name, value in self.rainfall.items():
            if name.casefold() == district.casefold():
                return value
        return None

    def fetch_weather(self, point: GeoPoint):
        if self.weather is None:
            raise ManifestError("no weather client configured")
        return self.weather.fetch_current(point)

    def forecaster_for(self, crop: str):
        return self.forecasters.get(crop.casefold())

    def crops(self) -> list[str]:
        return sorted(f.crop for f in self.forecasters.values())

    def district_names(self) -> list[str]:
        return sorted(s.district for s in self.soils)

    def apply_price_stubs(self, stubs: Mapping[str, float]) -> None:
        for crop, price in stubs.items():
            self.forecasters[crop.casefold()] = FixedPriceForecaster(crop, float(price))


def load_price_stubs(path: str | Path) -> dict[str, float]:
    """crop,price CSV used by `recommend --stub-prices` to pin forecasts."""
    stubs: dict[str, float] = {}
    for i, row in enumerate(read_csv_rows(path, STUB_COLUMNS), start=2):
        crop = row["crop"]
        if not crop:
            raise RowParseError(i, "crop", "empty crop")
        try:
            price = float(row["price"])
        except ValueError:
            raise RowParseError(i, "price", f"not a number: {row['price']!r}") from None
        if price <= 0:
            raise RowParseError(i, "price", f"price must be > 0, got {price}")
        stubs[crop] = price
    return stubs


def _series_for(prices: dict[str, PriceSeries], crop: str) -> PriceSeries | None:
    for name, series in prices.items():
        if name.casefold() == crop.casefold():
            return series
    return None


def _build_forecaster(
    crop: str, spec: Mapping, base_dir: Path, prices: dict[str, PriceSeries]
):
    kind = spec.get("type")
    if kind == "lstm":
        path = spec.get("path")
        if not path:
            raise ManifestError(f"price model for {crop!r} needs a 'path'")
        model = lstm_mod.load(base_dir / path)
        series = _series_for(prices, crop)
        if series is None:
            raise ManifestError(f"no price series for {crop!r} to seed its forecaster")
        recent = series.tail(model.look_back)
        if len(recent) < model.look_back:
            raise ManifestError(
                f"price series for {crop!r} has {len(series.prices)} points; "
                f"need at least {model.look_back}"
            )
        return LstmForecaster(model=model, recent=tuple(recent))
    if kind == "fixed":
        price = spec.get("price")
        if not isinstance(price, (int, float)) or price <= 0:
            raise ManifestError(f"fixed price model for {crop!r} needs a positive 'price'")
        return FixedPriceForecaster(crop=crop, price=float(price))
    if kind == "echo":
        series = _series_for(prices, crop)
        if series is None or not series.prices:
            raise ManifestError(f"no price series for {crop!r} to echo")
        return EchoForecaster(crop=crop, last_price=series.prices[-1])
    raise ManifestError(f"unknown price model type {kind!r} for crop {crop!r}")


def _build_resolver(spec: Mapping, base_dir: Path, fixtures: bool) -> AddressResolver:
    mode = spec.get("mode", "fixture")
    if fixtures:
        mode = "fixture"
    if mode == "fixture":
        path = spec.get("fixture_path")
        if not path:
            raise ManifestError("geocoder fixture mode needs 'fixture_path'")
        return FixtureResolver(base_dir / path)
    if mode == "http":
        url = spec.get("url_template")
        if not url:
            raise ManifestError("geocoder http mode needs 'url_template'")
        return HttpResolver(
            url_template=url,
            lat_field=spec.get("lat_field", "lat"),
            lon_field=spec.get("lon_field", "lon"),
        )
    raise ManifestError(f"unknown geocoder mode {mode!r}")


def load_manifest(path: str | Path, fixtures: bool = False) -> ModelRegistry:
    """Build a registry from a manifest file.

    fixtures=True forces weather and geocoding into fixture mode, for
    tests and offline runs; the manifest must then provide fixture paths.
    """
    manifest_path = Path(path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ManifestError("manifest must be a JSON object")
    if doc.get("format_version") != MANIFEST_VERSION:
        raise ManifestError(f"unsupported manifest version {doc.get('format_version')!r}")
    for key in ("forest_model", "growth_table", "soil", "district_coords", "rainfall", "weather"):
        if key not in doc:
            raise ManifestError(f"manifest missing required key {key!r}")
    base_dir = manifest_path.parent

    forest = forest_mod.load(base_dir / doc["forest_model"])
    growth = load_growth_csv(base_dir / doc["growth_table"])
    soils = load_soil_csv(base_dir / doc["soil"])
    centroids = load_coords_csv(base_dir / doc["district_coords"])
    rainfall = load_rainfall_csv(base_dir / doc["rainfall"])
    prices = load_prices_csv(base_dir / doc["prices"]) if doc.get("prices") else {}

    weather_spec = dict(doc["weather"])
    if fixtures:
        if not weather_spec.get("fixture_path"):
            raise ManifestError("fixture mode requested but weather has no fixture_path")
        weather_spec["mode"] = "fixture"
    try:
        weather_config = WeatherConfig.from_dict(weather_spec, base_dir)
    except ValueError as exc:
        raise ManifestError(f"bad weather config: {exc}") from exc
    weather = WeatherClient(weather_config)

    forecasters = {}
    for crop, spec in (doc.get("price_models") or {}).items():
        if not isinstance(spec, Mapping):
            raise ManifestError(f"price model entry for {crop!r} must be an object")
        forecasters[crop.casefold()] = _build_forecaster(crop, spec, base_dir, prices)

    resolver = _build_resolver(doc["geocoder"], base_dir, fixtures) if doc.get("geocoder") else None

    return ModelRegistry(
        base_dir=base_dir,
        forest=forest,
        growth_periods=growth,
        soils=soils,
        centroids=centroids,
        rainfall=rainfall,
        prices=prices,
        forecasters=forecasters,
        weather=weather,
        resolver=resolver,
    )
