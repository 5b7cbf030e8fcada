"""HTTP/JSON facade over the engine.

All success and error bodies are rendered through one canonical JSON
encoder (sorted keys, no whitespace), so responses are byte-stable under
fixture mode and the CLI's --json output can promise byte-identity with
the service payloads. Non-2xx bodies are always an ApiError object:
{"code": ..., "message": ..., "details"?: ...}.
"""

from __future__ import annotations

import json
from typing import Mapping

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware

from . import __version__
from .engine import FEATURE_BOUNDS, recommend as engine_recommend
from .errors import (
    CropcastError,
    HorizonNonPositive,
    NoForecastAvailable,
    UnknownCrop,
    UnknownDistrict,
    WeatherUnavailable,
)
from .geocode import GeoPoint
from .registry import ModelRegistry
from .voice import (
    INTENT_PRICE_FORECAST,
    INTENT_RECOMMENDATION,
    Transcript,
    parse_intent,
)

API_PREFIX = "/api/v1"
HORIZON_MIN = 1
HORIZON_MAX = 24

UNKNOWN_INTENT_HELP = (
    "Could not understand the request. Try 'recommend a crop for <district>' "
    "or 'price of <crop> in <n> months'."
)


def render_json_bytes(payload) -> bytes:
    """The one JSON encoding used for every response body (and CLI --json)."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def json_response(payload, status_code: int = 200) -> Response:
    return Response(
        content=render_json_bytes(payload),
        status_code=status_code,
        media_type="application/json",
    )


def api_error(status_code: int, code: str, message: str, details: Mapping | None = None) -> Response:
    body: dict = {"code": code, "message": message}
    if details is not None:
        body["details"] = dict(details)
    return json_response(body, status_code)


class _ApiFault(Exception):
    """Internal carrier for a specific status/code pair."""

    def __init__(self, status_code: int, code: str, message: str):
        super().__init__(message)
        self.status_code = status_code
        self.code = code


class _NotReady(Exception):
    pass


def _fault_for(exc: CropcastError) -> tuple[int, str]:
    if isinstance(exc, UnknownDistrict):
        return 400, "unknown_district"
    if isinstance(exc, UnknownCrop):
        return 404, "unknown_crop"
    if isinstance(exc, HorizonNonPositive):
        return 400, "invalid_horizon"
    if isinstance(exc, NoForecastAvailable):
        return 424, "missing_price_models"
    if isinstance(exc, WeatherUnavailable):
        return 502, "weather_unavailable"
    return 500, "internal_error"


def _registry(request: Request) -> ModelRegistry:
    registry = request.app.state.registry
    if registry is None:
        raise _NotReady
    return registry


def _parse_recommend_query(body: Mapping) -> str | GeoPoint:
    district = body.get("district")
    lat, lon = body.get("lat"), body.get("lon")
    if district is not None and (lat is not None or lon is not None):
        raise ValueError("provide either a district or lat/lon, not both")
    if district is not None:
        if not isinstance(district, str) or not district.strip():
            raise ValueError("district must be a non-empty string")
        return district.strip()
    if lat is None or lon is None:
        raise ValueError("provide a district name, or both lat and lon")
    return GeoPoint(float(lat), float(lon))


def _parse_horizon(raw: str | None) -> int:
    if raw is None:
        raise _ApiFault(400, "invalid_horizon", "horizon query parameter is required")
    try:
        horizon = int(raw)
    except ValueError:
        raise _ApiFault(400, "invalid_horizon", f"horizon must be an integer, got {raw!r}") from None
    _check_horizon_bounds(horizon)
    return horizon


def _check_horizon_bounds(horizon: int) -> None:
    if not HORIZON_MIN <= horizon <= HORIZON_MAX:
        raise _ApiFault(
            400,
            "invalid_horizon",
            f"horizon must be in [{HORIZON_MIN}, {HORIZON_MAX}], got {horizon}",
        )


def _forecast_payload(registry: ModelRegistry, crop: str, horizon: int) -> dict:
    forecaster = registry.forecaster_for(crop)
    if forecaster is None:
        raise UnknownCrop(crop)
    return forecaster.forecast(horizon).to_dict()


def _growth_horizon(registry: ModelRegistry, crop: str) -> int | None:
    for name, months in registry.growth_periods.items():
        if name.casefold() == crop.casefold():
            return months
    return None


def create_app(registry: ModelRegistry | None = None, cors_origin: str | None = None) -> FastAPI:
    """App factory. A None registry serves 503 not_ready on every endpoint
    (the pre-startup state); the registry swap is atomic for hot reloads."""
    app = FastAPI(title="cropcast", version=__version__)
    app.state.registry = registry
    if cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(_NotReady)
    async def not_ready_handler(request: Request, exc: _NotReady) -> Response:
        return api_error(503, "not_ready", "models and datasets are not loaded yet")

    @app.exception_handler(_ApiFault)
    async def fault_handler(request: Request, exc: _ApiFault) -> Response:
        return api_error(exc.status_code, exc.code, str(exc))

    @app.exception_handler(CropcastError)
    async def domain_error_handler(request: Request, exc: CropcastError) -> Response:
        status_code, code = _fault_for(exc)
        return api_error(status_code, code, str(exc))

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError) -> Response:
        return api_error(400, "invalid_request", str(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError) -> Response:
        return api_error(400, "invalid_request", "malformed request")

    @app.get(API_PREFIX + "/districts")
    async def districts(request: Request) -> Response:
        registry = _registry(request)
        entries = []
        for soil in sorted(registry.soils, key=lambda s: s.district):
            point = registry.centroid_point(soil.district)
            if point is None:
                continue  # a district without coordinates cannot serve queries
            entries.append(
                {
                    "district": soil.district,
                    "lat": point.lat,
                    "lon": point.lon,
                    "soil": {"n": soil.n, "p": soil.p, "k": soil.k, "ph": soil.ph},
                }
            )
        return json_response(entries)

    @app.post(API_PREFIX + "/recommend")
    async def recommend(request: Request) -> Response:
        registry = _registry(request)
        body = await request.json()
        if not isinstance(body, dict):
            raise ValueError("request body must be a JSON object")
        query = _parse_recommend_query(body)
        overrides = body.get("overrides") or {}
        if not isinstance(overrides, dict):
            raise ValueError("overrides must be an object")
        recommendation = engine_recommend(query, registry, overrides)
        return json_response(recommendation.to_dict())

    @app.get(API_PREFIX + "/forecast/{crop}")
    async def forecast(request: Request, crop: str, horizon: str | None = None) -> Response:
        registry = _registry(request)
        months = _parse_horizon(horizon)
        return json_response(_forecast_payload(registry, crop, months))

    @app.post(API_PREFIX + "/query")
    async def query(request: Request) -> Response:
        registry = _registry(request)
        body = await request.json()
        if not isinstance(body, dict):
            raise ValueError("request body must be a JSON object")
        text = body.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ValueError("text must be a non-empty string")
        intent = parse_intent(
            Transcript(text=text), registry.district_names(), registry.crops()
        )
        if intent.kind == INTENT_RECOMMENDATION:
            result = engine_recommend(str(intent.slots["location"]), registry).to_dict()
            return json_response({"intent": intent.to_dict(), "result": result})
        if intent.kind == INTENT_PRICE_FORECAST:
            crop = str(intent.slots["crop"])
            horizon = intent.slots.get("horizon_months")
            if horizon is None:
                horizon = _growth_horizon(registry, crop)
            if horizon is None:
                raise _ApiFault(
                    400,
                    "invalid_horizon",
                    f"no horizon given and no growth-period entry for {crop!r}",
                )
            _check_horizon_bounds(int(horizon))
            result = _forecast_payload(registry, crop, int(horizon))
            return json_response({"intent": intent.to_dict(), "result": result})
        return json_response(
            {"intent": intent.to_dict(), "result": None, "message": UNKNOWN_INTENT_HELP}
        )

    @app.get(API_PREFIX + "/capabilities")
    async def capabilities(request: Request) -> Response:
        registry = _registry(request)
        return json_response(
            {
                "districts": registry.district_names(),
                "crops": registry.crops(),
                "horizon_months": {"min": HORIZON_MIN, "max": HORIZON_MAX},
                "override_bounds": {k: [lo, hi] for k, (lo, hi) in FEATURE_BOUNDS.items()},
            }
        )

    return app
