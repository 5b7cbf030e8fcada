"""Current-weather lookup with a deterministic fixture mode.

Live mode calls a provider-agnostic URL template and picks fields out of
the JSON response via a declarative dotted-path mapping (no provider is
hard-coded). Fixture mode serves the nearest entry from a small CSV, so
tests and offline runs never touch the network. Either way, snapshots
are cached for a TTL keyed by coordinates rounded to 2 decimals (~1 km).
"""

from __future__ import annotations

import csv
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import requests

from .errors import MalformedResponse, MissingFile, NoFixtureEntry, ProviderUnavailable
from .geocode import GeoPoint, haversine_km

WEATHER_KEY_ENV = "WEATHER_API_KEY"
DEFAULT_TTL_SECONDS = 600.0

# Fixture snapshots carry a pinned timestamp so fixture-mode responses
# are byte-stable across runs.
FIXTURE_OBSERVED_AT = "2025-01-01T00:00:00Z"

FIXTURE_COLUMNS = ("lat", "lon", "temperature", "humidity")


@dataclass(frozen=True)
class WeatherSnapshot:
    temperature: float  # °C
    humidity: float  # % relative
    observed_at: str  # ISO-8601
    source: str  # "live" | "fixture"

    def __post_init__(self):
        if not -50.0 <= self.temperature <= 60.0:
            raise MalformedResponse(f"temperature {self.temperature} outside [-50, 60]")
        if not 0.0 <= self.humidity <= 100.0:
            raise MalformedResponse(f"humidity {self.humidity} outside [0, 100]")

    def to_dict(self) -> dict:
        return {
            "temperature": self.temperature,
            "humidity": self.humidity,
            "observed_at": self.observed_at,
            "source": self.source,
        }


@dataclass(frozen=True)
class WeatherConfig:
    """Provider settings; mode selects live HTTP or the CSV fixture.

    url_template takes {lat}, {lon} and {key} placeholders. The field
    mapping gives dotted paths into the response JSON, e.g.
    {"temperature": "main.temp", "humidity": "main.humidity"}.
    """

    mode: str = "fixture"
    fixture_path: str | None = None
    url_template: str | None = None
    field_mapping: Mapping[str, str] = field(
        default_factory=lambda: {"temperature": "main.temp", "humidity": "main.humidity"}
    )
    ttl_seconds: float = DEFAULT_TTL_SECONDS
    timeout_seconds: float = 10.0

    def __post_init__(self):
        if self.mode not in ("live", "fixture"):
            raise ValueError(f"weather mode must be 'live' or 'fixture', got {self.mode!r}")
        if self.mode == "fixture" and not self.fixture_path:
            raise ValueError("fixture mode requires fixture_path")
        if self.mode == "live" and not self.url_template:
            raise ValueError("live mode requires url_template")

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Path | None = None) -> "WeatherConfig":
        fixture = data.get("fixture_path")
        if fixture and base_dir is not None:
            fixture = str((base_dir / fixture).resolve())
        return cls(
            mode=data.get("mode", "fixture"),
            fixture_path=fixture,
            url_template=data.get("url_template"),
            field_mapping=dict(data.get("field_mapping", {"temperature": "main.temp", "humidity": "main.humidity"})),
            ttl_seconds=float(data.get("ttl_seconds", DEFAULT_TTL_SECONDS)),
            timeout_seconds=float(data.get("timeout_seconds", 10.0)),
        )


def _dig(doc, dotted: str):
    node = doc
    for part in dotted.split("."):
        if isinstance(node, list):
            try:
                node = node[int(part)]
                continue
            except (ValueError, IndexError):
                raise MalformedResponse(f"missing field {dotted!r} in provider response") from None
        if not isinstance(node, dict) or part not in node:
            raise MalformedResponse(f"missing field {dotted!r} in provider response")
        node = node[part]
    return node


def _load_fixture(path: str) -> list[tuple[GeoPoint, float, float]]:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(path)
    entries = []
    with p.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = {f.strip().lower() for f in reader.fieldnames or []}
        if fields != set(FIXTURE_COLUMNS):
            raise MalformedResponse(
                f"weather fixture needs columns {FIXTURE_COLUMNS}, got {sorted(fields)}"
            )
        for row in reader:
            row = {k.strip().lower(): v for k, v in row.items()}
            entries.append(
                (
                    GeoPoint(float(row["lat"]), float(row["lon"])),
                    float(row["temperature"]),
                    float(row["humidity"]),
                )
            )
    return entries


class WeatherClient:
    """fetch_current with TTL caching and per-key request coalescing.

    The invocation counter counts underlying lookups (provider calls or
    fixture scans), so cache behavior is observable in tests.
    """

    def __init__(self, config: WeatherConfig, clock=time.monotonic):
        self.config = config
        self._clock = clock
        self._cache: dict[tuple[float, float], tuple[float, WeatherSnapshot]] = {}
        self._lock = threading.Lock()
        self._key_locks: dict[tuple[float, float], threading.Lock] = {}
        self.invocations = 0
        self._fixture = _load_fixture(config.fixture_path) if config.mode == "fixture" else None

    def fetch_current(self, point: GeoPoint) -> WeatherSnapshot:
        key = (round(point.lat, 2), round(point.lon, 2))
        with self._lock:
            hit = self._cache.get(key)
            if hit is not None and self._clock() - hit[0] < self.config.ttl_seconds:
                return hit[1]
            key_lock = self._key_locks.setdefault(key, threading.Lock())
        with key_lock:
            # Coalesce: another thread may have filled the cache while we waited.
            with self._lock:
                hit = self._cache.get(key)
                if hit is not None and self._clock() - hit[0] < self.config.ttl_seconds:
                    return hit[1]
            snapshot = self._lookup(point)
            with self._lock:
                self._cache[key] = (self._clock(), snapshot)
            return snapshot

    def _lookup(self, point: GeoPoint) -> WeatherSnapshot:
        self.invocations += 1
        if self._fixture is not None:
            return self._nearest_fixture(point)
        return self._fetch_live(point)

    def _nearest_fixture(self, point: GeoPoint) -> WeatherSnapshot:
        if not self._fixture:
            raise NoFixtureEntry("weather fixture file has no entries")
        _, temperature, humidity = min(
            self._fixture, key=lambda entry: haversine_km(point, entry[0])
        )
        return WeatherSnapshot(
            temperature=temperature,
            humidity=humidity,
            observed_at=FIXTURE_OBSERVED_AT,
            source="fixture",
        )

    def _fetch_live(self, point: GeoPoint) -> WeatherSnapshot:
        url = self.config.url_template.format(
            lat=point.lat, lon=point.lon, key=os.environ.get(WEATHER_KEY_ENV, "")
        )
        try:
            response = requests.get(url, timeout=self.config.timeout_seconds)
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"weather provider unreachable: {exc}") from exc
        if response.status_code >= 500:
            raise ProviderUnavailable(f"weather provider returned {response.status_code}")
        if response.status_code != 200:
            raise MalformedResponse(f"weather provider returned {response.status_code}")
        try:
            doc = response.json()
        except ValueError:
            raise MalformedResponse("weather provider returned non-JSON body") from None
        values = {}
        for name in ("temperature", "humidity"):
            dotted = self.config.field_mapping.get(name)
            if dotted is None:
                raise MalformedResponse(f"field mapping lacks an entry for {name!r}")
            raw = _dig(doc, dotted)
            try:
                values[name] = float(raw)
            except (TypeError, ValueError):
                raise MalformedResponse(f"field {dotted!r} is not numeric: {raw!r}") from None
        return WeatherSnapshot(
            temperature=values["temperature"],
            humidity=values["humidity"],
            observed_at=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            source="live",
        )
