"""Location resolution: address -> coordinates -> nearest district.

District membership is a k=1 nearest-neighbour lookup over district
centroids using great-circle (haversine) distance. Address resolution is
pluggable: a fixture-file resolver for offline/deterministic use and a
generic HTTP resolver configured by URL template for live mode.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import requests

from .data_ingest import DistrictCentroid
from .errors import AddressNotFound, EmptyCentroidSet, MissingFile, ResolverUnavailable

EARTH_RADIUS_KM = 6371.0

GEOCODER_KEY_ENV = "GEOCODER_API_KEY"


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km (Earth radius 6371.0 km)."""
    lat1, lon1, lat2, lon2 = map(math.radians, (a.lat, a.lon, b.lat, b.lon))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def nearest_district(point: GeoPoint, centroids: Sequence[DistrictCentroid]) -> str:
    """District whose centroid is closest; ties go to the smaller name."""
    if not centroids:
        raise EmptyCentroidSet("no district centroids loaded")
    best = min(
        centroids,
        key=lambda c: (haversine_km(point, GeoPoint(c.lat, c.lon)), c.district),
    )
    return best.district


class AddressResolver(Protocol):
    def resolve(self, address: str) -> GeoPoint: ...


class FixtureResolver:
    """Offline resolver backed by a CSV of address,lat,lon (case-insensitive)."""

    def __init__(self, path: str | Path):
        path = Path(path)
        if not path.is_file():
            raise MissingFile(str(path))
        self._table: dict[str, GeoPoint] = {}
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                self._table[row["address"].strip().casefold()] = GeoPoint(
                    float(row["lat"]), float(row["lon"])
                )

    def resolve(self, address: str) -> GeoPoint:
        point = self._table.get(address.strip().casefold())
        if point is None:
            raise AddressNotFound(address)
        return point


class HttpResolver:
    """Live resolver hitting a URL template with an ``{address}`` placeholder.

    The response must be JSON; `lat_field` / `lon_field` are dotted paths
    into it. An API key, if the provider needs one, is read from the
    GEOCODER_API_KEY environment variable and fills ``{key}``.
    """

    def __init__(
        self,
        url_template: str,
        lat_field: str = "lat",
        lon_field: str = "lon",
        timeout: float = 10.0,
    ):
        self.url_template = url_template
        self.lat_field = lat_field
        self.lon_field = lon_field
        self.timeout = timeout

    def resolve(self, address: str) -> GeoPoint:
        url = self.url_template.format(
            address=requests.utils.quote(address), key=os.environ.get(GEOCODER_KEY_ENV, "")
        )
        try:
            response = requests.get(url, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ResolverUnavailable(str(exc)) from exc
        if response.status_code >= 500:
            raise ResolverUnavailable(f"resolver returned {response.status_code}")
        if response.status_code == 404:
            raise AddressNotFound(address)
        try:
            payload = response.json()
            return GeoPoint(
                float(_dig(payload, self.lat_field)), float(_dig(payload, self.lon_field))
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise AddressNotFound(f"{address} (unparseable response: {exc})") from exc


def _dig(payload, path: str):
    """Walk a dotted path through nested dicts/lists ('results.0.lat')."""
    node = payload
    for part in path.split("."):
        node = node[int(part)] if part.isdigit() and isinstance(node, list) else node[part]
    return node


def geocode_address(address: str, resolver: AddressResolver) -> GeoPoint:
    """Resolve an address string to coordinates through the given resolver."""
    if not address or not address.strip():
        raise ValueError("address must be non-empty")
    return resolver.resolve(address)
