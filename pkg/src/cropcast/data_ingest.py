"""Dataset loading, validation, imputation, and min-max scaling.

Four CSV datasets drive the engine: agronomic training rows
(N,P,K,temperature,humidity,ph,rainfall,label), district soil profiles
(district,ph,n,p,k), district centroids (district,lat,lon), and monthly
market prices (crop,date,price with dates as YYYY-MM).

All CSVs are comma-separated UTF-8 with a header row and '.' decimals.
Header matching is order- and case-insensitive. Empty numeric cells are
treated as missing and can be filled by mean imputation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllMissingColumn,
    ClassTooSmall,
    ColumnCountMismatch,
    MissingFile,
    RowParseError,
    SchemaMismatch,
)

# Fixed model input order: [N, P, K, temp, hum, pH, rain].
FEATURE_FIELDS = ("n", "p", "k", "temperature", "humidity", "ph", "rainfall")

AGRONOMIC_COLUMNS = ("N", "P", "K", "temperature", "humidity", "ph", "rainfall", "label")
SOIL_COLUMNS = ("district", "ph", "n", "p", "k")
COORDS_COLUMNS = ("district", "lat", "lon")
PRICES_COLUMNS = ("crop", "date", "price")


@dataclass(frozen=True)
class AgronomicRecord:
    """One labelled training row. None marks a missing numeric cell."""

    n: float | None
    p: float | None
    k: float | None
    temperature: float | None
    humidity: float | None
    ph: float | None
    rainfall: float | None
    label: str

    def features(self) -> list[float | None]:
        return [getattr(self, f) for f in FEATURE_FIELDS]


@dataclass(frozen=True)
class SoilProfile:
    district: str
    ph: float
    n: float
    p: float
    k: float


@dataclass(frozen=True)
class DistrictCentroid:
    district: str
    lat: float
    lon: float


@dataclass(frozen=True)
class PriceSeries:
    """Chronological monthly prices for one crop (strictly increasing months)."""

    crop: str
    points: tuple[tuple[date, float], ...]

    @property
    def prices(self) -> list[float]:
        return [p for _, p in self.points]

    @property
    def months(self) -> list[date]:
        return [m for m, _ in self.points]

    def tail(self, n: int) -> list[float]:
        return self.prices[-n:]


# ---------------------------------------------------------------------------
# CSV plumbing


def read_csv_rows(path: str | Path, columns: Sequence[str]) -> list[dict[str, str]]:
    """Read a CSV whose header must match `columns` (order/case-insensitive).

    Returns one dict per data row keyed by the canonical column names.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(str(path), set(columns), set()) from None
        canonical = {c.lower(): c for c in columns}
        seen = [h.strip() for h in header]
        seen_lower = {h.lower() for h in seen}
        missing = {canonical[c] for c in canonical if c not in seen_lower}
        extra = {h for h in seen if h.lower() not in canonical}
        if missing or extra:
            raise SchemaMismatch(str(path), missing, extra)
        index = {canonical[h.lower()]: i for i, h in enumerate(seen)}
        rows = []
        for cells in reader:
            if not cells or all(c.strip() == "" for c in cells):
                continue
            if len(cells) != len(seen):
                raise RowParseError(reader.line_num, "<row>", f"expected {len(seen)} cells, got {len(cells)}")
            rows.append({col: cells[i].strip() for col, i in index.items()})
    return rows


def _parse_float(value: str, row: int, column: str, *, allow_missing: bool = False) -> float | None:
    if value == "":
        if allow_missing:
            return None
        raise RowParseError(row, column, "empty cell")
    try:
        parsed = float(value)
    except ValueError:
        raise RowParseError(row, column, f"not a number: {value!r}") from None
    if math.isnan(parsed):
        if allow_missing:
            return None
        raise RowParseError(row, column, "NaN not allowed")
    if math.isinf(parsed):
        raise RowParseError(row, column, "infinite value")
    return parsed


def _check_bounds(value: float | None, lo: float, hi: float, row: int, column: str) -> None:
    if value is not None and not (lo <= value <= hi):
        raise RowParseError(row, column, f"value {value} outside [{lo}, {hi}]")


def load_agronomic_csv(path: str | Path) -> list[AgronomicRecord]:
    """Load labelled agronomic rows; rejects rows violating field bounds."""
    records = []
    for i, row in enumerate(read_csv_rows(path, AGRONOMIC_COLUMNS), start=2):
        label = row["label"]
        if not label:
            raise RowParseError(i, "label", "empty label")
        values = {}
        for col, field in (("N", "n"), ("P", "p"), ("K", "k")):
            values[field] = _parse_float(row[col], i, col, allow_missing=True)
        for col in ("temperature", "humidity", "ph", "rainfall"):
            values[col] = _parse_float(row[col], i, col, allow_missing=True)
        _check_bounds(values["ph"], 0.0, 14.0, i, "ph")
        _check_bounds(values["humidity"], 0.0, 100.0, i, "humidity")
        if values["rainfall"] is not None and values["rainfall"] < 0:
            raise RowParseError(i, "rainfall", f"negative rainfall {values['rainfall']}")
        records.append(AgronomicRecord(label=label, **values))
    return records


def load_soil_csv(path: str | Path) -> list[SoilProfile]:
    profiles = []
    seen: set[str] = set()
    for i, row in enumerate(read_csv_rows(path, SOIL_COLUMNS), start=2):
        district = row["district"]
        if not district:
            raise RowParseError(i, "district", "empty district")
        if district.lower() in seen:
            raise RowParseError(i, "district", f"duplicate district {district!r}")
        seen.add(district.lower())
        ph = _parse_float(row["ph"], i, "ph")
        _check_bounds(ph, 0.0, 14.0, i, "ph")
        profiles.append(
            SoilProfile(
                district=district,
                ph=ph,
                n=_parse_float(row["n"], i, "n"),
                p=_parse_float(row["p"], i, "p"),
                k=_parse_float(row["k"], i, "k"),
            )
        )
    return profiles


def load_coords_csv(path: str | Path) -> list[DistrictCentroid]:
    centroids = []
    seen: set[str] = set()
    for i, row in enumerate(read_csv_rows(path, COORDS_COLUMNS), start=2):
        district = row["district"]
        if not district:
            raise RowParseError(i, "district", "empty district")
        if district.lower() in seen:
            raise RowParseError(i, "district", f"duplicate district {district!r}")
        seen.add(district.lower())
        lat = _parse_float(row["lat"], i, "lat")
        lon = _parse_float(row["lon"], i, "lon")
        _check_bounds(lat, -90.0, 90.0, i, "lat")
        _check_bounds(lon, -180.0, 180.0, i, "lon")
        centroids.append(DistrictCentroid(district=district, lat=lat, lon=lon))
    return centroids


def _parse_month(value: str, row: int) -> date:
    # Accept YYYY-MM (canonical) or a full date, collapsed to its month.
    for fmt in ("%Y-%m", "%Y-%m-%d"):
        try:
            parsed = datetime.strptime(value, fmt)
            return date(parsed.year, parsed.month, 1)
        except ValueError:
            continue
    raise RowParseError(row, "date", f"expected YYYY-MM, got {value!r}")


def load_prices_csv(path: str | Path) -> dict[str, PriceSeries]:
    """Load per-crop monthly price series; sub-monthly rows average into their month."""
    buckets: dict[str, dict[date, list[float]]] = {}
    for i, row in enumerate(read_csv_rows(path, PRICES_COLUMNS), start=2):
        crop = row["crop"]
        if not crop:
            raise RowParseError(i, "crop", "empty crop")
        month = _parse_month(row["date"], i)
        price = _parse_float(row["price"], i, "price")
        if price <= 0:
            raise RowParseError(i, "price", f"price must be > 0, got {price}")
        buckets.setdefault(crop, {}).setdefault(month, []).append(price)
    series = {}
    for crop, months in buckets.items():
        points = tuple(
            (month, float(np.mean(values))) for month, values in sorted(months.items())
        )
        series[crop] = PriceSeries(crop=crop, points=points)
    return series


def write_agronomic_csv(records: Iterable[AgronomicRecord], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGRONOMIC_COLUMNS)
        for r in records:
            writer.writerow(["" if v is None else repr(v) for v in r.features()] + [r.label])


def write_soil_csv(profiles: Iterable[SoilProfile], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SOIL_COLUMNS)
        for s in profiles:
            writer.writerow([s.district, repr(s.ph), repr(s.n), repr(s.p), repr(s.k)])


def write_coords_csv(centroids: Iterable[DistrictCentroid], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COORDS_COLUMNS)
        for c in centroids:
            writer.writerow([c.district, repr(c.lat), repr(c.lon)])


def write_prices_csv(series: Iterable[PriceSeries], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PRICES_COLUMNS)
        for s in series:
            for month, price in s.points:
                writer.writerow([s.crop, month.strftime("%Y-%m"), repr(price)])


# ---------------------------------------------------------------------------
# Imputation


def column_means(records: Sequence[AgronomicRecord]) -> dict[str, float]:
    """Per-column means over non-missing cells. Raises AllMissingColumn."""
    means = {}
    for field in FEATURE_FIELDS:
        values = [getattr(r, field) for r in records if getattr(r, field) is not None]
        if not values:
            raise AllMissingColumn(field)
        means[field] = float(np.mean(values))
    return means


def impute_means(
    records: Sequence[AgronomicRecord], stats_source: Sequence[AgronomicRecord]
) -> tuple[list[AgronomicRecord], dict[str, float]]:
    """Replace missing numeric cells with column means from stats_source only.

    Returns the completed records and the means, so the same substitution
    values can be reused on later data (compute on the training split,
    apply everywhere).
    """
    means = column_means(stats_source)
    completed = []
    for r in records:
        fills = {f: means[f] for f in FEATURE_FIELDS if getattr(r, f) is None}
        completed.append(replace(r, **fills) if fills else r)
    return completed, means


# ---------------------------------------------------------------------------
# Min-max scaling


@dataclass(frozen=True)
class ScalerParams:
    """Per-column (min, max) fitted on training data; target range [0, 1].

    Transform maps min -> 0 and max -> 1 without clipping, so out-of-range
    inputs map linearly outside [0, 1]. A constant column (max == min)
    transforms to 0.0 everywhere and inverts back to that constant.
    """

    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"mins": list(self.mins), "maxs": list(self.maxs)}

    @classmethod
    def from_dict(cls, data: dict) -> "ScalerParams":
        return cls(mins=tuple(data["mins"]), maxs=tuple(data["maxs"]))


def _as_matrix(matrix) -> np.ndarray:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    return arr


def fit_minmax(matrix) -> ScalerParams:
    arr = _as_matrix(matrix)
    return ScalerParams(
        mins=tuple(float(v) for v in arr.min(axis=0)),
        maxs=tuple(float(v) for v in arr.max(axis=0)),
    )


def _check_columns(arr: np.ndarray, params: ScalerParams) -> None:
    if arr.shape[1] != len(params.mins):
        raise ColumnCountMismatch(len(params.mins), arr.shape[1])


def transform_minmax(matrix, params: ScalerParams) -> np.ndarray:
    arr = _as_matrix(matrix)
    _check_columns(arr, params)
    mins = np.array(params.mins)
    spans = np.array(params.maxs) - mins
    out = np.zeros_like(arr)
    nonzero = spans != 0
    out[:, nonzero] = (arr[:, nonzero] - mins[nonzero]) / spans[nonzero]
    return out


def inverse_minmax(scaled, params: ScalerParams) -> np.ndarray:
    arr = _as_matrix(scaled)
    _check_columns(arr, params)
    mins = np.array(params.mins)
    spans = np.array(params.maxs) - mins
    return arr * spans + mins


# ---------------------------------------------------------------------------
# Splitting


def train_test_split(
    records: Sequence[AgronomicRecord], test_fraction: float = 0.2, seed: int = 42
) -> tuple[list[AgronomicRecord], list[AgronomicRecord]]:
    """Deterministic stratified split; every class keeps >= 1 training row."""
    by_label: dict[str, list[int]] = {}
    for i, r in enumerate(records):
        by_label.setdefault(r.label, []).append(i)
    for label, idx in sorted(by_label.items()):
        if len(idx) < 2:
            raise ClassTooSmall(label, len(idx))
    rng = np.random.default_rng(seed)
    test_idx: set[int] = set()
    for label in sorted(by_label):
        idx = by_label[label]
        n_test = min(int(round(test_fraction * len(idx))), len(idx) - 1)
        order = rng.permutation(len(idx))
        test_idx.update(idx[j] for j in order[:n_test])
    train = [r for i, r in enumerate(records) if i not in test_idx]
    test = [r for i, r in enumerate(records) if i in test_idx]
    return train, test
