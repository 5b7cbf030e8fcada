"""Exception hierarchy shared across the package.

Every error raised by cropcast derives from CropcastError so callers can
catch the package's failures with one except clause. The CLI maps these
onto its stable exit codes (data errors vs model errors).
"""

from __future__ import annotations


class CropcastError(Exception):
    """Base class for all cropcast errors."""


# --- data layer ---

class DataError(CropcastError):
    """A dataset could not be loaded or fails its schema/invariants."""


class MissingFile(DataError):
    def __init__(self, path: str):
        super().__init__(f"file not found: {path}")
        self.path = path


class SchemaMismatch(DataError):
    def __init__(self, path: str, missing: set[str], extra: set[str]):
        parts = []
        if missing:
            parts.append(f"missing columns {sorted(missing)}")
        if extra:
            parts.append(f"extra columns {sorted(extra)}")
        super().__init__(f"{path}: " + "; ".join(parts))
        self.missing = missing
        self.extra = extra


class RowParseError(DataError):
    def __init__(self, row: int, column: str, reason: str):
        super().__init__(f"row {row}, column {column!r}: {reason}")
        self.row = row
        self.column = column
        self.reason = reason


class AllMissingColumn(DataError):
    def __init__(self, column: str):
        super().__init__(f"column {column!r} has no non-missing values to average")
        self.column = column


class ColumnCountMismatch(DataError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected {expected} columns, got {got}")
        self.expected = expected
        self.got = got


class ClassTooSmall(DataError):
    def __init__(self, label: str, count: int):
        super().__init__(f"class {label!r} has only {count} record(s); need at least 2")
        self.label = label
        self.count = count


class SeriesTooShort(DataError):
    def __init__(self, needed: int, got: int):
        super().__init__(f"price series too short: need {needed} points, got {got}")
        self.needed = needed
        self.got = got


# --- geocoding ---

class ResolverUnavailable(CropcastError):
    """The address resolver could not be reached or timed out."""


class AddressNotFound(CropcastError):
    def __init__(self, address: str):
        super().__init__(f"address not found: {address!r}")
        self.address = address


class EmptyCentroidSet(CropcastError):
    """Nearest-district lookup requires at least one centroid."""


# --- classifier ---

class ModelError(CropcastError):
    """A model is malformed, missing, or was handed invalid input."""


class EmptyCounts(ModelError):
    """Gini impurity requires at least one positive label count."""


class SingleClassDataset(ModelError):
    """Forest training requires at least two distinct labels."""


class NonFiniteFeature(ModelError):
    """Prediction input contained NaN or infinity."""


# --- forecaster ---

class ShapeMismatch(ModelError):
    def __init__(self, what: str, expected, got):
        super().__init__(f"{what}: expected shape {expected}, got {got}")


class NonFiniteGradient(ModelError):
    """A gradient contained NaN or infinity; training cannot continue."""


class HorizonNonPositive(ModelError):
    def __init__(self, horizon: int):
        super().__init__(f"forecast horizon must be >= 1, got {horizon}")


class WindowSizeMismatch(ModelError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"need exactly {expected} recent prices, got {got}")


# --- engine / registry ---

class UnknownDistrict(CropcastError):
    def __init__(self, district: str):
        super().__init__(f"no data for district {district!r}")
        self.district = district


class UnknownCrop(CropcastError):
    def __init__(self, crop: str):
        super().__init__(f"no model registered for crop {crop!r}")
        self.crop = crop


class WeatherUnavailable(CropcastError):
    """Live weather could not be fetched for the requested location."""


class MissingPriceModel(CropcastError):
    def __init__(self, crop: str):
        super().__init__(f"no price model for crop {crop!r}")
        self.crop = crop


class NoForecastAvailable(CropcastError):
    """None of the candidate crops has a usable price model."""


class ManifestError(ModelError):
    """The registry manifest is missing, malformed, or references bad paths."""


# --- weather client ---

class ProviderUnavailable(CropcastError):
    """The weather provider returned an error or could not be reached."""


class MalformedResponse(CropcastError):
    """The weather provider's response did not match the configured mapping."""


class NoFixtureEntry(CropcastError):
    """The weather fixture file has no entries to serve."""


# --- voice adapters ---

class AdapterFailure(CropcastError):
    def __init__(self, message: str, exit_code: int | None = None, diagnostics: str = ""):
        detail = message
        if exit_code is not None:
            detail += f" (exit code {exit_code})"
        if diagnostics:
            detail += f": {diagnostics.strip()}"
        super().__init__(detail)
        self.exit_code = exit_code
        self.diagnostics = diagnostics


class UnsupportedFormat(CropcastError):
    def __init__(self, format_tag: str):
        super().__init__(f"unsupported audio format: {format_tag!r}")
        self.format_tag = format_tag
