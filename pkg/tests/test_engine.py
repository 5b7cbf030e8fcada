import numpy as np
import pytest

from cropcast.data_ingest import DistrictCentroid, SoilProfile
from cropcast.engine import (
    FEATURE_BOUNDS,
    CandidateCrop,
    FeatureVector,
    Recommendation,
    build_feature_vector,
    explain,
    load_growth_csv,
    load_rainfall_csv,
    recommend,
    resolve_district,
    validate_overrides,
)
from cropcast.errors import (
    CropcastError,
    NoForecastAvailable,
    RowParseError,
    UnknownDistrict,
    WeatherUnavailable,
)
from cropcast.forest import ForestConfig, ForestModel, Leaf
from cropcast.geocode import GeoPoint
from cropcast.lstm import ForecastResult
from cropcast.weather import WeatherSnapshot

HASSAN_SOIL = SoilProfile(district="Hassan", ph=6.2, n=125.0, p=29.0, k=260.0)
HASSAN_WEATHER = WeatherSnapshot(
    temperature=24.0, humidity=70.0, observed_at="2025-01-01T00:00:00Z", source="fixture"
)


def _leaf_forest(probs_by_label):
    """One tree, one leaf: every input gets the same class distribution."""
    labels = tuple(sorted(probs_by_label))
    probs = np.array([probs_by_label[label] for label in labels])
    return ForestModel(
        trees=(Leaf(probs),), labels=labels, config=ForestConfig(n_estimators=1), seed=0
    )


class FixedForecaster:
    def __init__(self, price):
        self.price = price
        self.horizons = []

    def forecast(self, horizon):
        self.horizons.append(horizon)
        return ForecastResult(
            crop="x", horizon_months=horizon, trajectory=(self.price,) * horizon
        )


class FailingForecaster:
    def forecast(self, horizon):
        raise CropcastError("price model exploded")


class FakeRegistry:
    """Hand-wired Registry double; every collaborator is injectable."""

    def __init__(self, forest, growth, forecasters, weather=HASSAN_WEATHER):
        self.forest = forest
        self.growth_periods = growth
        self._forecasters = forecasters
        self._weather = weather
        self.weather_points = []
        self.soils = {"hassan": HASSAN_SOIL}
        self.rainfall = {"hassan": 1000.0}
        self.centroids = [
            DistrictCentroid("Hassan", 13.0, 76.1),
            DistrictCentroid("Mysuru", 12.3, 76.64),
        ]

    def soil_for(self, district):
        return self.soils.get(district.casefold())

    def centroid_point(self, district):
        for c in self.centroids:
            if c.district.casefold() == district.casefold():
                return GeoPoint(c.lat, c.lon)
        return None

    def all_centroids(self):
        return self.centroids

    def rainfall_for(self, district):
        return self.rainfall.get(district.casefold())

    def fetch_weather(self, point):
        self.weather_points.append(point)
        if isinstance(self._weather, Exception):
            raise self._weather
        return self._weather

    def forecaster_for(self, crop):
        return self._forecasters.get(crop)


def _registry(probs, prices, growth=None):
    forest = _leaf_forest(probs)
    growth = growth if growth is not None else {crop: 6 for crop in probs}
    forecasters = {crop: FixedForecaster(price) for crop, price in prices.items()}
    return FakeRegistry(forest, growth, forecasters)


class TestFeatureVector:
    def test_array_order(self):
        vector = FeatureVector(n=1, p=2, k=3, temperature=4, humidity=5, ph=6, rainfall=7)
        assert vector.as_array().tolist() == [1, 2, 3, 4, 5, 6, 7]

    def test_to_dict_keys(self):
        vector = FeatureVector(n=1, p=2, k=3, temperature=4, humidity=5, ph=6, rainfall=7)
        assert list(vector.to_dict()) == ["n", "p", "k", "temperature", "humidity", "ph", "rainfall"]

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="rainfall"):
            FeatureVector(n=1, p=2, k=3, temperature=4, humidity=5, ph=6, rainfall=float("nan"))


class TestLookupTables:
    def test_growth_fixture(self, fixtures_dir):
        table = load_growth_csv(fixtures_dir / "growth_periods.csv")
        assert table["Coffee"] == 9 and table["Pepper"] == 6 and table["Maize"] == 4

    def test_growth_duplicate_crop(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("crop,months\nCoffee,9\nCOFFEE,7\n", encoding="utf-8")
        with pytest.raises(RowParseError, match="duplicate"):
            load_growth_csv(path)

    def test_growth_must_be_positive_integer(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("crop,months\nCoffee,0\n", encoding="utf-8")
        with pytest.raises(RowParseError, match=">= 1"):
            load_growth_csv(path)
        path.write_text("crop,months\nCoffee,nine\n", encoding="utf-8")
        with pytest.raises(RowParseError, match="not an integer"):
            load_growth_csv(path)

    def test_rainfall_fixture(self, fixtures_dir):
        table = load_rainfall_csv(fixtures_dir / "rainfall.csv")
        assert table["Hassan"] == 1000.0

    def test_rainfall_bounds_and_duplicates(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("district,rainfall\nHassan,-5\n", encoding="utf-8")
        with pytest.raises(RowParseError, match="outside"):
            load_rainfall_csv(path)
        path.write_text("district,rainfall\nHassan,900\nhassan,800\n", encoding="utf-8")
        with pytest.raises(RowParseError, match="duplicate"):
            load_rainfall_csv(path)


class TestOverrides:
    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown override 'npk'"):
            validate_overrides({"npk": 1})

    def test_not_a_number(self):
        with pytest.raises(ValueError, match="not a number"):
            validate_overrides({"ph": "acidic"})

    def test_out_of_bounds_message(self):
        with pytest.raises(ValueError, match=r"override 'ph' must be within \[0, 14\], got 99"):
            validate_overrides({"ph": 99})

    def test_bounds_match_loader_limits(self):
        assert FEATURE_BOUNDS["humidity"] == (0.0, 100.0)
        assert FEATURE_BOUNDS["temperature"] == (-50.0, 60.0)
        clean = validate_overrides({"rainfall": "1200"})
        assert clean == {"rainfall": 1200.0}


class TestBuildFeatureVector:
    def test_hassan_assembly(self):
        vector = build_feature_vector(HASSAN_SOIL, HASSAN_WEATHER, 1000.0)
        assert vector.as_array().tolist() == [125.0, 29.0, 260.0, 24.0, 70.0, 6.2, 1000.0]

    def test_overrides_replace_sources(self):
        vector = build_feature_vector(
            HASSAN_SOIL, HASSAN_WEATHER, 1000.0, overrides={"ph": 7.0, "rainfall": 800}
        )
        assert vector.ph == 7.0 and vector.rainfall == 800.0
        assert vector.n == 125.0  # untouched fields keep their source values

    def test_invalid_override_propagates(self):
        with pytest.raises(ValueError):
            build_feature_vector(HASSAN_SOIL, HASSAN_WEATHER, 1000.0, overrides={"ph": -1})


class TestResolveDistrict:
    def test_name_resolves_to_canonical_spelling_and_centroid(self):
        registry = _registry({"A": 1.0}, {"A": 10.0})
        district, point = resolve_district(registry, "hassan")
        assert district == "Hassan"
        assert (point.lat, point.lon) == (13.0, 76.1)

    def test_point_resolves_to_nearest_but_keeps_query_point(self):
        registry = _registry({"A": 1.0}, {"A": 10.0})
        query = GeoPoint(13.05, 76.2)
        district, point = resolve_district(registry, query)
        assert district == "Hassan"
        assert point is query

    def test_unknown_name(self):
        registry = _registry({"A": 1.0}, {"A": 10.0})
        with pytest.raises(UnknownDistrict):
            resolve_district(registry, "Atlantis")


class TestSelection:
    def test_highest_forecast_price_wins(self):
        registry = _registry(
            {"Alpha": 0.5, "Beta": 0.3, "Gamma": 0.2},
            {"Alpha": 100.0, "Beta": 200.0, "Gamma": 150.0},
        )
        rec = recommend("Hassan", registry)
        assert rec.selected == "Beta"
        assert [c.crop for c in rec.candidates] == ["Alpha", "Beta", "Gamma"]
        assert rec.warnings == ()

    def test_price_tie_broken_by_suitability(self):
        registry = _registry(
            {"Alpha": 0.2, "Beta": 0.5, "Gamma": 0.3},
            {"Alpha": 200.0, "Beta": 200.0, "Gamma": 10.0},
        )
        assert recommend("Hassan", registry).selected == "Beta"

    def test_full_tie_broken_lexicographically(self):
        registry = _registry(
            {"Beta": 0.4, "Alpha": 0.4, "Gamma": 0.2},
            {"Alpha": 200.0, "Beta": 200.0, "Gamma": 200.0},
        )
        # Gamma loses on suitability; Alpha and Beta tie twice over.
        assert recommend("Hassan", registry).selected == "Alpha"

    def test_forecaster_called_with_crop_growth_horizon(self):
        registry = _registry(
            {"Alpha": 0.5, "Beta": 0.3, "Gamma": 0.2},
            {"Alpha": 1.0, "Beta": 2.0, "Gamma": 3.0},
            growth={"Alpha": 9, "Beta": 6, "Gamma": 4},
        )
        rec = recommend("Hassan", registry)
        assert registry._forecasters["Alpha"].horizons == [9]
        assert registry._forecasters["Beta"].horizons == [6]
        assert registry._forecasters["Gamma"].horizons == [4]
        assert [c.horizon_months for c in rec.candidates] == [9, 6, 4]

    def test_growth_lookup_is_case_insensitive(self):
        registry = _registry(
            {"Alpha": 0.6, "Beta": 0.4},
            {"Alpha": 1.0, "Beta": 2.0},
            growth={"ALPHA": 3, "beta": 5},
        )
        rec = recommend("Hassan", registry)
        assert [c.horizon_months for c in rec.candidates] == [3, 5]


class TestDegradation:
    def test_missing_growth_entry_warns_and_skips(self):
        registry = _registry(
            {"Alpha": 0.5, "Beta": 0.3, "Gamma": 0.2},
            {"Alpha": 100.0, "Beta": 200.0, "Gamma": 300.0},
            growth={"Alpha": 6, "Beta": 6},  # Gamma missing
        )
        rec = recommend("Hassan", registry)
        assert "no growth-period entry for Gamma; price forecast skipped" in rec.warnings
        gamma = next(c for c in rec.candidates if c.crop == "Gamma")
        assert gamma.horizon_months is None and gamma.forecast_price is None
        assert rec.selected == "Beta"  # best among the priced candidates

    def test_missing_price_model_warns_and_skips(self):
        registry = _registry(
            {"Alpha": 0.5, "Beta": 0.3, "Gamma": 0.2},
            {"Alpha": 100.0, "Gamma": 50.0},  # no Beta forecaster
        )
        rec = recommend("Hassan", registry)
        assert "no price model for Beta; price forecast skipped" in rec.warnings
        beta = next(c for c in rec.candidates if c.crop == "Beta")
        assert beta.horizon_months == 6 and beta.forecast_price is None
        assert rec.selected == "Alpha"

    def test_forecaster_failure_degrades_to_warning(self):
        registry = _registry({"Alpha": 0.6, "Beta": 0.4}, {"Beta": 80.0})
        registry._forecasters["Alpha"] = FailingForecaster()
        rec = recommend("Hassan", registry)
        assert "price forecast for Alpha failed: price model exploded" in rec.warnings
        assert rec.selected == "Beta"

    def test_all_candidates_degraded_raises(self):
        registry = _registry({"Alpha": 0.6, "Beta": 0.4}, {})
        with pytest.raises(NoForecastAvailable):
            recommend("Hassan", registry)


class TestRecommendErrors:
    def test_unknown_district(self):
        registry = _registry({"A": 1.0}, {"A": 1.0})
        with pytest.raises(UnknownDistrict):
            recommend("Shangri-La", registry)

    def test_missing_rainfall_entry_names_the_gap(self):
        registry = _registry({"A": 1.0}, {"A": 1.0})
        registry.rainfall = {}
        with pytest.raises(UnknownDistrict, match="no long-term rainfall entry"):
            recommend("Hassan", registry)

    def test_weather_failure_wrapped(self):
        registry = _registry({"A": 1.0}, {"A": 1.0})
        registry._weather = CropcastError("provider down")
        with pytest.raises(WeatherUnavailable, match="Hassan.*provider down"):
            recommend("Hassan", registry)


class TestQueryForms:
    def test_geo_query_fetches_weather_at_query_point(self):
        registry = _registry({"Alpha": 1.0}, {"Alpha": 10.0})
        query = GeoPoint(13.01, 76.12)
        rec = recommend(query, registry)
        assert rec.district == "Hassan"
        assert registry.weather_points == [query]

    def test_feature_vector_query_skips_location_and_weather(self):
        registry = _registry({"Alpha": 0.7, "Beta": 0.3}, {"Alpha": 10.0, "Beta": 5.0})
        vector = FeatureVector(n=90, p=40, k=40, temperature=25, humidity=80, ph=6.5, rainfall=200)
        rec = recommend(vector, registry)
        assert rec.district == "custom"
        assert rec.features_used is vector
        assert registry.weather_points == []

    def test_feature_vector_query_applies_overrides(self):
        registry = _registry({"Alpha": 1.0}, {"Alpha": 10.0})
        vector = FeatureVector(n=90, p=40, k=40, temperature=25, humidity=80, ph=6.5, rainfall=200)
        rec = recommend(vector, registry, overrides={"ph": 7.5})
        assert rec.features_used.ph == 7.5
        assert rec.features_used.n == 90.0

    def test_named_query_applies_overrides_to_assembled_vector(self):
        registry = _registry({"Alpha": 1.0}, {"Alpha": 10.0})
        rec = recommend("Hassan", registry, overrides={"rainfall": 1500})
        assert rec.features_used.rainfall == 1500.0
        assert rec.features_used.n == 125.0


class TestExplanation:
    def _rec(self):
        registry = _registry(
            {"Alpha": 0.5, "Beta": 0.3, "Gamma": 0.2},
            {"Alpha": 100.0, "Beta": 200.0, "Gamma": 150.0},
            growth={"Alpha": 9, "Beta": 6, "Gamma": 4},
        )
        return recommend("Hassan", registry)

    def test_names_district_candidates_prices_and_selection(self):
        text = self._rec().explanation
        assert "For Hassan" in text
        assert "Alpha (suitability 0.50)" in text
        assert "Beta: ₹200.00/kg at its 6-month harvest" in text
        assert "Recommended crop: Beta" in text
        assert "₹200.00/kg in 6 months" in text
        assert "not yield or cost of cultivation" in text

    def test_degraded_candidate_renders_without_empty_slots(self):
        registry = _registry(
            {"Alpha": 0.6, "Beta": 0.4}, {"Beta": 80.0}, growth={"Beta": 6}
        )
        text = recommend("Hassan", registry).explanation
        assert "Alpha: no price forecast available" in text
        assert "None" not in text

    def test_unshipped_language_falls_back_to_english(self):
        rec = self._rec()
        assert explain(rec, language="kn") == explain(rec, language="en")

    def test_explain_matches_embedded_explanation(self):
        rec = self._rec()
        assert explain(rec) == rec.explanation


class TestFixtureIntegration:
    def test_hassan_case(self, registry):
        rec = recommend("Hassan", registry)
        assert rec.selected == "Pepper"
        assert {c.crop for c in rec.candidates} == {"Coffee", "Pepper", "Maize"}
        assert rec.warnings == ()
        assert "₹480.00/kg" in rec.explanation
        assert "6 months" in rec.explanation
        assert rec.features_used.as_array().tolist() == [125.0, 29.0, 260.0, 24.0, 70.0, 6.2, 1000.0]

    def test_district_name_is_case_insensitive(self, registry):
        assert recommend("hassan", registry).district == "Hassan"

    def test_geo_query_matches_named_query(self, registry):
        by_name = recommend("Hassan", registry)
        by_point = recommend(GeoPoint(13.0, 76.1), registry)
        assert by_point.to_dict() == by_name.to_dict()

    def test_to_dict_shape(self, registry):
        doc = recommend("Hassan", registry).to_dict()
        assert set(doc) == {
            "district", "features_used", "candidates", "selected", "explanation", "warnings"
        }
        assert all(
            set(c) == {"crop", "suitability", "horizon_months", "forecast_price"}
            for c in doc["candidates"]
        )
