#!/usr/bin/env python3
"""Snapshot service responses under the fixture manifest into tests/golden/.

The byte-for-byte service tests compare against these files. Regenerate
(after `scripts/make_fixtures.py`, if the fixtures changed) and review the
diff before committing — these are contract artifacts, not throwaways.
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from fastapi.testclient import TestClient

from cropcast.registry import load_manifest
from cropcast.service import create_app

GOLDEN = ROOT / "tests" / "golden"
GOLDEN.mkdir(parents=True, exist_ok=True)

CASES = [
    ("districts.json", "GET", "/api/v1/districts", None, None),
    ("recommend_hassan.json", "POST", "/api/v1/recommend", {"district": "Hassan"}, None),
    ("recommend_geo.json", "POST", "/api/v1/recommend", {"lat": 13.0, "lon": 76.1}, None),
    ("forecast_pepper_6.json", "GET", "/api/v1/forecast/Pepper", None, {"horizon": "6"}),
    ("query_recommend.json", "POST", "/api/v1/query", {"text": "recommend a crop for Hassan"}, None),
    ("query_price.json", "POST", "/api/v1/query", {"text": "price of pepper in 3 months"}, None),
    ("query_unknown.json", "POST", "/api/v1/query", {"text": "what is the meaning of life"}, None),
    ("capabilities.json", "GET", "/api/v1/capabilities", None, None),
]


def main():
    registry = load_manifest(ROOT / "fixtures" / "manifest.json", fixtures=True)
    client = TestClient(create_app(registry))
    for name, method, url, body, params in CASES:
        if method == "GET":
            response = client.get(url, params=params)
        else:
            response = client.post(url, json=body)
        assert response.status_code == 200, f"{name}: {response.status_code} {response.content!r}"
        (GOLDEN / name).write_bytes(response.content)
        print(f"[goldens] wrote {name} ({len(response.content)} bytes)")


if __name__ == "__main__":
    main()
