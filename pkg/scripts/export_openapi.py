#!/usr/bin/env python3
"""Write the service's OpenAPI document to docs/openapi.json.

Run after changing service routes or models so docs/ stays in sync with
the app. The output is pretty-printed (stable key order) to keep diffs
reviewable.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from cropcast.registry import load_manifest
from cropcast.service import create_app

DOCS = ROOT / "docs"
DOCS.mkdir(parents=True, exist_ok=True)


def main():
    registry = load_manifest(ROOT / "fixtures" / "manifest.json", fixtures=True)
    schema = create_app(registry).openapi()
    out = DOCS / "openapi.json"
    out.write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n")
    print(f"[openapi] wrote {out.relative_to(ROOT)} ({len(schema.get('paths', {}))} paths)")


if __name__ == "__main__":
    main()
