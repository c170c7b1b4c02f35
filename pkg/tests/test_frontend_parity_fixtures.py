"""Keeps the committed UI parity fixtures in lock-step with the backend.

The frontend test suite asserts its number formatter reproduces these texts
from the parsed values; this side asserts the fixture file itself matches
what the backend currently serializes, so neither side can drift.
"""

import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE = REPO_ROOT / "frontend" / "tests" / "fixtures" / "parity.json"

sys.path.insert(0, str(REPO_ROOT / "scripts"))


def test_fixture_file_is_current():
    from gen_parity_fixtures import render

    assert FIXTURE.is_file(), "run scripts/gen_parity_fixtures.py to create the fixtures"
    assert FIXTURE.read_bytes() == render(), (
        "frontend/tests/fixtures/parity.json is stale; re-run scripts/gen_parity_fixtures.py"
    )


def test_fixture_texts_roundtrip_to_values():
    import json

    doc = json.loads(FIXTURE.read_text("utf-8"))
    for probe in doc["formatter_probes"]:
        assert float(probe["text"]) == probe["value"] or (
            probe["value"] == 0 and float(probe["text"]) == 0.0
        )
    for case in doc["cases"]:
        for value, text in zip(case["features"], case["features_text"]):
            assert float(text) == value
