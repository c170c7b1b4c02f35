#!/usr/bin/env python3
"""Regenerate the UI parity fixtures.

Five scripted (image, grid) pairs are pushed through the same code paths the
CLI and service use; every displayed number is recorded both as a JSON value
and as its canonical 17-significant-digit text. The frontend formatter must
reproduce the text from the parsed value, digit for digit.
"""

from pathlib import Path

import numpy as np

from fafscreen.grid import SECTOR_ORDER, GridSpec, compute_features, sector_statistics
from fafscreen.image import FafImage, Laterality
from fafscreen.serialize import dumps_json, format_float
from fafscreen.svm import (
    Dataset,
    Disease,
    KernelSpec,
    LabeledSample,
    SvmConfig,
    decision_value,
    signed_distance,
    train,
)

OUT_PATH = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures" / "parity.json"

FORMATTER_PROBES = [
    0.1,
    2.0 / 3.0,
    1e-5,
    9.9e-5,
    1.5e-4,
    0.00012345,
    1e16,
    1e17,
    123456789012345678.0,
    1.7976931348623157e308,
    5e-324,
    2.2250738585072014e-308,
    123.25,
    255.0,
    65535.0,
    12345.678901234567,
    -0.25,
    -1.4142135623730951,
    42.0,
    -7.0,
    3.0000000000000004e-5,
    0.0,
]


def scripted_cases():
    cases = []
    specs = [
        (101, 96, 255, GridSpec(48.0, 48.0, 8.0, 24.0, 40.0, Laterality.OD)),
        (102, 96, 255, GridSpec(47.3, 49.1, 7.5, 21.0, 42.0, Laterality.OS)),
        (103, 80, 255, GridSpec(40.5, 40.5, 6.0, 18.0, 36.0, Laterality.OD)),
        (104, 120, 65535, GridSpec(60.0, 60.0, 10.0, 30.0, 55.0, Laterality.OS)),
        (105, 96, 255, GridSpec(50.0, 45.0, 9.0, 20.0, 38.0, Laterality.OD)),
    ]
    for seed, size, maxval, grid in specs:
        rng = np.random.default_rng(seed)
        pixels = rng.integers(0, maxval + 1, size=size * size)
        img = FafImage(width=size, height=size, pixels=pixels, max_value=maxval)
        cases.append((f"case{seed}", img, grid))
    return cases


def demo_model():
    rng = np.random.default_rng(606)
    samples = [
        LabeledSample(rng.normal(110.0, 20.0, size=18), -1, Disease.NONE, f"h{i}")
        for i in range(6)
    ] + [
        LabeledSample(rng.normal(140.0, 25.0, size=18), 1, Disease.STGD, f"d{i}")
        for i in range(6)
    ]
    return train(Dataset(tuple(samples)), SvmConfig(kernel=KernelSpec.rbf(2.0)))


def build_document():
    model = demo_model()
    case_docs = []
    for name, img, grid in scripted_cases():
        stats = sector_statistics(img, grid)
        features = compute_features(img, grid)
        x = features.as_array()
        decision = decision_value(model, x)
        distance = signed_distance(model, x)
        case_docs.append(
            {
                "name": name,
                "laterality": grid.laterality.value,
                "sectors": {
                    s.value: {
                        "mean": stats[s]["mean"],
                        "mean_text": format_float(stats[s]["mean"]),
                        "std": stats[s]["std"],
                        "std_text": format_float(stats[s]["std"]),
                        "pixel_count": stats[s]["pixel_count"],
                    }
                    for s in SECTOR_ORDER
                },
                "features": list(features.values),
                "features_text": [format_float(v) for v in features.values],
                "classification": {
                    "decision_value": decision,
                    "decision_text": format_float(decision),
                    "signed_distance": distance,
                    "distance_text": format_float(distance),
                },
            }
        )
    return {
        "formatter_probes": [
            {"value": v, "text": format_float(v)} for v in FORMATTER_PROBES
        ],
        "cases": case_docs,
    }


def render() -> bytes:
    return (dumps_json(build_document(), indent=2) + "\n").encode("utf-8")


if __name__ == "__main__":
    OUT_PATH.parent.mkdir(parents=True, exist_ok=True)
    OUT_PATH.write_bytes(render())
    print(f"wrote {OUT_PATH}")
