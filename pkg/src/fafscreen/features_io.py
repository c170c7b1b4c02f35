"""Feature-table and manifest persistence shared by the CLI and the service.

The feature CSV header is fixed to the canonical sector order so feature
indices stay stable across tools and languages; float cells round-trip
exactly at 17 significant digits.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .grid import FEATURE_NAMES, GridSpec
from .image import Laterality
from .serialize import format_float
from .svm import Dataset, Disease, LabeledSample

__all__ = [
    "FEATURE_CSV_HEADER",
    "FeatureRow",
    "FeatureTable",
    "write_features",
    "read_features",
    "ManifestEntry",
    "read_manifest",
]

FEATURE_CSV_HEADER: tuple[str, ...] = ("id", "label", "disease", *FEATURE_NAMES)


@dataclass(frozen=True)
class FeatureRow:
    sample_id: str
    label: int
    disease: Disease
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.label not in (-1, 1):
            raise SchemaError(f"label must be +1 or -1, got {self.label}")
        if len(self.values) != len(FEATURE_NAMES):
            raise SchemaError(
                f"row {self.sample_id!r} has {len(self.values)} feature values, expected {len(FEATURE_NAMES)}"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise SchemaError(f"non-finite feature value in row {self.sample_id!r}")


@dataclass(frozen=True)
class FeatureTable:
    rows: tuple[FeatureRow, ...]

    def __post_init__(self) -> None:
        seen = set()
        for row in self.rows:
            if row.sample_id in seen:
                raise SchemaError(f"duplicate sample id {row.sample_id!r}")
            seen.add(row.sample_id)

    def to_dataset(self) -> Dataset:
        return Dataset(
            tuple(
                LabeledSample(
                    features=np.array(row.values, dtype=np.float64),
                    label=row.label,
                    disease=row.disease,
                    sample_id=row.sample_id,
                )
                for row in self.rows
            )
        )

    @classmethod
    def from_dataset(cls, data: Dataset) -> "FeatureTable":
        rows = []
        for i, s in enumerate(data.samples):
            rows.append(
                FeatureRow(
                    sample_id=s.sample_id or str(i),
                    label=s.label,
                    disease=s.disease,
                    values=tuple(float(v) for v in s.features),
                )
            )
        return cls(tuple(rows))


def write_features(table: FeatureTable) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FEATURE_CSV_HEADER)
    for row in table.rows:
        writer.writerow(
            [row.sample_id, str(row.label), row.disease.value]
            + [format_float(v) for v in row.values]
        )
    return buf.getvalue().encode("utf-8")


def _parse_float(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(f"non-numeric cell {text!r} in {where}") from None
    if not math.isfinite(value):
        raise SchemaError(f"non-finite cell {text!r} in {where}")
    return value


def read_features(data: bytes) -> FeatureTable:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"feature CSV is not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty feature CSV") from None
    if tuple(header) != FEATURE_CSV_HEADER:
        raise SchemaError(
            f"feature CSV header mismatch: expected {','.join(FEATURE_CSV_HEADER)}"
        )
    rows = []
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(FEATURE_CSV_HEADER):
            raise SchemaError(f"line {lineno}: expected {len(FEATURE_CSV_HEADER)} cells, got {len(record)}")
        sample_id, label_text, disease_text = record[0], record[1], record[2]
        try:
            label = int(label_text)
        except ValueError:
            raise SchemaError(f"line {lineno}: label {label_text!r} is not an integer") from None
        if label not in (-1, 1):
            raise SchemaError(f"line {lineno}: label {label} outside {{+1, -1}}")
        disease = Disease.parse(disease_text)
        values = tuple(
            _parse_float(cell, f"line {lineno} column {FEATURE_CSV_HEADER[3 + i]}")
            for i, cell in enumerate(record[3:])
        )
        rows.append(FeatureRow(sample_id=sample_id, label=label, disease=disease, values=values))
    return FeatureTable(tuple(rows))


# ---------------------------------------------------------------------------
# Image manifests (one grid placement per image file)


@dataclass(frozen=True)
class ManifestEntry:
    filename: str
    label: int
    disease: Disease
    grid: GridSpec


MANIFEST_COLUMNS = ("filename", "label", "disease", "cx", "cy", "r1", "r2", "r3", "laterality")


def read_manifest(data: bytes, base_dir: str | Path | None = None) -> list[ManifestEntry]:
    """Parse a manifest CSV; filenames stay relative to ``base_dir`` if given."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"manifest is not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty manifest") from None
    if tuple(header) != MANIFEST_COLUMNS:
        raise SchemaError(f"manifest header mismatch: expected {','.join(MANIFEST_COLUMNS)}")
    entries = []
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(MANIFEST_COLUMNS):
            raise SchemaError(f"manifest line {lineno}: expected {len(MANIFEST_COLUMNS)} cells")
        filename, label_text, disease_text = record[0], record[1], record[2]
        try:
            label = int(label_text)
        except ValueError:
            raise SchemaError(f"manifest line {lineno}: bad label {label_text!r}") from None
        if label not in (-1, 1):
            raise SchemaError(f"manifest line {lineno}: label {label} outside {{+1, -1}}")
        cx, cy, r1, r2, r3 = (
            _parse_float(record[i], f"manifest line {lineno}") for i in range(3, 8)
        )
        try:
            laterality = Laterality.parse(record[8])
        except ValueError as exc:
            raise SchemaError(f"manifest line {lineno}: {exc}") from None
        if laterality == Laterality.UNKNOWN:
            raise SchemaError(f"manifest line {lineno}: grid laterality must be OD or OS")
        name = filename if base_dir is None else str(Path(base_dir) / filename)
        entries.append(
            ManifestEntry(
                filename=name,
                label=label,
                disease=Disease.parse(disease_text),
                grid=GridSpec(cx, cy, r1, r2, r3, laterality),
            )
        )
    return entries
