"""ETDRS nine-sector geometry and sectoral intensity statistics.

The grid is anchored at an operator-supplied fovea center: a central disc
(CSF), an inner ring, and an outer ring, the rings split into quadrants by
the two 45-degree diagonals. Horizontal quadrants are temporal or nasal
depending on eye laterality.

Pixel membership uses a pixel-center point test against squared radii, so
the vectorized sector map and the scalar :func:`sector_of` agree bit for
bit. Sector statistics are computed from exact integer sums with a single
float64 rounding at the end, which makes standard deviations bitwise
invariant under intensity shifts and both statistics exactly
power-of-two-scale equivariant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, EmptySectorError
from .image import FafImage, Laterality

__all__ = [
    "SectorId",
    "SECTOR_ORDER",
    "FEATURE_NAMES",
    "GridSpec",
    "FeatureVector",
    "sector_of",
    "sector_map",
    "sector_pixel_counts",
    "compute_features",
    "sector_statistics",
    "set_od_nasal_right",
    "od_nasal_right",
]


class SectorId(enum.Enum):
    CSF = "CSF"  # central subfield
    TIM = "TIM"  # temporal inner macula
    SIM = "SIM"  # superior inner macula
    NIM = "NIM"  # nasal inner macula
    IIM = "IIM"  # inferior inner macula
    TOM = "TOM"  # temporal outer macula
    SOM = "SOM"  # superior outer macula
    NOM = "NOM"  # nasal outer macula
    IOM = "IOM"  # inferior outer macula


SECTOR_ORDER: tuple[SectorId, ...] = (
    SectorId.CSF,
    SectorId.TIM,
    SectorId.SIM,
    SectorId.NIM,
    SectorId.IIM,
    SectorId.TOM,
    SectorId.SOM,
    SectorId.NOM,
    SectorId.IOM,
)

FEATURE_NAMES: tuple[str, ...] = tuple(
    f"{sector.value}_{stat}" for sector in SECTOR_ORDER for stat in ("mean", "std")
)

_SECTOR_INDEX = {sector: i for i, sector in enumerate(SECTOR_ORDER)}

# Default convention: right eye (OD) has the nasal retina on the image
# right; a process-wide flag flips it for toolchains exporting mirrored.
_OD_NASAL_RIGHT = True


def set_od_nasal_right(flag: bool) -> None:
    global _OD_NASAL_RIGHT
    _OD_NASAL_RIGHT = bool(flag)


def od_nasal_right() -> bool:
    return _OD_NASAL_RIGHT


@dataclass(frozen=True)
class GridSpec:
    """Fovea-centered grid placement: sub-pixel center, ring radii, laterality.

    Radii are outer boundaries of CSF, inner ring, and outer ring. The
    center may lie anywhere, even outside the image; feature extraction
    validates sector coverage.
    """

    center_x: float
    center_y: float
    r1: float
    r2: float
    r3: float
    laterality: Laterality

    def __post_init__(self) -> None:
        if not (0 < self.r1 < self.r2 < self.r3):
            raise DataError(f"grid radii must satisfy 0 < r1 < r2 < r3, got {self.r1}, {self.r2}, {self.r3}")
        if not all(math.isfinite(v) for v in (self.center_x, self.center_y, self.r3)):
            raise DataError("grid parameters must be finite")
        if self.laterality not in (Laterality.OD, Laterality.OS):
            raise DataError("grid laterality must be OD or OS")

    @classmethod
    def etdrs(cls, center_x: float, center_y: float, r3: float, laterality: Laterality) -> "GridSpec":
        """Grid with the standard 1:3:6 ETDRS diameter proportions scaled to r3."""
        return cls(center_x, center_y, r3 / 6.0, r3 / 2.0, r3, laterality)


@dataclass(frozen=True)
class FeatureVector:
    """The 18 sectoral statistics in canonical order: (sector) x (mean, std)."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(FEATURE_NAMES):
            raise DataError(f"feature vector needs {len(FEATURE_NAMES)} values, got {len(self.values)}")
        for name, v in zip(FEATURE_NAMES, self.values):
            if not math.isfinite(v):
                raise DataError(f"non-finite feature {name}")
            if name.endswith("_std") and v < 0:
                raise DataError(f"negative std feature {name}")

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)

    def mean_of(self, sector: SectorId) -> float:
        return self.values[2 * _SECTOR_INDEX[sector]]

    def std_of(self, sector: SectorId) -> float:
        return self.values[2 * _SECTOR_INDEX[sector] + 1]


def _nasal_is_right(laterality: Laterality) -> bool:
    return (laterality == Laterality.OD) == _OD_NASAL_RIGHT


def sector_of(px: int, py: int, grid: GridSpec) -> SectorId | None:
    """Sector containing the pixel centered at ``(px + 0.5, py + 0.5)``.

    Radius boundaries belong to the inner region; diagonal boundaries belong
    to the vertical (superior/inferior) quadrants. Returns ``None`` outside
    the grid. Total function: any integer coordinates are accepted.
    """
    dx = (px + 0.5) - grid.center_x
    dy = (py + 0.5) - grid.center_y
    rsq = dx * dx + dy * dy
    if rsq > grid.r3 * grid.r3:
        return None
    if rsq <= grid.r1 * grid.r1:
        return SectorId.CSF
    inner = rsq <= grid.r2 * grid.r2
    adx = abs(dx)
    if -dy >= adx:
        return SectorId.SIM if inner else SectorId.SOM
    if dy >= adx:
        return SectorId.IIM if inner else SectorId.IOM
    nasal = (dx > 0) == _nasal_is_right(grid.laterality)
    if nasal:
        return SectorId.NIM if inner else SectorId.NOM
    return SectorId.TIM if inner else SectorId.TOM


def sector_map(width: int, height: int, grid: GridSpec) -> np.ndarray:
    """(height, width) int8 array of sector indices in canonical order, -1 outside.

    Bit-for-bit equivalent to evaluating :func:`sector_of` per pixel.
    """
    xs = np.arange(width, dtype=np.float64) + 0.5 - grid.center_x
    ys = np.arange(height, dtype=np.float64) + 0.5 - grid.center_y
    dx = np.broadcast_to(xs, (height, width))
    dy = np.broadcast_to(ys[:, None], (height, width))
    rsq = dx * dx + dy * dy

    out = np.full((height, width), -1, dtype=np.int8)
    in_grid = rsq <= grid.r3 * grid.r3
    inner_ring = rsq <= grid.r2 * grid.r2
    csf = rsq <= grid.r1 * grid.r1

    adx = np.abs(dx)
    superior = -dy >= adx
    inferior = dy >= adx
    right = dx > 0
    nasal = right == _nasal_is_right(grid.laterality)

    def code(sector: SectorId) -> int:
        return _SECTOR_INDEX[sector]

    horiz = ~superior & ~inferior
    out[in_grid & inner_ring & ~csf & superior] = code(SectorId.SIM)
    out[in_grid & inner_ring & ~csf & inferior] = code(SectorId.IIM)
    out[in_grid & inner_ring & ~csf & horiz & nasal] = code(SectorId.NIM)
    out[in_grid & inner_ring & ~csf & horiz & ~nasal] = code(SectorId.TIM)
    out[in_grid & ~inner_ring & superior] = code(SectorId.SOM)
    out[in_grid & ~inner_ring & inferior] = code(SectorId.IOM)
    out[in_grid & ~inner_ring & horiz & nasal] = code(SectorId.NOM)
    out[in_grid & ~inner_ring & horiz & ~nasal] = code(SectorId.TOM)
    out[csf & in_grid] = code(SectorId.CSF)
    return out


def sector_pixel_counts(width: int, height: int, grid: GridSpec) -> dict[SectorId, int]:
    """In-bounds pixel count per sector (zero for uncovered sectors)."""
    labels = sector_map(width, height, grid)
    counts = np.bincount(labels[labels >= 0].ravel(), minlength=len(SECTOR_ORDER))
    return {sector: int(counts[i]) for i, sector in enumerate(SECTOR_ORDER)}


def _exact_mean_std(values: np.ndarray) -> tuple[float, float]:
    """Mean and population std from exact integer sums.

    The sums are exact Python integers, so each statistic is the correctly
    rounded float64 of the exact rational (the std rounds twice: variance,
    then square root). Shifting every value by an integer leaves the
    variance numerator literally unchanged.
    """
    n = int(values.size)
    s = int(np.sum(values, dtype=np.int64))
    s2 = int(np.sum(values.astype(np.int64) ** 2, dtype=np.int64))
    mean = s / n
    var_num = n * s2 - s * s  # exact, non-negative by Cauchy-Schwarz
    std = math.sqrt(var_num / (n * n))
    return mean, std


def compute_features(img: FafImage, grid: GridSpec) -> FeatureVector:
    """The 18-entry sectoral feature vector of ``img`` under ``grid``.

    Raises :class:`EmptySectorError` naming the first (canonical-order)
    sector with zero in-bounds pixels.
    """
    labels = sector_map(img.width, img.height, grid).ravel()
    pixels = img.pixels
    values: list[float] = []
    for i, sector in enumerate(SECTOR_ORDER):
        members = pixels[labels == i]
        if members.size == 0:
            raise EmptySectorError(sector)
        mean, std = _exact_mean_std(members)
        values.append(mean)
        values.append(std)
    return FeatureVector(tuple(values))


def sector_statistics(img: FafImage, grid: GridSpec) -> dict[SectorId, dict[str, float | int]]:
    """Per-sector {mean, std, pixel_count}; the service's grid-evaluation payload."""
    features = compute_features(img, grid)
    counts = sector_pixel_counts(img.width, img.height, grid)
    return {
        sector: {
            "mean": features.mean_of(sector),
            "std": features.std_of(sector),
            "pixel_count": counts[sector],
        }
        for sector in SECTOR_ORDER
    }
