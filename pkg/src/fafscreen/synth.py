"""Synthetic FAF-like image generation for end-to-end pipeline exercise.

Healthy eyes are a smooth radial background with a Gaussian foveal dip and
pixel noise; diseased eyes add soft-edged elliptical lesions whose count,
size, and contrast are drawn per disease tag. No physical realism is
attempted: the generator exists to drive the feature/classifier pipeline
with controllable class separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .grid import GridSpec
from .image import FafImage, Laterality, encode_pgm
from .serialize import format_float
from .svm import Disease

__all__ = [
    "LesionParams",
    "SynthParams",
    "SynthSample",
    "SynthDataset",
    "default_lesions",
    "generate_dataset",
    "write_dataset",
    "MANIFEST_HEADER",
]

MANIFEST_HEADER = "filename,label,disease,cx,cy,r1,r2,r3,laterality"


@dataclass(frozen=True)
class LesionParams:
    count_range: tuple[int, int]
    radius_range: tuple[float, float]
    contrast_range: tuple[float, float]

    def __post_init__(self) -> None:
        lo, hi = self.count_range
        if not (0 <= lo <= hi) or hi < 1:
            raise DataError(f"bad lesion count range {self.count_range}")
        for name, (a, b) in (("radius", self.radius_range), ("contrast", self.contrast_range)):
            if not (0 < a <= b):
                raise DataError(f"bad lesion {name} range {(a, b)}")


def default_lesions(image_size: int = 512) -> dict[Disease, LesionParams]:
    """Per-disease lesion defaults, geometry scaled to the image size.

    STGD is deliberately the strongest subtype so subtype-vs-healthy
    separates more than the pooled diseased class does.
    """
    s = image_size / 512.0

    def radii(lo: float, hi: float) -> tuple[float, float]:
        return (max(lo * s, 1.5), max(hi * s, 3.0))

    return {
        Disease.STGD: LesionParams((6, 12), radii(10.0, 28.0), (54.0, 114.0)),
        Disease.CNVM: LesionParams((3, 6), radii(12.0, 36.0), (38.0, 82.0)),
        Disease.CSCR: LesionParams((2, 4), radii(14.0, 40.0), (24.0, 53.0)),
    }


@dataclass(frozen=True)
class SynthParams:
    image_size: int = 512
    n_healthy: int = 61
    n_diseased: int = 79
    background_level: float = 150.0
    background_jitter: float = 10.0  # per-eye level spread (std)
    foveal_dip_depth: float = 55.0
    dip_jitter: float = 12.0  # per-eye dip-depth spread (std)
    noise_sigma: float = 7.0
    # per-eye severity multiplies every lesion contrast; drawn as
    # floor + (1 - floor) * u^0.4, so most eyes are near full severity with a
    # thin tail of barely affected ones (the borderline screening cases)
    severity_floor: float = 0.05
    lesions: dict[Disease, LesionParams] | None = None  # None: size-scaled defaults
    benign_spots: LesionParams | None = None  # faint variation in healthy eyes; None: size-scaled default
    disease_mix: dict[Disease, float] = field(
        default_factory=lambda: {Disease.STGD: 44 / 79, Disease.CNVM: 14 / 79, Disease.CSCR: 21 / 79}
    )
    outer_radius: float | None = None  # grid r3 in pixels; default 0.42 * image_size
    seed: int = 0

    def __post_init__(self) -> None:
        if self.image_size < 32:
            raise DataError("image_size must be at least 32 pixels")
        if self.n_healthy < 2 or self.n_diseased < 2:
            raise DataError("need at least 2 samples per class")
        mix_sum = sum(self.disease_mix.values())
        if abs(mix_sum - 1.0) > 1e-9:
            raise DataError(f"disease mix must sum to 1, got {mix_sum}")
        if Disease.NONE in self.disease_mix:
            raise DataError("disease mix covers diseased tags only")
        if not (0.0 < self.severity_floor <= 1.0):
            raise DataError("severity_floor must lie in (0, 1]")
        if self.lesions is None:
            object.__setattr__(self, "lesions", default_lesions(self.image_size))
        if self.benign_spots is None:
            s = self.image_size / 512.0
            object.__setattr__(
                self,
                "benign_spots",
                LesionParams((0, 2), (max(16.0 * s, 1.5), max(40.0 * s, 3.0)), (3.0, 28.0)),
            )
        for disease in self.disease_mix:
            if disease not in self.lesions:
                raise DataError(f"no lesion parameters for {disease.value}")

    def grid_r3(self) -> float:
        return self.outer_radius if self.outer_radius is not None else 0.42 * self.image_size


@dataclass(frozen=True)
class SynthSample:
    sample_id: str
    image: FafImage
    grid: GridSpec
    label: int
    disease: Disease
    lesion_centers: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class SynthDataset:
    params: SynthParams
    samples: tuple[SynthSample, ...]


def _disease_counts(params: SynthParams) -> list[Disease]:
    """Deterministic largest-remainder apportionment of diseased tags."""
    diseases = sorted(params.disease_mix, key=lambda d: d.value)
    quotas = {d: params.disease_mix[d] * params.n_diseased for d in diseases}
    counts = {d: int(math.floor(quotas[d])) for d in diseases}
    short = params.n_diseased - sum(counts.values())
    for d in sorted(diseases, key=lambda d: (-(quotas[d] - counts[d]), d.value))[:short]:
        counts[d] += 1
    tags: list[Disease] = []
    for d in diseases:
        tags.extend([d] * counts[d])
    return tags


def _base_image(size: int, params: SynthParams, rng: np.random.Generator, r1: float) -> np.ndarray:
    xs = np.arange(size, dtype=np.float64) + 0.5
    cx = cy = size / 2.0
    rr = np.sqrt((xs - cx) ** 2 + (xs[:, None] - cy) ** 2)
    half = size / 2.0
    level = params.background_level + float(rng.normal(0.0, params.background_jitter))
    dip = max(params.foveal_dip_depth + float(rng.normal(0.0, params.dip_jitter)), 0.0)
    img = level * (1.0 - 0.25 * (rr / half) ** 2)
    sigma_f = max(r1 * 0.8, 1.0)
    img -= dip * np.exp(-(rr**2) / (2.0 * sigma_f**2))
    if params.noise_sigma > 0:
        img += rng.normal(0.0, params.noise_sigma, size=(size, size))
    return img


def _add_lesions(
    img: np.ndarray,
    rng: np.random.Generator,
    lesion_params: LesionParams,
    center: tuple[float, float],
    r3: float,
    severity_floor: float,
) -> list[tuple[float, float]]:
    size = img.shape[0]
    r_lo, r_hi = lesion_params.radius_range
    if r_hi >= r3:
        raise DataError(
            f"lesion radius up to {r_hi} px cannot fit inside the grid (r3 = {r3} px)"
        )
    count = int(rng.integers(lesion_params.count_range[0], lesion_params.count_range[1] + 1))
    # disease severity spectrum: one multiplier per eye, scaling every lesion
    severity = severity_floor + (1.0 - severity_floor) * float(rng.uniform()) ** 0.4
    ys = np.arange(size, dtype=np.float64) + 0.5
    xs = np.arange(size, dtype=np.float64) + 0.5
    centers: list[tuple[float, float]] = []
    for _ in range(count):
        radius = float(rng.uniform(r_lo, r_hi))
        # place the whole lesion inside the grid disc
        rho = (r3 - radius) * math.sqrt(float(rng.uniform(0.0, 1.0)))
        theta = float(rng.uniform(0.0, 2.0 * math.pi))
        lx = center[0] + rho * math.cos(theta)
        ly = center[1] + rho * math.sin(theta)
        contrast = severity * float(rng.uniform(*lesion_params.contrast_range))
        if rng.uniform() < 0.7:
            contrast = -contrast  # hypo-fluorescent, the common case
        axis_ratio = float(rng.uniform(0.6, 1.0))
        angle = float(rng.uniform(0.0, math.pi))
        ca, sa = math.cos(angle), math.sin(angle)
        dx = xs[None, :] - lx
        dy = ys[:, None] - ly
        u = (dx * ca + dy * sa) / radius
        v = (-dx * sa + dy * ca) / (radius * axis_ratio)
        rho_n = np.sqrt(u * u + v * v)
        soft = np.where(rho_n <= 1.0, 1.0, np.exp(-(((rho_n - 1.0) / 0.15) ** 2)))
        img += contrast * soft
        centers.append((lx, ly))
    return centers


def generate_dataset(params: SynthParams) -> SynthDataset:
    """Images, grids, and labels; fully deterministic given ``params.seed``.

    Image i draws from its own child stream of the dataset seed, so
    per-image generation may be parallelized without changing pixels.
    """
    size = params.image_size
    r3 = params.grid_r3()
    if not (0 < r3 <= size):
        raise DataError(f"grid outer radius {r3} incompatible with image size {size}")
    tags = [Disease.NONE] * params.n_healthy + _disease_counts(params)
    samples: list[SynthSample] = []
    healthy_seen = 0
    disease_seen: dict[Disease, int] = {}
    for index, disease in enumerate(tags):
        rng = np.random.Generator(
            np.random.Philox(
                np.random.SeedSequence(entropy=params.seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(index,))
            )
        )
        jitter = size / 64.0
        cx = size / 2.0 + float(rng.uniform(-jitter, jitter))
        cy = size / 2.0 + float(rng.uniform(-jitter, jitter))
        laterality = Laterality.OD if rng.uniform() < 0.5 else Laterality.OS
        grid = GridSpec.etdrs(cx, cy, r3, laterality)

        img = _base_image(size, params, rng, grid.r1)
        centers: list[tuple[float, float]] = []
        if disease != Disease.NONE:
            centers = _add_lesions(
                img, rng, params.lesions[disease], (cx, cy), r3, params.severity_floor
            )
        else:
            _add_lesions(img, rng, params.benign_spots, (cx, cy), r3, 1.0)
        pixels = np.clip(np.rint(img), 0, 255).astype(np.int64).ravel()
        faf = FafImage(width=size, height=size, pixels=pixels, max_value=255, laterality=laterality)

        if disease == Disease.NONE:
            sample_id = f"healthy_{healthy_seen:03d}"
            healthy_seen += 1
            label = -1
        else:
            k = disease_seen.get(disease, 0)
            disease_seen[disease] = k + 1
            sample_id = f"{disease.value.lower()}_{k:03d}"
            label = 1
        samples.append(
            SynthSample(
                sample_id=sample_id,
                image=faf,
                grid=grid,
                label=label,
                disease=disease,
                lesion_centers=tuple(centers),
            )
        )
    return SynthDataset(params=params, samples=tuple(samples))


def write_dataset(dataset: SynthDataset, out_dir: str | Path) -> Path:
    """Write PGM images plus the manifest CSV; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [MANIFEST_HEADER]
    for sample in dataset.samples:
        filename = f"{sample.sample_id}.pgm"
        (out / filename).write_bytes(encode_pgm(sample.image))
        g = sample.grid
        lines.append(
            f"{filename},{sample.label},{sample.disease.value},"
            f"{format_float(g.center_x)},{format_float(g.center_y)},"
            f"{format_float(g.r1)},{format_float(g.r2)},{format_float(g.r3)},{g.laterality.value}"
        )
    manifest = out / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest
