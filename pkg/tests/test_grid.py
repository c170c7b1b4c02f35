import math
from fractions import Fraction

import numpy as np
import pytest

from fafscreen.errors import DataError, EmptySectorError
from fafscreen.grid import (
    FEATURE_NAMES,
    SECTOR_ORDER,
    FeatureVector,
    GridSpec,
    SectorId,
    compute_features,
    od_nasal_right,
    sector_map,
    sector_of,
    sector_pixel_counts,
    set_od_nasal_right,
)
from fafscreen.image import FafImage, Laterality

from oracles import brute_force_features


def make_image(width, height, values, maxval=255):
    return FafImage(width=width, height=height, pixels=np.asarray(values).ravel(), max_value=maxval)


def random_image(rng, width, height, maxval=255):
    return make_image(width, height, rng.integers(0, maxval + 1, size=width * height), maxval)


GRID = GridSpec(100.0, 100.0, 10.0, 30.0, 60.0, Laterality.OD)


class TestSectorOf:
    def test_center_is_csf(self):
        assert sector_of(100, 100, GRID) == SectorId.CSF

    def test_right_outer_is_nasal_for_od(self):
        # (140, 100): radius ~40.5 in the outer ring, horizontal-right
        assert sector_of(140, 100, GRID) == SectorId.NOM

    def test_far_pixel_is_outside(self):
        # (100, 30): about 69.5 px above center, beyond r3 = 60
        assert sector_of(100, 30, GRID) is None

    def test_quadrants_od(self):
        assert sector_of(100, 80, GRID) == SectorId.SIM  # image-up
        assert sector_of(100, 120, GRID) == SectorId.IIM  # image-down
        assert sector_of(120, 100, GRID) == SectorId.NIM  # right = nasal (OD)
        assert sector_of(80, 100, GRID) == SectorId.TIM  # left = temporal (OD)

    def test_quadrants_os_swap_horizontal(self):
        grid_os = GridSpec(100.0, 100.0, 10.0, 30.0, 60.0, Laterality.OS)
        assert sector_of(120, 100, grid_os) == SectorId.TIM
        assert sector_of(80, 100, grid_os) == SectorId.NIM
        assert sector_of(100, 80, grid_os) == SectorId.SIM

    def test_diagonal_tie_goes_vertical(self):
        # pixel center offsets (+20.5, -20.5): exactly on the up-right diagonal
        grid = GridSpec(100.5, 100.5, 10.0, 30.0, 60.0, Laterality.OD)
        assert sector_of(120, 80, grid) == SectorId.SIM
        assert sector_of(120, 120, grid) == SectorId.IIM

    def test_radius_tie_goes_inner(self):
        # pixel center exactly at distance r1 on the +x axis
        grid = GridSpec(100.5, 100.5, 10.0, 30.0, 60.0, Laterality.OD)
        assert sector_of(110, 100, grid) == SectorId.CSF  # r == r1
        assert sector_of(130, 100, grid) == SectorId.NIM  # r == r2
        assert sector_of(160, 100, grid) == SectorId.NOM  # r == r3

    def test_total_function_far_away(self):
        assert sector_of(-1000, 99999, GRID) is None

    def test_nasal_convention_flag(self):
        try:
            set_od_nasal_right(False)
            assert sector_of(120, 100, GRID) == SectorId.TIM
        finally:
            set_od_nasal_right(True)
        assert od_nasal_right()


class TestSectorMap:
    def test_matches_scalar_rule(self, rng):
        for _ in range(5):
            cx = float(rng.uniform(-20, 80))
            cy = float(rng.uniform(-20, 80))
            r3 = float(rng.uniform(15, 60))
            lat = Laterality.OD if rng.uniform() < 0.5 else Laterality.OS
            grid = GridSpec.etdrs(cx, cy, r3, lat)
            labels = sector_map(60, 50, grid)
            index = {s: i for i, s in enumerate(SECTOR_ORDER)}
            for y in range(50):
                for x in range(60):
                    sector = sector_of(x, y, grid)
                    expected = -1 if sector is None else index[sector]
                    assert labels[y, x] == expected

    def test_partition_disjoint(self):
        labels = sector_map(200, 200, GRID)
        counts = sector_pixel_counts(200, 200, GRID)
        assert sum(counts.values()) == int((labels >= 0).sum())

    def test_counts_empty_outside(self):
        grid = GridSpec(1000.0, 1000.0, 10.0, 30.0, 60.0, Laterality.OD)
        counts = sector_pixel_counts(1, 1, grid)
        assert all(v == 0 for v in counts.values())

    def test_csf_area_within_two_percent(self):
        grid = GridSpec.etdrs(320.3, 320.7, 300.0, Laterality.OD)  # r1 = 50
        counts = sector_pixel_counts(640, 640, grid)
        analytic = math.pi * grid.r1**2
        assert abs(counts[SectorId.CSF] - analytic) / analytic < 0.02

    def test_total_count_equals_disc_count(self):
        counts = sector_pixel_counts(200, 200, GRID)
        labels = sector_map(200, 200, GRID)
        assert sum(counts.values()) == int((labels != -1).sum())


class TestComputeFeatures:
    def test_constant_image(self):
        img = make_image(200, 200, np.full(40000, 100))
        feats = compute_features(img, GRID)
        assert all(feats.mean_of(s) == 100.0 for s in SECTOR_ORDER)
        assert all(feats.std_of(s) == 0.0 for s in SECTOR_ORDER)

    def test_two_level_disc(self):
        # 50 inside r1, 200 elsewhere; radii placed off half-integer distances
        w = h = 121
        cx = cy = 60.5
        r1 = 10.3
        xs = (np.arange(w) + 0.5) - cx
        ys = (np.arange(h) + 0.5) - cy
        rsq = xs[None, :] ** 2 + ys[:, None] ** 2
        values = np.where(rsq <= r1 * r1, 50, 200)
        img = make_image(w, h, values)
        grid = GridSpec(cx, cy, r1, 30.2, 59.7, Laterality.OD)
        feats = compute_features(img, grid)
        assert feats.mean_of(SectorId.CSF) == 50.0
        assert feats.std_of(SectorId.CSF) == 0.0
        for sector in SECTOR_ORDER[1:]:
            assert feats.mean_of(sector) == 200.0
            assert feats.std_of(sector) == 0.0

    def test_empty_sector_error_names_sector(self):
        img = make_image(40, 40, np.zeros(1600))
        # center in the top-left corner: left and top quadrants are off-image,
        # so the first empty sector in canonical order is TIM
        grid = GridSpec(0.0, 0.0, 3.0, 9.0, 18.0, Laterality.OD)
        with pytest.raises(EmptySectorError) as err:
            compute_features(img, grid)
        assert err.value.sector == SectorId.TIM

    def test_agrees_with_brute_force(self, rng):
        for _ in range(5):
            w, h = int(rng.integers(30, 70)), int(rng.integers(30, 70))
            img = random_image(rng, w, h)
            grid = GridSpec.etdrs(
                float(rng.uniform(w * 0.3, w * 0.7)),
                float(rng.uniform(h * 0.3, h * 0.7)),
                float(rng.uniform(12, min(w, h) * 0.45)),
                Laterality.OD,
            )
            expected = brute_force_features(img, grid)
            if any(v is None for v in expected):
                continue
            got = compute_features(img, grid)
            assert list(got.values) == expected

    def test_shift_equivariance_exact(self, rng):
        """Shifting pixels by c shifts every mean by exactly c (at the
        binary64 rounding boundary) and leaves every std bitwise unchanged."""
        img = random_image(rng, 64, 64, maxval=100)
        grid = GridSpec.etdrs(31.7, 33.2, 25.0, Laterality.OD)
        labels = sector_map(64, 64, grid).ravel()
        c = 97
        shifted = make_image(64, 64, img.pixels.astype(np.int64) + c)
        base = compute_features(img, grid)
        moved = compute_features(shifted, grid)
        for i, sector in enumerate(SECTOR_ORDER):
            members = img.pixels[labels == i].astype(object)
            exact_mean = Fraction(int(sum(members)), int(members.size))
            assert moved.mean_of(sector) == float(exact_mean + c)
            assert moved.std_of(sector) == base.std_of(sector)

    def test_scale_equivariance_exact(self, rng):
        img = random_image(rng, 64, 64, maxval=100)
        grid = GridSpec.etdrs(32.1, 30.9, 25.0, Laterality.OD)
        base = compute_features(img, grid)
        # power-of-two factor: bitwise exact scaling of means and stds
        doubled = make_image(64, 64, img.pixels.astype(np.int64) * 2)
        scaled = compute_features(doubled, grid)
        assert list(scaled.values) == [2.0 * v for v in base.values]
        # zero factor: means and stds collapse to zero
        zeroed = compute_features(make_image(64, 64, np.zeros(4096, dtype=np.int64)), grid)
        assert all(v == 0.0 for v in zeroed.values)

    def test_laterality_swap_permutes_temporal_nasal(self, rng):
        img = random_image(rng, 80, 80)
        od = compute_features(img, GridSpec.etdrs(40.2, 39.8, 30.0, Laterality.OD))
        os_ = compute_features(img, GridSpec.etdrs(40.2, 39.8, 30.0, Laterality.OS))
        swap = {
            SectorId.TIM: SectorId.NIM,
            SectorId.NIM: SectorId.TIM,
            SectorId.TOM: SectorId.NOM,
            SectorId.NOM: SectorId.TOM,
        }
        for sector in SECTOR_ORDER:
            other = swap.get(sector, sector)
            assert od.mean_of(sector) == os_.mean_of(other)
            assert od.std_of(sector) == os_.std_of(other)


class TestTypes:
    def test_grid_invariants(self):
        with pytest.raises(DataError):
            GridSpec(0, 0, 10, 5, 60, Laterality.OD)
        with pytest.raises(DataError):
            GridSpec(0, 0, 0, 5, 60, Laterality.OD)
        with pytest.raises(DataError):
            GridSpec(0, 0, 1, 5, 60, Laterality.UNKNOWN)

    def test_feature_vector_invariants(self):
        with pytest.raises(DataError):
            FeatureVector(tuple([1.0] * 17))
        bad = [1.0] * 18
        bad[1] = -0.5  # CSF_std
        with pytest.raises(DataError):
            FeatureVector(tuple(bad))
        with pytest.raises(DataError):
            FeatureVector(tuple([math.inf] + [1.0] * 17))

    def test_canonical_names(self):
        assert FEATURE_NAMES[:4] == ("CSF_mean", "CSF_std", "TIM_mean", "TIM_std")
        assert len(SECTOR_ORDER) == 9
        assert FEATURE_NAMES[-2:] == ("IOM_mean", "IOM_std")
