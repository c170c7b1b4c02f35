import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fafscreen.errors import DataError
from fafscreen.mccv import SplitSpec
from fafscreen.separation import (
    Histogram,
    Trend,
    build_histogram,
    chernoff_check,
    distance_profile,
    hd_curve,
    hellinger,
    monitor_trajectory,
)
from fafscreen.svm import Dataset, Disease, KernelSpec, LabeledSample, SvmConfig, train

LINEAR_CFG = SvmConfig(kernel=KernelSpec.linear(), box_constraint=10.0, standardize=False)


def two_point_dataset():
    return Dataset(
        (
            LabeledSample(np.array([-1.0, -1.0]), -1, Disease.NONE, "h"),
            LabeledSample(np.array([1.0, 1.0]), 1, Disease.STGD, "d"),
        )
    )


class TestHistogram:
    def test_single_value(self):
        h = build_histogram([0.5], [0.0, 1.0])
        assert h.probs == (1.0,)

    def test_two_bins(self):
        h = build_histogram([0.1, 0.9], [0.0, 0.5, 1.0])
        assert h.probs == (0.5, 0.5)

    def test_last_edge_closed(self):
        h = build_histogram([1.0], [0.0, 0.5, 1.0])
        assert h.probs == (0.0, 1.0)

    def test_out_of_range_rejected(self):
        with pytest.raises(DataError, match="outside"):
            build_histogram([1.5], [0.0, 1.0])

    def test_empty_rejected(self):
        with pytest.raises(DataError, match="no values"):
            build_histogram([], [0.0, 1.0])

    def test_bad_edges(self):
        with pytest.raises(DataError):
            build_histogram([0.5], [0.0, 0.0, 1.0])
        with pytest.raises(DataError):
            Histogram((0.0, 1.0), (0.5, 0.5))


class TestHellinger:
    def test_identical_is_zero(self):
        p = build_histogram([0.1, 0.6], [0.0, 0.5, 1.0])
        assert hellinger(p, p) == 0.0

    def test_disjoint_is_one(self):
        edges = [0.0, 0.5, 1.0]
        p = build_histogram([0.2], edges)
        q = build_histogram([0.8], edges)
        assert hellinger(p, q) == 1.0

    def test_hand_case(self):
        edges = (0.0, 0.5, 1.0)
        p = Histogram(edges, (0.5, 0.5))
        q = Histogram(edges, (0.9, 0.1))
        expected = math.sqrt(1.0 - (math.sqrt(0.45) + math.sqrt(0.05)))
        assert hellinger(p, q) == pytest.approx(expected, abs=1e-12)
        assert hellinger(p, q) == pytest.approx(0.324920, abs=1e-6)

    def test_mismatched_edges_rejected(self):
        p = build_histogram([0.2], [0.0, 1.0])
        q = build_histogram([0.2], [0.0, 2.0])
        with pytest.raises(DataError, match="edges"):
            hellinger(p, q)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10**9))
    def test_symmetry_and_range(self, seed):
        rng = np.random.default_rng(seed)
        edges = tuple(np.linspace(0, 1, 9))
        a = rng.dirichlet(np.ones(8))
        b = rng.dirichlet(np.ones(8))
        p = Histogram(edges, tuple(a / a.sum()))
        q = Histogram(edges, tuple(b / b.sum()))
        assert hellinger(p, q) == hellinger(q, p)
        assert 0.0 <= hellinger(p, q) <= 1.0


class TestChernoff:
    def test_trivial_holds(self):
        check = chernoff_check(0.0, 0.0)
        assert check.holds and check.margin == 1.0

    def test_boundary_is_violation(self):
        check = chernoff_check(1.0, 0.0)
        assert not check.holds and check.margin == 0.0

    def test_paper_scale_arithmetic(self):
        check = chernoff_check(0.9165, 0.0945)
        assert check.margin == pytest.approx(math.sqrt(0.9055) - 0.9165, abs=1e-12)
        assert check.margin == pytest.approx(0.035, abs=1e-3)
        assert check.holds

    def test_input_validation(self):
        with pytest.raises(DataError):
            chernoff_check(1.5, 0.0)
        with pytest.raises(DataError):
            chernoff_check(0.5, 1.0)

    def test_pure_function(self):
        assert chernoff_check(0.4, 0.2) == chernoff_check(0.4, 0.2)


class TestDistanceProfile:
    def test_analytic_pair_profile(self):
        # the 2-point analytic configuration, duplicated so each class can
        # be stratified into train and test; every model is the same
        # analytic boundary, so all distances are +/- sqrt(2) with zero std
        data = Dataset(
            (
                LabeledSample(np.array([-1.0, -1.0]), -1, Disease.NONE, "h0"),
                LabeledSample(np.array([-1.0, -1.0]), -1, Disease.NONE, "h1"),
                LabeledSample(np.array([1.0, 1.0]), 1, Disease.STGD, "d0"),
                LabeledSample(np.array([1.0, 1.0]), 1, Disease.STGD, "d1"),
            )
        )
        profile = distance_profile(data, LINEAR_CFG, SplitSpec(0.5, iterations=3, base_seed=0))
        for entry in profile.entries:
            expected = -math.sqrt(2) if entry.label == 1 else math.sqrt(2)
            assert entry.mean_distance == pytest.approx(expected, abs=1e-6)
            assert entry.std_distance == pytest.approx(0.0, abs=1e-9)

    def test_deterministic(self, small_features):
        cfg = SvmConfig(kernel=KernelSpec.rbf(2.0))
        split = SplitSpec(0.7, iterations=4, base_seed=11)
        a = distance_profile(small_features, cfg, split)
        b = distance_profile(small_features, cfg, split, threads=3)
        assert a.entries == b.entries
        assert np.array_equal(a.distances, b.distances)
        assert np.array_equal(a.is_train, b.is_train)

    def test_mean_invariant_under_iteration_reorder(self, small_features):
        cfg = SvmConfig(kernel=KernelSpec.rbf(2.0))
        profile = distance_profile(small_features, cfg, SplitSpec(0.7, iterations=5, base_seed=2))
        flipped = profile.distances[::-1]
        for i, entry in enumerate(profile.entries):
            assert float(flipped[:, i].mean()) == pytest.approx(entry.mean_distance, rel=1e-12)

    def test_csv_shape(self, small_features):
        cfg = SvmConfig(kernel=KernelSpec.rbf(2.0))
        profile = distance_profile(small_features, cfg, SplitSpec(0.7, iterations=2, base_seed=2))
        lines = profile.to_csv().decode().splitlines()
        assert lines[0] == "sample_id,class,disease,mean_dist,std_dist"
        assert len(lines) == len(small_features) + 1


class TestHdCurve:
    def test_well_separated_is_one_with_zero_error(self):
        rng = np.random.default_rng(0)
        samples = [
            LabeledSample(rng.normal(-10, 0.1, size=2), -1, Disease.NONE, f"h{i}")
            for i in range(8)
        ] + [
            LabeledSample(rng.normal(10, 0.1, size=2), 1, Disease.STGD, f"d{i}")
            for i in range(8)
        ]
        data = Dataset(tuple(samples))
        cfg = SvmConfig(kernel=KernelSpec.linear(), box_constraint=100.0, standardize=False)
        curve = hd_curve(data, cfg, [0.5], iterations=4, base_seed=0, bins=16)
        pt = curve.points[0]
        assert pt.h_test == 1.0
        assert pt.root_acc_test == 1.0
        assert pt.fraction_test == 1.0
        # strict bound fails exactly at the H = 1, Pe = 0 boundary
        assert not pt.chernoff_test.holds

    def test_coincident_classes_low_h(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(24, 2))
        samples = [
            LabeledSample(X[i], -1 if i % 2 else 1, Disease.NONE if i % 2 else Disease.STGD, str(i))
            for i in range(24)
        ]
        data = Dataset(tuple(samples))
        cfg = SvmConfig(kernel=KernelSpec.linear(), box_constraint=0.5)
        curve = hd_curve(data, cfg, [0.5], iterations=6, base_seed=1, bins=8)
        assert curve.points[0].h_test < 0.5

    def test_degenerate_range_rejected(self):
        from fafscreen.separation import _membership_hd

        distances = np.full((2, 4), 3.3)  # every pooled distance identical
        member = np.ones((2, 4), dtype=bool)
        labels = np.array([1.0, 1.0, -1.0, -1.0])
        with pytest.raises(DataError, match="degenerate"):
            _membership_hd(distances, member, labels, bins=4)

    def test_csv_format(self, small_features):
        cfg = SvmConfig(kernel=KernelSpec.rbf(2.0))
        curve = hd_curve(small_features, cfg, [0.5, 0.8], iterations=3, base_seed=4, bins=16)
        lines = curve.to_csv().decode().splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("split_ratio,h_train,h_test")


class TestMonitor:
    def make_model(self):
        return train(two_point_dataset(), LINEAR_CFG)

    def test_improving(self):
        model = self.make_model()
        # visits moving from deep diseased toward the boundary
        visits = [np.array([2.0, 2.0]), np.array([1.0, 1.0]), np.array([0.2, 0.2])]
        report = monitor_trajectory(model, visits)
        assert report.distances[0] < report.distances[-1] < 0.0
        assert report.trend == Trend.IMPROVING

    def test_worsening(self):
        model = self.make_model()
        visits = [np.array([1.0, 1.0]), np.array([2.0, 2.0]), np.array([3.0, 3.0])]
        assert monitor_trajectory(model, visits).trend == Trend.WORSENING

    def test_stable(self):
        model = self.make_model()
        visits = [np.array([1.0, 1.0])] * 3
        report = monitor_trajectory(model, visits)
        assert report.trend == Trend.STABLE
        assert abs(report.slope) < 1e-12

    def test_needs_two_visits(self):
        with pytest.raises(DataError, match="2 visits"):
            monitor_trajectory(self.make_model(), [np.array([1.0, 1.0])])

    def test_epsilon_configurable(self):
        model = self.make_model()
        visits = [np.array([1.0, 1.0]), np.array([1.05, 1.05])]
        assert monitor_trajectory(model, visits, epsilon=1e-6).trend == Trend.WORSENING
        assert monitor_trajectory(model, visits, epsilon=1.0).trend == Trend.STABLE
