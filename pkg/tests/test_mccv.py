import numpy as np
import pytest

from fafscreen.errors import DataError
from fafscreen.mccv import (
    ConfusionMatrix,
    SplitSpec,
    confusion_from_predictions,
    iteration_rng,
    report_to_json,
    round_half_away,
    run_mccv,
    scale_factor_sweep,
    stratified_split,
    stratified_split_indices,
)
from fafscreen.serialize import dumps_json
from fafscreen.svm import Dataset, Disease, KernelSpec, LabeledSample, SvmConfig


def toy_dataset(n_healthy, n_diseased, rng=None, separation=4.0):
    rng = rng or np.random.default_rng(0)
    samples = []
    for i in range(n_healthy):
        samples.append(
            LabeledSample(rng.normal(loc=-separation / 2, size=2), -1, Disease.NONE, f"h{i}")
        )
    for i in range(n_diseased):
        samples.append(
            LabeledSample(rng.normal(loc=separation / 2, size=2), 1, Disease.STGD, f"d{i}")
        )
    return Dataset(tuple(samples))


class TestRounding:
    def test_half_away_from_zero(self):
        assert round_half_away(48.8) == 49
        assert round_half_away(63.2) == 63
        assert round_half_away(2.5) == 3
        assert round_half_away(-2.5) == -3
        assert round_half_away(0.5) == 1


class TestStratifiedSplit:
    def test_paper_cohort_counts(self):
        labels = np.array([-1.0] * 61 + [1.0] * 79)
        train_idx, test_idx = stratified_split_indices(labels, 0.8, iteration_rng(0, 0))
        train_labels = labels[list(train_idx)]
        assert int(np.sum(train_labels == -1)) == 49  # round(0.8 * 61)
        assert int(np.sum(train_labels == 1)) == 63  # round(0.8 * 79)
        assert len(test_idx) == 140 - 112

    def test_half_split(self):
        labels = np.array([-1.0] * 4 + [1.0] * 4)
        train_idx, test_idx = stratified_split_indices(labels, 0.5, iteration_rng(1, 0))
        assert len(train_idx) == 4 and len(test_idx) == 4

    def test_single_sample_class_rejected(self):
        labels = np.array([-1.0, 1.0, 1.0])
        with pytest.raises(DataError, match="at least 2"):
            stratified_split_indices(labels, 0.5, iteration_rng(0, 0))

    def test_partition_property(self):
        data = toy_dataset(6, 9)
        for k in range(10):
            train, test = stratified_split(data, 0.7, iteration_rng(5, k))
            ids = sorted(s.sample_id for s in train.samples + test.samples)
            assert ids == sorted(s.sample_id for s in data.samples)
            assert not (
                {s.sample_id for s in train.samples} & {s.sample_id for s in test.samples}
            )

    def test_clamping_keeps_both_sides(self):
        labels = np.array([-1.0, -1.0, 1.0, 1.0])
        for fraction in (0.01, 0.99):
            train_idx, test_idx = stratified_split_indices(labels, fraction, iteration_rng(2, 0))
            assert len(train_idx) == 2 and len(test_idx) == 2


class TestConfusion:
    def test_all_correct(self):
        cm = confusion_from_predictions([(1, 1), (1, 1), (-1, -1)])
        assert cm.values == ((100.0, 0.0), (0.0, 100.0))

    def test_diseased_always_wrong(self):
        cm = confusion_from_predictions([(1, -1), (1, -1), (-1, -1)])
        assert cm.values[0][0] == 0.0 and cm.values[1][0] == 100.0

    def test_counted_percentages(self):
        pairs = [(1, 1)] * 9 + [(1, -1)] + [(-1, -1)] * 8 + [(-1, 1)] * 2
        cm = confusion_from_predictions(pairs)
        assert cm.values == ((90.0, 20.0), (10.0, 80.0))

    def test_missing_class_rejected(self):
        with pytest.raises(DataError, match="healthy"):
            confusion_from_predictions([(1, 1)])

    def test_column_sums_invariant(self):
        with pytest.raises(DataError, match="sum"):
            ConfusionMatrix(((50.0, 0.0), (10.0, 100.0)))


class TestRunMccv:
    CFG = SvmConfig(kernel=KernelSpec.linear(), box_constraint=100.0, standardize=False)

    def test_separable_data_perfect_training(self):
        data = toy_dataset(8, 8, separation=8.0)
        report = run_mccv(data, self.CFG, SplitSpec(0.5, iterations=12, base_seed=9))
        assert report.train_acc_mean == 100.0
        assert report.train_acc_std == 0.0

    def test_deterministic_across_threads(self, small_features):
        cfg = SvmConfig(kernel=KernelSpec.rbf(2.0))
        split = SplitSpec(0.7, iterations=8, base_seed=77)
        a = run_mccv(small_features, cfg, split, threads=1)
        b = run_mccv(small_features, cfg, split, threads=4)
        assert dumps_json(report_to_json(a)) == dumps_json(report_to_json(b))
        assert a == b

    def test_repeat_identical(self, small_features):
        cfg = SvmConfig(kernel=KernelSpec.rbf(2.0))
        split = SplitSpec(0.8, iterations=3, base_seed=5)
        assert run_mccv(small_features, cfg, split) == run_mccv(small_features, cfg, split)

    def test_columns_sum_every_iteration(self, small_features):
        cfg = SvmConfig(kernel=KernelSpec.rbf(2.75))
        report = run_mccv(small_features, cfg, SplitSpec(0.6, iterations=6, base_seed=3))
        for record in report.records:
            sums = record.test_confusion.as_array().sum(axis=0)
            assert np.all(np.abs(sums - 100.0) <= 1e-9)
        assert np.all(np.abs(report.test_confusion_mean.as_array().sum(axis=0) - 100.0) <= 1e-9)

    def test_single_iteration_stds_zero(self):
        data = toy_dataset(5, 5, separation=10.0)
        report = run_mccv(data, self.CFG, SplitSpec(0.6, iterations=1, base_seed=0))
        assert report.train_acc_std == 0.0
        assert report.test_acc_std == 0.0
        assert report.train_acc_mean == 100.0


class TestSweep:
    def test_single_sf(self, small_features):
        split = SplitSpec(0.7, iterations=3, base_seed=1)
        sweep = scale_factor_sweep(small_features, [2.0], split)
        assert len(sweep.rows) == 1
        assert sweep.best_scale_factor == 2.0

    def test_tie_prefers_smaller(self):
        data = toy_dataset(6, 6, separation=12.0)  # trivially separable: all SFs tie
        split = SplitSpec(0.5, iterations=4, base_seed=2)
        sweep = scale_factor_sweep(data, [3.0, 1.0, 2.0], split, box_constraint=50.0)
        accs = {r.scale_factor: r.report.test_acc_mean for r in sweep.rows}
        assert accs[1.0] == accs[2.0] == accs[3.0] == 100.0
        assert sweep.best_scale_factor == 1.0

    def test_best_is_argmax(self, small_features):
        split = SplitSpec(0.7, iterations=4, base_seed=8)
        sweep = scale_factor_sweep(small_features, [1.0, 2.75, 5.0], split)
        best_acc = max(r.report.test_acc_mean for r in sweep.rows)
        best_row = next(r for r in sweep.rows if r.scale_factor == sweep.best_scale_factor)
        assert best_row.report.test_acc_mean == best_acc

    def test_rejects_bad_sf(self, small_features):
        split = SplitSpec(0.7, iterations=1, base_seed=0)
        with pytest.raises(DataError):
            scale_factor_sweep(small_features, [], split)
        with pytest.raises(DataError):
            scale_factor_sweep(small_features, [-1.0], split)


class TestSpecs:
    def test_split_spec_bounds(self):
        with pytest.raises(DataError):
            SplitSpec(0.0)
        with pytest.raises(DataError):
            SplitSpec(1.0)
        with pytest.raises(DataError):
            SplitSpec(0.5, iterations=0)
