"""Stratified Monte Carlo cross-validation and accuracy/confusion aggregation.

Each iteration draws its randomness from an independent Philox stream keyed
by (base_seed, iteration), so reports are bit-identical regardless of
thread count or execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DataError
from .serialize import dumps_json, format_float
from .svm import Dataset, SvmConfig, SvmModel, decision_values, train

__all__ = [
    "SplitSpec",
    "ConfusionMatrix",
    "IterationRecord",
    "MccvReport",
    "SweepRow",
    "SweepReport",
    "round_half_away",
    "iteration_rng",
    "stratified_split",
    "stratified_split_indices",
    "run_mccv",
    "scale_factor_sweep",
    "confusion_from_predictions",
    "report_to_json",
    "reports_to_table_csv",
]


def round_half_away(x: float) -> int:
    """round() with halves away from zero, as used for stratified counts."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    iterations: int = 5000
    base_seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.train_fraction < 1.0):
            raise DataError(f"train fraction must lie in (0, 1), got {self.train_fraction}")
        if self.iterations < 1:
            raise DataError("iterations must be a positive integer")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Column-normalized percentages; columns = actual (diseased, healthy),
    rows = predicted (diseased, healthy)."""

    values: tuple[tuple[float, float], tuple[float, float]]

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (2, 2):
            raise DataError("confusion matrix must be 2x2")
        if np.any(arr < 0) or np.any(arr > 100):
            raise DataError("confusion entries must lie in [0, 100]")
        sums = arr.sum(axis=0)
        if np.any(np.abs(sums - 100.0) > 1e-9):
            raise DataError(f"confusion columns must sum to 100, got {sums}")
        object.__setattr__(
            self, "values", tuple(tuple(float(v) for v in row) for row in arr)
        )

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def confusion_from_predictions(pairs) -> ConfusionMatrix:
    """Column-normalized confusion from (actual, predicted) label pairs."""
    counts = np.zeros((2, 2), dtype=np.int64)  # [predicted][actual], diseased first
    for actual, predicted in pairs:
        if actual not in (-1, 1) or predicted not in (-1, 1):
            raise DataError(f"labels must be +1/-1, got ({actual}, {predicted})")
        counts[0 if predicted == 1 else 1, 0 if actual == 1 else 1] += 1
    col_totals = counts.sum(axis=0)
    if np.any(col_totals == 0):
        missing = "diseased" if col_totals[0] == 0 else "healthy"
        raise DataError(f"no {missing} samples among the actual labels")
    percents = counts * (100.0 / col_totals)
    return ConfusionMatrix(tuple(tuple(float(v) for v in row) for row in percents))


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    train_accuracy: float  # percent
    test_accuracy: float
    test_confusion: ConfusionMatrix
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    model: SvmModel | None = None


@dataclass(frozen=True)
class MccvReport:
    train_fraction: float
    iterations: int
    base_seed: int
    train_acc_mean: float
    train_acc_std: float
    test_acc_mean: float
    test_acc_std: float
    test_confusion_mean: ConfusionMatrix
    test_confusion_std: tuple[tuple[float, float], tuple[float, float]]
    records: tuple[IterationRecord, ...]


def iteration_rng(base_seed: int, iteration: int) -> np.random.Generator:
    """Independent counter-based stream for one MCCV iteration."""
    seq = np.random.SeedSequence(entropy=base_seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(iteration,))
    return np.random.Generator(np.random.Philox(seq))


def stratified_split_indices(
    labels: np.ndarray, fraction: float, rng: np.random.Generator
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Per-class round(fraction * n_c) training indices, clamped to [1, n_c - 1].

    Returned index tuples are sorted ascending, so subset ordering follows
    the parent dataset.
    """
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls in (1, -1):
        members = np.flatnonzero(labels == cls)
        n_c = members.size
        if n_c < 2:
            raise DataError(
                f"class {cls:+d} has {n_c} sample(s); at least 2 are needed to split"
            )
        n_train = min(max(round_half_away(fraction * n_c), 1), n_c - 1)
        picked = rng.permutation(n_c)[:n_train]
        chosen = set(members[picked].tolist())
        train_idx.extend(i for i in members.tolist() if i in chosen)
        test_idx.extend(i for i in members.tolist() if i not in chosen)
    return tuple(sorted(train_idx)), tuple(sorted(test_idx))


def stratified_split(
    data: Dataset, fraction: float, rng: np.random.Generator
) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = stratified_split_indices(data.labels(), fraction, rng)
    return data.subset(train_idx), data.subset(test_idx)


def _accuracy_percent(fs: np.ndarray, labels: np.ndarray) -> float:
    predicted = np.where(fs >= 0.0, 1.0, -1.0)
    return 100.0 * float(np.mean(predicted == labels))


def _run_iteration(
    data: Dataset, cfg: SvmConfig, split: SplitSpec, k: int, keep_model: bool
) -> IterationRecord:
    rng = iteration_rng(split.base_seed, k)
    labels = data.labels()
    train_idx, test_idx = stratified_split_indices(labels, split.train_fraction, rng)
    try:
        model = train(data.subset(train_idx), cfg)
    except ConvergenceError as exc:
        raise ConvergenceError(f"iteration {k}: {exc}", model=exc.model) from exc
    X = data.feature_matrix()
    f_train = decision_values(model, X[list(train_idx)])
    f_test = decision_values(model, X[list(test_idx)])
    y_train = labels[list(train_idx)]
    y_test = labels[list(test_idx)]
    pairs = [
        (int(a), 1 if f >= 0.0 else -1) for a, f in zip(y_test, f_test)
    ]
    return IterationRecord(
        iteration=k,
        train_accuracy=_accuracy_percent(f_train, y_train),
        test_accuracy=_accuracy_percent(f_test, y_test),
        test_confusion=confusion_from_predictions(pairs),
        train_indices=train_idx,
        test_indices=test_idx,
        model=model if keep_model else None,
    )


def run_mccv(
    data: Dataset,
    cfg: SvmConfig,
    split: SplitSpec,
    threads: int = 1,
    keep_models: bool = False,
) -> MccvReport:
    """Repeated stratified split/train/score with deterministic aggregation."""
    ks = range(split.iterations)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(
                pool.map(lambda k: _run_iteration(data, cfg, split, k, keep_models), ks)
            )
    else:
        records = [_run_iteration(data, cfg, split, k, keep_models) for k in ks]

    train_accs = np.array([r.train_accuracy for r in records])
    test_accs = np.array([r.test_accuracy for r in records])
    confusions = np.array([r.test_confusion.as_array() for r in records])
    conf_mean = confusions.mean(axis=0)
    conf_std = confusions.std(axis=0)  # population std, matching accuracy stds
    return MccvReport(
        train_fraction=split.train_fraction,
        iterations=split.iterations,
        base_seed=split.base_seed,
        train_acc_mean=float(train_accs.mean()),
        train_acc_std=float(train_accs.std()),
        test_acc_mean=float(test_accs.mean()),
        test_acc_std=float(test_accs.std()),
        test_confusion_mean=ConfusionMatrix(tuple(tuple(float(v) for v in row) for row in conf_mean)),
        test_confusion_std=tuple(tuple(float(v) for v in row) for row in conf_std),
        records=tuple(records),
    )


@dataclass(frozen=True)
class SweepRow:
    scale_factor: float
    report: MccvReport


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]
    best_scale_factor: float


def scale_factor_sweep(
    data: Dataset,
    sf_values,
    split: SplitSpec,
    box_constraint: float = 1.0,
    kkt_tolerance: float = 1e-3,
    max_passes: int = 100_000,
    standardize: bool = True,
    threads: int = 1,
) -> SweepReport:
    """run_mccv per RBF scale factor; best = argmax test accuracy, ties to the smallest SF."""
    sf_list = [float(v) for v in sf_values]
    if not sf_list:
        raise DataError("scale factor sweep needs at least one value")
    if any(not (v > 0) for v in sf_list):
        raise DataError("scale factors must be positive")
    from .svm import KernelSpec

    rows = []
    for sf in sf_list:
        cfg = SvmConfig(
            kernel=KernelSpec.rbf(sf),
            box_constraint=box_constraint,
            kkt_tolerance=kkt_tolerance,
            max_passes=max_passes,
            standardize=standardize,
        )
        rows.append(SweepRow(scale_factor=sf, report=run_mccv(data, cfg, split, threads=threads)))
    best = max(rows, key=lambda r: (r.report.test_acc_mean, -r.scale_factor))
    return SweepReport(rows=tuple(rows), best_scale_factor=best.scale_factor)


# ---------------------------------------------------------------------------
# Serialization


def _confusion_doc(mean: ConfusionMatrix, std) -> dict:
    return {
        "columns": ["actual_diseased", "actual_healthy"],
        "rows": ["predicted_diseased", "predicted_healthy"],
        "mean_percent": [list(r) for r in mean.values],
        "std_percent": [list(r) for r in std],
    }


def report_to_json(report: MccvReport) -> dict:
    return {
        "train_fraction": report.train_fraction,
        "iterations": report.iterations,
        "base_seed": report.base_seed,
        "train_acc_mean": report.train_acc_mean,
        "train_acc_std": report.train_acc_std,
        "test_acc_mean": report.test_acc_mean,
        "test_acc_std": report.test_acc_std,
        "test_confusion": _confusion_doc(report.test_confusion_mean, report.test_confusion_std),
    }


def reports_to_table_csv(rows: list[dict]) -> bytes:
    """CSV with one row per split ratio: linear and/or RBF stats plus gains.

    Each input dict may carry ``linear`` and/or ``rbf`` MccvReport values
    keyed by kernel, plus ``sf`` for the RBF scale factor in play.
    """
    header = [
        "split_ratio",
        "linear_train_mean", "linear_train_std", "linear_test_mean", "linear_test_std",
        "sf",
        "rbf_train_mean", "rbf_train_std", "rbf_test_mean", "rbf_test_std",
        "train_gain_mean_pct", "train_gain_std_pct", "test_gain_mean_pct", "test_gain_std_pct",
    ]
    lines = [",".join(header)]
    for row in rows:
        linear: MccvReport | None = row.get("linear")
        rbf: MccvReport | None = row.get("rbf")
        sf = row.get("sf")
        cells = [format_float(float(row["split_ratio"]))]
        for rep in (linear,):
            if rep is None:
                cells += ["", "", "", ""]
            else:
                cells += [
                    format_float(rep.train_acc_mean), format_float(rep.train_acc_std),
                    format_float(rep.test_acc_mean), format_float(rep.test_acc_std),
                ]
        cells.append("" if sf is None else format_float(float(sf)))
        if rbf is None:
            cells += ["", "", "", ""]
        else:
            cells += [
                format_float(rbf.train_acc_mean), format_float(rbf.train_acc_std),
                format_float(rbf.test_acc_mean), format_float(rbf.test_acc_std),
            ]
        if linear is not None and rbf is not None:
            cells += [
                format_float(100.0 * (rbf.train_acc_mean - linear.train_acc_mean) / linear.train_acc_mean),
                format_float(100.0 * (linear.train_acc_std - rbf.train_acc_std) / linear.train_acc_std)
                if linear.train_acc_std != 0 else "",
                format_float(100.0 * (rbf.test_acc_mean - linear.test_acc_mean) / linear.test_acc_mean),
                format_float(100.0 * (linear.test_acc_std - rbf.test_acc_std) / linear.test_acc_std)
                if linear.test_acc_std != 0 else "",
            ]
        else:
            cells += ["", "", "", ""]
        lines.append(",".join(cells))
    return ("\n".join(lines) + "\n").encode("utf-8")


def mccv_outputs_to_json(rows: list[dict]) -> bytes:
    """Confusion-matrix JSON bundle for the CLI, one entry per ratio/kernel."""
    out = []
    for row in rows:
        entry: dict = {"split_ratio": float(row["split_ratio"])}
        if row.get("sf") is not None:
            entry["sf"] = float(row["sf"])
        for kernel_name in ("linear", "rbf"):
            rep = row.get(kernel_name)
            if rep is not None:
                entry[kernel_name] = report_to_json(rep)
        out.append(entry)
    return (dumps_json({"reports": out}, indent=2) + "\n").encode("utf-8")
