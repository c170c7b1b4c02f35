"""Class-separation analytics: signed-distance profiles across MCCV
iterations, Hellinger dissimilarity of the distance distributions, the
Chernoff-style bound check, and per-eye progress trajectories."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DataError
from .serialize import format_float
from .svm import Dataset, SvmConfig, SvmModel, decision_values, rkhs_weight_norm, train
from .mccv import SplitSpec, iteration_rng, stratified_split_indices

__all__ = [
    "ProfileEntry",
    "DistanceProfile",
    "Histogram",
    "HdPoint",
    "HdCurve",
    "ChernoffCheck",
    "Trend",
    "TrajectoryReport",
    "distance_profile",
    "build_histogram",
    "hellinger",
    "hd_curve",
    "chernoff_check",
    "monitor_trajectory",
]


@dataclass(frozen=True)
class ProfileEntry:
    sample_id: str
    label: int
    disease: str
    mean_distance: float
    std_distance: float


@dataclass(frozen=True)
class DistanceProfile:
    """Per-sample signed-distance mean/std over MCCV iterations.

    ``is_train[k, i]`` tags sample i's membership in iteration k;
    ``distances[k, i]`` is its signed distance under iteration k's model.
    """

    entries: tuple[ProfileEntry, ...]
    distances: np.ndarray
    is_train: np.ndarray
    train_accuracies: np.ndarray  # percent, per iteration
    test_accuracies: np.ndarray

    def to_csv(self) -> bytes:
        lines = ["sample_id,class,disease,mean_dist,std_dist"]
        for e in self.entries:
            lines.append(
                f"{e.sample_id},{e.label},{e.disease},"
                f"{format_float(e.mean_distance)},{format_float(e.std_distance)}"
            )
        return ("\n".join(lines) + "\n").encode("utf-8")


def _distance_iteration(
    data: Dataset, cfg: SvmConfig, split: SplitSpec, k: int
) -> tuple[np.ndarray, np.ndarray, float, float]:
    rng = iteration_rng(split.base_seed, k)
    labels = data.labels()
    train_idx, test_idx = stratified_split_indices(labels, split.train_fraction, rng)
    try:
        model = train(data.subset(train_idx), cfg)
    except ConvergenceError as exc:
        raise ConvergenceError(f"iteration {k}: {exc}", model=exc.model) from exc
    X = data.feature_matrix()
    f_all = decision_values(model, X)
    dists = -f_all / rkhs_weight_norm(model)
    member = np.zeros(len(data), dtype=bool)
    member[list(train_idx)] = True
    predicted = np.where(f_all >= 0.0, 1.0, -1.0)
    correct = predicted == labels
    train_acc = 100.0 * float(np.mean(correct[member]))
    test_acc = 100.0 * float(np.mean(correct[~member]))
    return dists, member, train_acc, test_acc


def distance_profile(
    data: Dataset, cfg: SvmConfig, split: SplitSpec, threads: int = 1
) -> DistanceProfile:
    """Signed distances of every sample under every iteration's model."""
    ks = range(split.iterations)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda k: _distance_iteration(data, cfg, split, k), ks))
    else:
        rows = [_distance_iteration(data, cfg, split, k) for k in ks]
    distances = np.array([r[0] for r in rows])
    is_train = np.array([r[1] for r in rows])
    train_accs = np.array([r[2] for r in rows])
    test_accs = np.array([r[3] for r in rows])
    entries = tuple(
        ProfileEntry(
            sample_id=s.sample_id or str(i),
            label=s.label,
            disease=s.disease.value,
            mean_distance=float(distances[:, i].mean()),
            std_distance=float(distances[:, i].std()),
        )
        for i, s in enumerate(data.samples)
    )
    distances.setflags(write=False)
    is_train.setflags(write=False)
    train_accs.setflags(write=False)
    test_accs.setflags(write=False)
    return DistanceProfile(entries, distances, is_train, train_accs, test_accs)


@dataclass(frozen=True)
class Histogram:
    """Discrete probability estimate: B+1 strictly increasing edges, B probs."""

    bin_edges: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise DataError("bin edges must be strictly increasing with at least 2 entries")
        if probs.size != edges.size - 1:
            raise DataError("probs length must be number of bins")
        if np.any(probs < 0):
            raise DataError("negative probability mass")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise DataError(f"probabilities sum to {probs.sum()}, not 1")


def build_histogram(values, bin_edges) -> Histogram:
    """Normalized counts per bin; bins are [e_i, e_{i+1}), last bin closed."""
    vals = np.asarray(values, dtype=np.float64)
    edges = np.asarray(bin_edges, dtype=np.float64)
    if vals.size == 0:
        raise DataError("cannot build a histogram from no values")
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DataError("bin edges must be strictly increasing with at least 2 entries")
    if float(vals.min()) < edges[0] or float(vals.max()) > edges[-1]:
        raise DataError("value outside histogram range")
    counts, _ = np.histogram(vals, bins=edges)
    probs = counts / vals.size
    return Histogram(tuple(float(e) for e in edges), tuple(float(p) for p in probs))


def hellinger(p: Histogram, q: Histogram) -> float:
    """H = sqrt(1 - sum_x sqrt(p(x) q(x))), clamped to [0, 1] against round-off."""
    if p.bin_edges != q.bin_edges:
        raise DataError("histograms must share identical bin edges")
    bc = float(np.sum(np.sqrt(np.asarray(p.probs) * np.asarray(q.probs))))
    return min(math.sqrt(max(1.0 - bc, 0.0)), 1.0)


@dataclass(frozen=True)
class ChernoffCheck:
    holds: bool
    margin: float


def chernoff_check(h: float, pe: float) -> ChernoffCheck:
    """Check the strict bound H < sqrt(1 - Pe); margin is the slack."""
    if not (0.0 <= h <= 1.0):
        raise DataError(f"H must lie in [0, 1], got {h}")
    if not (0.0 <= pe < 1.0):
        raise DataError(f"Pe must lie in [0, 1), got {pe}")
    margin = math.sqrt(1.0 - pe) - h
    return ChernoffCheck(holds=margin > 0.0, margin=margin)


@dataclass(frozen=True)
class HdPoint:
    train_fraction: float
    h_train: float
    h_test: float
    root_acc_train: float
    root_acc_test: float
    fraction_train: float
    fraction_test: float
    chernoff_train: ChernoffCheck
    chernoff_test: ChernoffCheck


@dataclass(frozen=True)
class HdCurve:
    bins: int
    points: tuple[HdPoint, ...]

    def to_csv(self) -> bytes:
        header = (
            "split_ratio,h_train,h_test,root_acc_train,root_acc_test,"
            "fraction_train,fraction_test"
        )
        lines = [header]
        for p in self.points:
            lines.append(
                ",".join(
                    format_float(v)
                    for v in (
                        p.train_fraction, p.h_train, p.h_test,
                        p.root_acc_train, p.root_acc_test,
                        p.fraction_train, p.fraction_test,
                    )
                )
            )
        return ("\n".join(lines) + "\n").encode("utf-8")


def _membership_hd(
    distances: np.ndarray, member_mask: np.ndarray, labels: np.ndarray, bins: int
) -> float:
    healthy = distances[:, labels == -1][member_mask[:, labels == -1]]
    diseased = distances[:, labels == 1][member_mask[:, labels == 1]]
    pooled_min = min(float(healthy.min()), float(diseased.min()))
    pooled_max = max(float(healthy.max()), float(diseased.max()))
    if pooled_min == pooled_max:
        raise DataError("degenerate pooled distance range: all distances equal")
    edges = np.linspace(pooled_min, pooled_max, bins + 1)
    p = build_histogram(healthy, edges)
    q = build_histogram(diseased, edges)
    return hellinger(p, q)


def hd_curve(
    data: Dataset,
    cfg: SvmConfig,
    ratios,
    iterations: int,
    base_seed: int,
    bins: int = 64,
    threads: int = 1,
) -> HdCurve:
    """Hellinger dissimilarity and root accuracy per split ratio.

    Distances are pooled over all iterations within each membership group
    (train/test); the two class histograms of a group share equal-width bin
    edges spanning the pooled range. Pe converts the group's mean accuracy
    to an error fraction.
    """
    if bins < 1:
        raise DataError("bins must be positive")
    points = []
    for ratio in ratios:
        split = SplitSpec(train_fraction=float(ratio), iterations=iterations, base_seed=base_seed)
        profile = distance_profile(data, cfg, split, threads=threads)
        labels = data.labels()
        h_train = _membership_hd(profile.distances, profile.is_train, labels, bins)
        h_test = _membership_hd(profile.distances, ~profile.is_train, labels, bins)
        pe_train = 1.0 - float(profile.train_accuracies.mean()) / 100.0
        pe_test = 1.0 - float(profile.test_accuracies.mean()) / 100.0
        root_train = math.sqrt(1.0 - pe_train)
        root_test = math.sqrt(1.0 - pe_test)
        points.append(
            HdPoint(
                train_fraction=float(ratio),
                h_train=h_train,
                h_test=h_test,
                root_acc_train=root_train,
                root_acc_test=root_test,
                fraction_train=h_train / root_train,
                fraction_test=h_test / root_test,
                chernoff_train=chernoff_check(h_train, pe_train),
                chernoff_test=chernoff_check(h_test, pe_test),
            )
        )
    return HdCurve(bins=bins, points=tuple(points))


class Trend(enum.Enum):
    IMPROVING = "Improving"
    WORSENING = "Worsening"
    STABLE = "Stable"


@dataclass(frozen=True)
class TrajectoryReport:
    distances: tuple[float, ...]
    slope: float
    trend: Trend


def monitor_trajectory(
    model: SvmModel, visits, epsilon: float = 0.05
) -> TrajectoryReport:
    """Signed distances over ordered visits and the least-squares trend.

    Rising signed distance means motion toward the healthy side, so the
    slope rule (> eps improving, < -eps worsening) reads the same whichever
    side the trajectory starts on. Distances are already in weight-norm
    units, so ``epsilon`` is too.
    """
    rows = [np.asarray(getattr(v, "values", v), dtype=np.float64) for v in visits]
    if len(rows) < 2:
        raise DataError("progress monitoring needs at least 2 visits")
    X = np.vstack(rows)
    from .svm import signed_distances

    dists = signed_distances(model, X)
    t = np.arange(len(rows), dtype=np.float64)
    slope = float(np.polyfit(t, dists, 1)[0])
    if slope > epsilon:
        trend = Trend.IMPROVING
    elif slope < -epsilon:
        trend = Trend.WORSENING
    else:
        trend = Trend.STABLE
    return TrajectoryReport(
        distances=tuple(float(d) for d in dists), slope=slope, trend=trend
    )
