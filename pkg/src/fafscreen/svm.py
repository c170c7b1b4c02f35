"""Soft-margin kernel SVM trained on the dual via sequential minimal optimization.

The solver maximizes sum(alpha) - 0.5 * (alpha*y)' K (alpha*y) subject to
0 <= alpha <= C and sum(alpha*y) = 0, using two-variable analytic updates
with second-order working-set selection. The contract is the KKT
postcondition at ``kkt_tolerance``, not the algorithm: any dual solver
meeting it is conforming.

Sign conventions: labels are +1 diseased, -1 healthy. The decision value
f(x) leans diseased when positive; the signed distance -f(x)/||w|| is
positive on the healthy side.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DataError, DegenerateModelError, SchemaError
from .serialize import dumps_json
import json

__all__ = [
    "Disease",
    "LabeledSample",
    "Dataset",
    "KernelKind",
    "KernelSpec",
    "SvmConfig",
    "SvmModel",
    "kernel_eval",
    "kernel_matrix",
    "standardize_fit",
    "train",
    "train_with_alphas",
    "dual_objective",
    "decision_value",
    "decision_values",
    "classify",
    "rkhs_weight_norm",
    "signed_distance",
    "signed_distances",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1


class Disease(enum.Enum):
    STGD = "STGD"
    CNVM = "CNVM"
    CSCR = "CSCR"
    NONE = "NONE"

    @classmethod
    def parse(cls, text: str) -> "Disease":
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise SchemaError(f"unknown disease tag {text!r}") from None


def _as_feature_array(features) -> np.ndarray:
    arr = np.asarray(getattr(features, "values", features), dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DataError("features must be a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise DataError("non-finite feature value")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabeledSample:
    """A feature vector with its class label and optional disease tag."""

    features: np.ndarray
    label: int
    disease: Disease = Disease.NONE
    sample_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", _as_feature_array(self.features))
        if self.label not in (-1, 1):
            raise DataError(f"label must be +1 or -1, got {self.label}")
        if (self.label == -1) != (self.disease == Disease.NONE):
            raise DataError("label -1 must pair with disease NONE and +1 with a disease tag")


@dataclass(frozen=True)
class Dataset:
    samples: tuple[LabeledSample, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        dims = {s.features.size for s in self.samples}
        if len(dims) > 1:
            raise DataError(f"inconsistent feature dimensions {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.samples)

    def feature_matrix(self) -> np.ndarray:
        return np.array([s.features for s in self.samples], dtype=np.float64)

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples], dtype=np.float64)

    def class_counts(self) -> tuple[int, int]:
        """(n_diseased, n_healthy)."""
        diseased = sum(1 for s in self.samples if s.label == 1)
        return diseased, len(self.samples) - diseased

    def subset(self, indices) -> "Dataset":
        return Dataset(tuple(self.samples[i] for i in indices))

    def filter_diseases(self, keep: set[Disease]) -> "Dataset":
        """Healthy samples plus the listed disease tags; the reduced-dataset filter."""
        return Dataset(
            tuple(s for s in self.samples if s.label == -1 or s.disease in keep)
        )


class KernelKind(enum.Enum):
    LINEAR = "linear"
    RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind
    scale_factor: float | None = None

    def __post_init__(self) -> None:
        if self.kind == KernelKind.RBF:
            if self.scale_factor is None or not (self.scale_factor > 0):
                raise DataError("RBF kernel requires scale_factor > 0")
        elif self.scale_factor is not None:
            raise DataError("linear kernel takes no scale_factor")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(KernelKind.LINEAR)

    @classmethod
    def rbf(cls, scale_factor: float) -> "KernelSpec":
        return cls(KernelKind.RBF, float(scale_factor))


@dataclass(frozen=True)
class SvmConfig:
    kernel: KernelSpec
    box_constraint: float = 1.0
    kkt_tolerance: float = 1e-3
    max_passes: int = 100_000
    standardize: bool = True

    def __post_init__(self) -> None:
        if not (self.box_constraint > 0):
            raise DataError("box constraint C must be positive")
        if not (self.kkt_tolerance > 0):
            raise DataError("kkt_tolerance must be positive")
        if self.max_passes < 1:
            raise DataError("max_passes must be a positive integer")


@dataclass(frozen=True)
class SvmModel:
    """Trained classifier state; immutable and safe to share across threads.

    ``support_vectors`` live in standardized space when ``standardization``
    is present. ``dual_coefs`` are the alpha_i * y_i of the support vectors.
    """

    kernel: KernelSpec
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    box_constraint: float
    standardization: tuple[np.ndarray, np.ndarray] | None
    class_counts: tuple[int, int]

    def __post_init__(self) -> None:
        sv = np.asarray(self.support_vectors, dtype=np.float64)
        coefs = np.asarray(self.dual_coefs, dtype=np.float64)
        if sv.ndim != 2 or coefs.ndim != 1 or sv.shape[0] != coefs.size or coefs.size < 1:
            raise DataError("support vectors and dual coefficients must align and be non-empty")
        if np.any(np.abs(coefs) > self.box_constraint * (1 + 1e-12)):
            raise DataError("dual coefficient magnitude exceeds the box constraint")
        sv = sv.copy()
        coefs = coefs.copy()
        sv.setflags(write=False)
        coefs.setflags(write=False)
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefs", coefs)

    @property
    def dimension(self) -> int:
        return self.support_vectors.shape[1]


def kernel_eval(spec: KernelSpec, x, z) -> float:
    """K(x, z) for a single pair of equal-dimension vectors."""
    xa = np.asarray(x, dtype=np.float64)
    za = np.asarray(z, dtype=np.float64)
    if xa.shape != za.shape:
        raise DataError(f"kernel dimension mismatch: {xa.shape} vs {za.shape}")
    if spec.kind == KernelKind.LINEAR:
        return float(np.dot(xa, za))
    d = xa - za
    return float(np.exp(-np.dot(d, d) / (2.0 * spec.scale_factor**2)))


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Gram matrix K[i, j] = K(A[i], B[j])."""
    if A.shape[1] != B.shape[1]:
        raise DataError(f"kernel dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == KernelKind.LINEAR:
        return A @ B.T
    # squared distances via the expansion, clipped against round-off
    sq = np.maximum(
        np.sum(A * A, axis=1)[:, None] - 2.0 * (A @ B.T) + np.sum(B * B, axis=1)[None, :],
        0.0,
    )
    return np.exp(-sq / (2.0 * spec.scale_factor**2))


def standardize_fit(train_data: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature training mean and population std, zero stds replaced by 1."""
    if len(train_data) == 0:
        raise DataError("cannot standardize an empty dataset")
    X = train_data.feature_matrix()
    means = X.mean(axis=0)
    stds = X.std(axis=0)  # ddof=0
    stds = np.where(stds == 0.0, 1.0, stds)
    return means, stds


def dual_objective(alphas: np.ndarray, labels: np.ndarray, gram: np.ndarray) -> float:
    """sum(alpha) - 0.5 (alpha*y)' K (alpha*y); the quantity the solver maximizes."""
    ay = alphas * labels
    return float(np.sum(alphas) - 0.5 * ay @ gram @ ay)


def train(data: Dataset, cfg: SvmConfig, seed: int = 0) -> SvmModel:
    """Train a model satisfying the KKT conditions at ``cfg.kkt_tolerance``.

    Deterministic given (sample order, cfg, seed). ``seed`` is reserved for
    stochastic solvers; the SMO implementation never draws from it.
    """
    return train_with_alphas(data, cfg, seed)[0]


def train_with_alphas(data: Dataset, cfg: SvmConfig, seed: int = 0) -> tuple[SvmModel, np.ndarray]:
    """Like :func:`train` but also returns the full alpha vector for KKT audits."""
    del seed  # the SMO path is deterministic
    n = len(data)
    if n < 2:
        raise DataError("training requires at least two samples")
    y = data.labels()
    if not (np.any(y > 0) and np.any(y < 0)):
        raise DataError("training requires samples of both classes")
    X = data.feature_matrix()
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature value in training data")

    standardization = None
    if cfg.standardize:
        means, stds = standardize_fit(data)
        X = (X - means) / stds
        standardization = (means, stds)

    K = kernel_matrix(cfg.kernel, X, X)
    C = float(cfg.box_constraint)
    tol = float(cfg.kkt_tolerance)

    alphas = np.zeros(n)
    F = np.zeros(n)  # F_i = sum_j alpha_j y_j K_ij (decision values sans bias)
    diag = np.diagonal(K).copy()
    tau = 1e-12

    converged = False
    m_val = M_val = 0.0
    for _ in range(cfg.max_passes):
        bc = y - F  # per-sample bias candidate; KKT wants these to agree
        up = ((y > 0) & (alphas < C)) | ((y < 0) & (alphas > 0))
        low = ((y < 0) & (alphas < C)) | ((y > 0) & (alphas > 0))
        if not up.any() or not low.any():
            converged = True
            break
        m_val = float(np.max(bc[up]))
        M_val = float(np.min(bc[low]))
        if m_val - M_val <= tol:
            converged = True
            break
        i = int(np.argmax(np.where(up, bc, -np.inf)))

        # second-order selection of j: largest guaranteed objective gain
        viol = low & (bc < m_val)
        a = np.maximum(diag[i] + diag - 2.0 * K[i], tau)
        gain = np.where(viol, (m_val - bc) ** 2 / a, -np.inf)
        j = int(np.argmax(gain))

        # analytic two-variable update; the binding variable lands exactly on
        # its bound so the working-set masks never see round-off dust
        old_i, old_j = alphas[i], alphas[j]
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], tau)
        s = y[i] * (bc[i] - bc[j]) / eta
        if y[i] != y[j]:
            diff = old_i - old_j  # conserved by the joint move
            ai, aj = old_i + s, old_j + s
            if ai < 0.0:
                ai, aj = 0.0, -diff
            if aj < 0.0:
                aj, ai = 0.0, diff
            if ai > C:
                ai, aj = C, C - diff
            if aj > C:
                aj, ai = C, C + diff
        else:
            total = old_i + old_j  # conserved by the opposing move
            ai, aj = old_i + s, old_j - s
            if ai < 0.0:
                ai, aj = 0.0, total
            if aj < 0.0:
                aj, ai = 0.0, total
            if ai > C:
                ai, aj = C, total - C
            if aj > C:
                aj, ai = C, total - C
        if ai == old_i and aj == old_j:
            break  # numerically exhausted; the convergence check decides
        alphas[i] = ai
        alphas[j] = aj
        F += ((ai - old_i) * y[i]) * K[i] + ((aj - old_j) * y[j]) * K[j]

    bc = y - F
    free = (alphas > 0.0) & (alphas < C)
    if free.any():
        bias = float(np.mean(bc[free]))
    else:
        # midpoint of the KKT-feasible bias interval [M, m]
        up = ((y > 0) & (alphas < C)) | ((y < 0) & (alphas > 0))
        low = ((y < 0) & (alphas < C)) | ((y > 0) & (alphas > 0))
        m_val = float(np.max(bc[up])) if up.any() else 0.0
        M_val = float(np.min(bc[low])) if low.any() else 0.0
        bias = (m_val + M_val) / 2.0

    sv_mask = alphas > 0.0
    if not sv_mask.any():
        # unreachable for tol < 1: alpha = 0 cannot satisfy KKT for both classes
        raise ConvergenceError("solver terminated with no support vectors")
    model = SvmModel(
        kernel=cfg.kernel,
        support_vectors=X[sv_mask],
        dual_coefs=(alphas * y)[sv_mask],
        bias=bias,
        box_constraint=C,
        standardization=standardization,
        class_counts=data.class_counts(),
    )
    if not converged:
        raise ConvergenceError(
            f"KKT tolerance {tol} not reached within {cfg.max_passes} passes "
            f"(violation {m_val - M_val:.3e})",
            model=model,
        )
    return model, alphas


def _standardized(model: SvmModel, X: np.ndarray) -> np.ndarray:
    if model.standardization is None:
        return X
    means, stds = model.standardization
    return (X - means) / stds


def decision_values(model: SvmModel, X) -> np.ndarray:
    """Vectorized f(x) over rows of X."""
    Xa = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if Xa.shape[1] != model.dimension:
        raise DataError(f"feature dimension {Xa.shape[1]} does not match model dimension {model.dimension}")
    Ks = kernel_matrix(model.kernel, _standardized(model, Xa), model.support_vectors)
    return Ks @ model.dual_coefs + model.bias


def decision_value(model: SvmModel, x) -> float:
    """f(x) = sum_i coef_i K(sv_i, x) + b; positive leans diseased."""
    arr = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if arr.ndim != 1:
        raise DataError("decision_value expects a single feature vector")
    return float(decision_values(model, arr[None, :])[0])


def classify(model: SvmModel, x) -> int:
    """sign(f(x)) with the exact tie f = 0 resolved to +1 (diseased)."""
    return 1 if decision_value(model, x) >= 0.0 else -1


def rkhs_weight_norm(model: SvmModel) -> float:
    """||w|| in the kernel-induced space: sqrt(c' K c) over support vectors."""
    Ksv = kernel_matrix(model.kernel, model.support_vectors, model.support_vectors)
    q = float(model.dual_coefs @ Ksv @ model.dual_coefs)
    if q <= 0.0:
        raise DegenerateModelError("weight norm is zero: the model defines no boundary")
    return math.sqrt(q)


def signed_distance(model: SvmModel, x) -> float:
    """-f(x)/||w||: positive on the healthy side, negative on the diseased side."""
    return -decision_value(model, x) / rkhs_weight_norm(model)


def signed_distances(model: SvmModel, X) -> np.ndarray:
    return -decision_values(model, X) / rkhs_weight_norm(model)


# ---------------------------------------------------------------------------
# Persistence: versioned JSON, floats at 17 significant digits


def save_model(model: SvmModel) -> bytes:
    means, stds = (None, None)
    if model.standardization is not None:
        means = [float(v) for v in model.standardization[0]]
        stds = [float(v) for v in model.standardization[1]]
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "kernel": model.kernel.kind.value,
        "scale_factor": None if model.kernel.scale_factor is None else float(model.kernel.scale_factor),
        "C": float(model.box_constraint),
        "standardize_means": means,
        "standardize_stds": stds,
        "support_vectors": [[float(v) for v in row] for row in model.support_vectors],
        "dual_coefs": [float(v) for v in model.dual_coefs],
        "bias": float(model.bias),
        "class_counts": [int(model.class_counts[0]), int(model.class_counts[1])],
    }
    return (dumps_json(doc, indent=2) + "\n").encode("utf-8")


def _require(doc: dict, key: str):
    if key not in doc:
        raise SchemaError(f"model document missing field {key!r}")
    return doc[key]


def load_model(data: bytes) -> SvmModel:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"model document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaError("model document must be a JSON object")
    version = _require(doc, "version")
    if version != MODEL_FORMAT_VERSION:
        raise SchemaError(f"unsupported model format version {version!r}")
    kind_text = _require(doc, "kernel")
    try:
        kind = KernelKind(kind_text)
    except ValueError:
        raise SchemaError(f"unknown kernel {kind_text!r}") from None
    sf = _require(doc, "scale_factor")
    try:
        kernel = KernelSpec(kind, None if sf is None else float(sf))
        means = _require(doc, "standardize_means")
        stds = _require(doc, "standardize_stds")
        if (means is None) != (stds is None):
            raise SchemaError("standardize_means and standardize_stds must both be present or both null")
        standardization = None
        if means is not None:
            standardization = (
                np.asarray(means, dtype=np.float64),
                np.asarray(stds, dtype=np.float64),
            )
            if standardization[0].shape != standardization[1].shape or standardization[0].ndim != 1:
                raise SchemaError("standardization vectors must be 1-D and equal length")
        sv = np.asarray(_require(doc, "support_vectors"), dtype=np.float64)
        coefs = np.asarray(_require(doc, "dual_coefs"), dtype=np.float64)
        counts = _require(doc, "class_counts")
        if (
            not isinstance(counts, list)
            or len(counts) != 2
            or not all(type(c) is int and c >= 0 for c in counts)
        ):
            raise SchemaError("class_counts must be two non-negative integers")
        if sv.ndim != 2:
            raise SchemaError("support_vectors must be a 2-D numeric array")
        if standardization is not None and sv.shape[1] != standardization[0].size:
            raise SchemaError("standardization length does not match feature dimension")
        for name, arr in (("support_vectors", sv), ("dual_coefs", coefs)):
            if not np.all(np.isfinite(arr)):
                raise SchemaError(f"non-finite value in {name}")
        bias = float(_require(doc, "bias"))
        if not math.isfinite(bias):
            raise SchemaError("non-finite bias")
        model = SvmModel(
            kernel=kernel,
            support_vectors=sv,
            dual_coefs=coefs,
            bias=bias,
            box_constraint=float(_require(doc, "C")),
            standardization=standardization,
            class_counts=(counts[0], counts[1]),
        )
    except (DataError, ValueError, TypeError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"invalid model document: {exc}") from None
    return model
