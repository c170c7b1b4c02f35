"""fafscreen: FAF-image screening with ETDRS sector features and kernel SVMs."""

from .errors import (
    ConvergenceError,
    DataError,
    DegenerateModelError,
    EmptySectorError,
    FafScreenError,
    ImageFormatError,
    SchemaError,
)
from .image import FafImage, Laterality, load_image, pixel_at
from .grid import (
    FEATURE_NAMES,
    SECTOR_ORDER,
    FeatureVector,
    GridSpec,
    SectorId,
    compute_features,
    sector_of,
    sector_pixel_counts,
)
from .svm import (
    Dataset,
    Disease,
    KernelKind,
    KernelSpec,
    LabeledSample,
    SvmConfig,
    SvmModel,
    classify,
    decision_value,
    kernel_eval,
    load_model,
    rkhs_weight_norm,
    save_model,
    signed_distance,
    standardize_fit,
    train,
)
from .mccv import (
    ConfusionMatrix,
    MccvReport,
    SplitSpec,
    confusion_from_predictions,
    run_mccv,
    scale_factor_sweep,
    stratified_split,
)
from .separation import (
    HdCurve,
    Histogram,
    Trend,
    build_histogram,
    chernoff_check,
    distance_profile,
    hd_curve,
    hellinger,
    monitor_trajectory,
)
from .synth import SynthParams, generate_dataset, write_dataset

__version__ = "0.1.0"
