"""Full-reference image quality assessment via patchwise 1D Wasserstein
distances over raw pixels and five VGG16 feature stages, plus the
evaluation harness for validating scores against MOS datasets."""

from .backbone import (
    CHANNEL_MEANS,
    CHANNEL_STDS,
    STAGE_CHANNELS,
    STAGE_NAMES,
    FeatureStack,
    VGG16Features,
    WeightArchive,
    extract_features,
    gen_test_weights,
    load_weights,
)
from .evaluation import (
    EvalReport,
    LogisticMOSFit,
    LogisticParams,
    ScoredPair,
    evaluate_scored,
    fit_logistic,
    goodness_r,
    krcc,
    logistic_curve,
    plcc,
    psnr,
    srcc,
)
from .exceptions import (
    ArchiveCorruptionError,
    ArchiveFormatError,
    ArchiveSchemaError,
    DeepWSDError,
    DegenerateDataError,
    DimensionError,
    FitConvergenceError,
    TensorFormatError,
    UnsupportedShapeError,
)
from .metric import (
    DeepWSD,
    MetricConfig,
    ScoreBreakdown,
    deepwsd_score,
    euclidean_norm,
    g_weight,
    stage_wsd,
    wasserstein_1d,
)
from .tensor_ops import conv2d, maxpool2, read_tensor, relu, write_tensor

__version__ = "0.1.0"

__all__ = [
    "CHANNEL_MEANS",
    "CHANNEL_STDS",
    "STAGE_CHANNELS",
    "STAGE_NAMES",
    "FeatureStack",
    "VGG16Features",
    "WeightArchive",
    "extract_features",
    "gen_test_weights",
    "load_weights",
    "EvalReport",
    "LogisticMOSFit",
    "LogisticParams",
    "ScoredPair",
    "evaluate_scored",
    "fit_logistic",
    "goodness_r",
    "krcc",
    "logistic_curve",
    "plcc",
    "psnr",
    "srcc",
    "ArchiveCorruptionError",
    "ArchiveFormatError",
    "ArchiveSchemaError",
    "DeepWSDError",
    "DegenerateDataError",
    "DimensionError",
    "FitConvergenceError",
    "TensorFormatError",
    "UnsupportedShapeError",
    "DeepWSD",
    "MetricConfig",
    "ScoreBreakdown",
    "deepwsd_score",
    "euclidean_norm",
    "g_weight",
    "stage_wsd",
    "wasserstein_1d",
    "conv2d",
    "maxpool2",
    "read_tensor",
    "relu",
    "write_tensor",
]
