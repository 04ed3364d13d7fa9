"""Gaussian-process grade regression with uncertainty-aware referral decisions."""

from .data import (
    DatasetManifest,
    FeatureRecord,
    NormStats,
    apply_normalizer,
    feature_matrix,
    fit_normalizer,
    grades_vector,
    load_feature_csv,
    load_model,
    save_model,
    synthesize_dataset,
    write_feature_csv,
)
from .diagnosis import (
    GRADE_THRESHOLD_DEFAULT,
    STD_THRESHOLD_DEFAULT,
    Decision,
    apply_uncertainty_flip,
    binarize,
    grade_to_referable,
)
from .errors import (
    GPGradeError,
    InputError,
    ModelFormatError,
    NumericalError,
    ParseError,
)
from .gp import (
    FitConfig,
    GPModel,
    Prediction,
    build_model,
    cholesky_with_jitter,
    fit,
    log_marginal_likelihood,
    predict,
)
from .kernel import (
    NOISE_VARIANCE_FLOOR,
    Hyperparams,
    kernel_matrix,
    kernel_matrix_gradients,
    pairwise_sq_dists,
    rbf_eval,
)
from .metrics import (
    BoxStats,
    EvalReport,
    box_stats_table,
    confusion,
    evaluate,
    group_uncertainty_stats,
    roc_auc,
    sens_spec,
)

__version__ = "0.1.0"

__all__ = [
    "BoxStats",
    "DatasetManifest",
    "Decision",
    "EvalReport",
    "FeatureRecord",
    "FitConfig",
    "GPGradeError",
    "GPModel",
    "GRADE_THRESHOLD_DEFAULT",
    "Hyperparams",
    "InputError",
    "ModelFormatError",
    "NOISE_VARIANCE_FLOOR",
    "NormStats",
    "NumericalError",
    "ParseError",
    "Prediction",
    "STD_THRESHOLD_DEFAULT",
    "apply_normalizer",
    "apply_uncertainty_flip",
    "binarize",
    "box_stats_table",
    "build_model",
    "cholesky_with_jitter",
    "confusion",
    "evaluate",
    "feature_matrix",
    "fit",
    "fit_normalizer",
    "grade_to_referable",
    "grades_vector",
    "group_uncertainty_stats",
    "kernel_matrix",
    "kernel_matrix_gradients",
    "load_feature_csv",
    "load_model",
    "log_marginal_likelihood",
    "pairwise_sq_dists",
    "predict",
    "rbf_eval",
    "roc_auc",
    "save_model",
    "sens_spec",
    "synthesize_dataset",
    "write_feature_csv",
]
