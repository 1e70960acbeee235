"""Unsupervised batch concept-drift detection via Gaussian decision boundaries.

The detector trains an ensemble of single-feature Bayesian splits (decision
stumps whose thresholds are minimal-error crossings of weighted per-class
Gaussians), then monitors each split's boundary on unlabeled batches by
re-estimating the feature's two-component mixture with EM. A batch drifts
when enough boundaries moved beyond their calibrated tolerances.
"""

from .bench import (
    ExperimentResult,
    PerturbationSpec,
    classify_drift_type,
    feature_importance,
    gen_hyperplane,
    gen_waveform,
    hyperplane_weights,
    induce_drift,
    render_results_csv,
    render_results_text,
    run_experiment,
    split_protocol,
)
from .dataset import Dataset, load_csv, save_csv
from .detector import (
    BayesianSplit,
    BetaCalibration,
    DetectorConfig,
    DriftReport,
    GsdModel,
    SplitOutcome,
    build_split,
    calibrate_beta,
    deserialize_model,
    detect,
    fit_class_gaussians,
    serialize_model,
    train,
)
from .em import EmConfig, MixtureEstimate, assign_components, default_init, em_fit
from .errors import (
    CsvFormatError,
    DegenerateDataError,
    GsdError,
    InsufficientBatchError,
    InsufficientClassDataError,
    InsufficientDataError,
    InvalidParameterError,
    MissingLabelColumnError,
    ModelFormatError,
    NonBinaryLabelError,
    SchemaMismatchError,
    UnsupportedVersionError,
    UntrainableDatasetError,
)
from .gmm_core import (
    BoundaryResult,
    GaussianClassParams,
    boundary_candidates,
    misclassification_area,
    normal_cdf,
    select_boundary,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # gmm_core
    "GaussianClassParams",
    "BoundaryResult",
    "normal_cdf",
    "misclassification_area",
    "boundary_candidates",
    "select_boundary",
    # em
    "EmConfig",
    "MixtureEstimate",
    "em_fit",
    "assign_components",
    "default_init",
    # dataset
    "Dataset",
    "load_csv",
    "save_csv",
    # detector
    "BayesianSplit",
    "GsdModel",
    "SplitOutcome",
    "DriftReport",
    "BetaCalibration",
    "DetectorConfig",
    "fit_class_gaussians",
    "build_split",
    "train",
    "calibrate_beta",
    "detect",
    "serialize_model",
    "deserialize_model",
    # bench
    "PerturbationSpec",
    "ExperimentResult",
    "gen_hyperplane",
    "hyperplane_weights",
    "gen_waveform",
    "feature_importance",
    "split_protocol",
    "induce_drift",
    "classify_drift_type",
    "run_experiment",
    "render_results_csv",
    "render_results_text",
    # errors
    "GsdError",
    "InvalidParameterError",
    "InsufficientDataError",
    "DegenerateDataError",
    "InsufficientClassDataError",
    "UntrainableDatasetError",
    "InsufficientBatchError",
    "SchemaMismatchError",
    "ModelFormatError",
    "UnsupportedVersionError",
    "CsvFormatError",
    "MissingLabelColumnError",
    "NonBinaryLabelError",
]
