"""EEG segment classification via dimension reduction and persistent homology.

The pipeline: recordings are remontaged and cut into one-second segments,
each segment is reduced to a low-dimensional trajectory (DyCA or PCA),
the trajectory's Vietoris-Rips persistence diagram and landscapes are
computed, 40 summary features are extracted, and an SVM separates the
classes. The synth module generates corpora with known ground truth; the
cli module drives everything over an on-disk store.
"""
from .config import PipelineConfig, config_hash, load_config
from .csvio import read_csv, read_labels, write_csv, write_labels
from .dimred import (
    CorrelationSet,
    DycaResult,
    Method,
    Trajectory,
    correlations,
    derivative,
    dyca,
    pca,
)
from .edf import read_edf, write_edf
from .errors import (
    AmbiguousModelError,
    ConfigError,
    DataError,
    EegTdaError,
    GenerationError,
    InsufficientDataError,
    NotFoundError,
    NumericalError,
    ParseError,
    RangeError,
    StoreHashError,
    UnsupportedFormatError,
)
from .features import FEATURE_NAMES, N_FEATURES, FeatureVector, extract_features
from .homology import (
    PersistenceDiagram,
    RipsFiltration,
    build_filtration,
    persistence,
)
from .landscape import PersistenceLandscape, build_landscape, landscape_norms
from .montage import (
    BUILTIN_MONTAGES,
    Montage,
    apply_montage,
    builtin_montage,
    get_montage,
    load_montage,
)
from .recording import Label, Recording, Segment, segment
from .store import Store
from .svm import (
    LINEAR,
    EvalReport,
    KernelSpec,
    Scaler,
    SvmModel,
    apply_scaler,
    cross_validate,
    default_grid,
    evaluate,
    fit_scaler,
    load_model,
    save_model,
    stratified_folds,
    train_svc,
)
from .synth import STANDARD_ELECTRODES, SynthSpec, System, generate, make_corpus

__version__ = "0.1.0"

__all__ = [
    "AmbiguousModelError", "BUILTIN_MONTAGES", "ConfigError", "CorrelationSet",
    "DataError", "DycaResult", "EegTdaError", "EvalReport", "FEATURE_NAMES",
    "FeatureVector", "GenerationError", "InsufficientDataError", "KernelSpec",
    "LINEAR", "Label", "Method", "Montage", "N_FEATURES", "NotFoundError",
    "NumericalError", "ParseError", "PersistenceDiagram", "PersistenceLandscape",
    "PipelineConfig", "RangeError", "Recording", "RipsFiltration", "Scaler",
    "Segment", "STANDARD_ELECTRODES", "Store", "StoreHashError", "SvmModel",
    "SynthSpec", "System", "Trajectory", "UnsupportedFormatError",
    "apply_montage", "apply_scaler", "build_filtration", "build_landscape",
    "builtin_montage", "config_hash", "correlations", "cross_validate",
    "default_grid", "derivative", "dyca", "evaluate", "extract_features",
    "fit_scaler", "get_montage", "landscape_norms",
    "load_config", "load_model", "load_montage", "make_corpus", "pca",
    "persistence", "read_csv", "read_edf", "read_labels", "save_model",
    "segment", "stratified_folds", "train_svc", "write_csv", "write_edf",
    "write_labels",
]
