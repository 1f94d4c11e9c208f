"""Multi-channel geometric polynomial graph filters for node classification."""

from .classifier import (
    Metrics,
    ModelParams,
    TrainConfig,
    evaluate,
    forward,
    load_checkpoint,
    micro_f1,
    predict,
    save_checkpoint,
    train,
)
from .data import GraphDataset, Split, check_table1, load_bundle, save_bundle, select_split
from .errors import DataError, GpnetError, NumericError, ResourceError, UsageError
from .estimators import GeometricPropagation, GPNetClassifier
from .filters import (
    ExponentSet,
    FilterConfig,
    PropagatedFeatures,
    aggregate,
    apply_alpha_beta,
    channel_sum_features,
    channel_sum_matrix,
    exponent_set,
    load_propagated,
    propagate,
    save_propagated,
)
from .sparse import SparseMatrix, build_adjacency, degree_vector, eigh_sym, spmm, sym_normalize
from .spectral import (
    SpectrumReport,
    classify_filter,
    compute_spectrum,
    emit_spectrum_csv,
    filter_response,
    stationary_limit,
)
from .sweep import default_grid, enumerate_grid, propagate_cached, run_sweep

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "GpnetError",
    "NumericError",
    "ResourceError",
    "UsageError",
    "SparseMatrix",
    "build_adjacency",
    "degree_vector",
    "eigh_sym",
    "spmm",
    "sym_normalize",
    "ExponentSet",
    "FilterConfig",
    "PropagatedFeatures",
    "aggregate",
    "apply_alpha_beta",
    "channel_sum_features",
    "channel_sum_matrix",
    "exponent_set",
    "load_propagated",
    "propagate",
    "save_propagated",
    "SpectrumReport",
    "classify_filter",
    "compute_spectrum",
    "emit_spectrum_csv",
    "filter_response",
    "stationary_limit",
    "Metrics",
    "ModelParams",
    "TrainConfig",
    "evaluate",
    "forward",
    "load_checkpoint",
    "micro_f1",
    "predict",
    "save_checkpoint",
    "train",
    "GraphDataset",
    "Split",
    "check_table1",
    "load_bundle",
    "save_bundle",
    "select_split",
    "GeometricPropagation",
    "GPNetClassifier",
    "default_grid",
    "enumerate_grid",
    "propagate_cached",
    "run_sweep",
    "__version__",
]
