"""Distribution-free prediction sets over multi-class classifier outputs.

Split conformal prediction with four baselines plus stratified minimax
penalty tuning, a stratified-coverage metric suite, a seeded synthetic-logit
generator for coverage verification, and attention-entropy statistics for
saliency heatmaps.
"""

from .attention import (
    AttentionReport,
    HeatmapBatch,
    attention_report,
    point_biserial,
    read_gcam,
    spatial_entropy,
    spearman,
    write_gcam,
)
from .conformal import MethodParams, calibrate, conformal_quantile, predict_all, predict_set
from .data import (
    COARSE_STRATA,
    DEFAULT_STRATA,
    FINE_STRATA,
    CalibrationArtifact,
    LogitDataset,
    PredictionSet,
    SplitSpec,
    StrataSpec,
    load_logit_csv,
    read_prediction_sets,
    split_dataset,
    write_logit_csv,
    write_prediction_sets,
)
from .metrics import MetricsReport, ProtocolConfig, ablate, compare_methods, evaluate, format_table
from .scoring import (
    ScoredSample,
    fit_temperature,
    rank_sample,
    score_aps,
    score_lac,
    score_raps,
    softmax,
)
from .synthetic import GeneratorConfig, coverage_trial, generate
from .tuning import (
    COARSE_LAMBDA_GRID,
    DEFAULT_LAMBDA_GRID,
    FINE_LAMBDA_GRID,
    LambdaGrid,
    TuningReport,
    select_k_reg,
    stratified_coverage,
    stratum_of,
    tune_lambda_adaptive,
    tune_lambda_size,
)

__version__ = "0.1.0"
