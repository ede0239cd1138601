"""Split-conformal calibration and prediction-set construction.

Calibration computes the finite-sample-adjusted quantile of per-sample
nonconformity scores and freezes every parameter into an immutable
:class:`CalibrationArtifact`; prediction inverts the score for each method.
APS/RAPS sets are built by including sorted ranks while the hypothetical
score stays at or below the quantile, which is equivalent to per-class score
thresholding because the hypothetical scores are non-decreasing in rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import (
    DEFAULT_STRATA,
    CalibrationArtifact,
    LogitDataset,
    PredictionSet,
    StrataSpec,
)
from .errors import CalibrationError, DimensionError
from .scoring import _descending_order, aps_scores, raps_scores, softmax

__all__ = [
    "MethodParams",
    "conformal_quantile",
    "calibrate",
    "predict_set",
    "predict_all",
]

METHODS = ("naive", "lac", "lac_classcond", "aps", "raps")


@dataclass(frozen=True)
class MethodParams:
    """Method selector plus the knobs that matter for it. ``lam`` and
    ``k_reg`` are ignored unless method == 'raps'."""

    method: str
    alpha: float = 0.1
    lam: float = 0.0
    k_reg: int = 1
    temperature: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.k_reg < 1:
            raise ValueError(f"k_reg must be >= 1, got {self.k_reg}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


def conformal_quantile(scores: np.ndarray, alpha: float) -> float:
    """The ceil((n+1)(1-alpha))-th smallest score, or +inf when that order
    statistic does not exist (prediction sets then cover the full label
    space)."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    n = scores.size
    if n == 0:
        raise CalibrationError("cannot calibrate on an empty score vector")
    rank = math.ceil((n + 1) * (1.0 - alpha))
    if rank > n:
        return math.inf
    return float(np.sort(scores)[rank - 1])


def _calibration_scores(cal: LogitDataset, params: MethodParams) -> np.ndarray:
    probs = softmax(cal.logits, params.temperature)
    rows = np.arange(cal.n_samples)
    if params.method in ("lac", "lac_classcond"):
        return 1.0 - probs[rows, cal.labels]
    if params.method == "aps":
        return aps_scores(probs, cal.labels)
    if params.method == "raps":
        return raps_scores(probs, cal.labels, params.lam, params.k_reg)
    raise ValueError(f"method {params.method!r} has no calibration scores")


def calibrate(cal: LogitDataset, params: MethodParams,
              strata: StrataSpec = DEFAULT_STRATA) -> CalibrationArtifact:
    """Compute the method's quantile(s) on the calibration set and freeze all
    parameters into an artifact."""
    if cal.n_samples == 0:
        raise CalibrationError("calibration set is empty")
    q_hat = None
    class_q_hat = None
    if params.method == "lac_classcond":
        scores = _calibration_scores(cal, params)
        per_class = []
        for k in range(cal.n_classes):
            mask = cal.labels == k
            if not mask.any():
                raise CalibrationError(
                    f"class {k} absent from calibration set; "
                    "class-conditional LAC needs every class"
                )
            per_class.append(conformal_quantile(scores[mask], params.alpha))
        class_q_hat = tuple(per_class)
    elif params.method != "naive":
        q_hat = conformal_quantile(_calibration_scores(cal, params), params.alpha)
    return CalibrationArtifact(
        method=params.method,
        alpha=params.alpha,
        q_hat=q_hat,
        lam=params.lam,
        k_reg=params.k_reg,
        temperature=params.temperature,
        strata=strata,
        n_cal=cal.n_samples,
        n_classes=cal.n_classes,
        class_q_hat=class_q_hat,
    )


def _included_mask(probs: np.ndarray, artifact: CalibrationArtifact) -> np.ndarray:
    """Boolean (n, K) inclusion mask for a probability matrix."""
    n, k = probs.shape
    method = artifact.method
    if method == "naive":
        return probs >= 1.0 - artifact.alpha
    if method == "lac":
        return (1.0 - probs) <= artifact.q_hat
    if method == "lac_classcond":
        return (1.0 - probs) <= np.asarray(artifact.class_q_hat)
    # aps / raps: include ranks while the hypothetical score <= q_hat
    order = _descending_order(probs)
    csum = np.cumsum(np.take_along_axis(probs, order, axis=1), axis=1)
    penalty = artifact.lam * np.maximum(0, np.arange(1, k + 1) - artifact.k_reg)
    hypothetical = csum + (penalty if method == "raps" else 0.0)
    include_sorted = hypothetical <= artifact.q_hat
    mask = np.zeros((n, k), dtype=bool)
    np.put_along_axis(mask, order, include_sorted, axis=1)
    return mask


def predict_set(logits: np.ndarray, artifact: CalibrationArtifact,
                label: int | None = None) -> PredictionSet:
    """Prediction set for a single logit vector under a frozen artifact."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.shape[0] != artifact.n_classes:
        raise DimensionError(
            f"logit vector of shape {logits.shape} does not match artifact "
            f"with {artifact.n_classes} classes"
        )
    probs = softmax(logits, artifact.temperature)[np.newaxis, :]
    mask = _included_mask(probs, artifact)[0]
    return PredictionSet.from_classes(0, np.nonzero(mask)[0], label)


def predict_all(data: LogitDataset, artifact: CalibrationArtifact) -> list:
    """Prediction sets for every row, in row order, with coverage flags from
    the dataset labels."""
    if data.n_classes != artifact.n_classes:
        raise DimensionError(
            f"dataset has {data.n_classes} classes, artifact {artifact.n_classes}"
        )
    probs = softmax(data.logits, artifact.temperature)
    mask = _included_mask(probs, artifact)
    sets = []
    for i in range(data.n_samples):
        classes = np.nonzero(mask[i])[0]
        sets.append(PredictionSet.from_classes(i, classes, int(data.labels[i])))
    return sets
