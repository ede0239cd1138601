"""Probability transforms and conformal score functions.

Scores are deliberately non-randomized: the APS score is the full cumulative
sorted-softmax mass through the true label's rank, and RAPS adds
``lam * max(0, rank - k_reg)``. Sorting is stable with ties broken toward the
lower class index, so scores are deterministic for exactly tied
probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import LogitDataset

__all__ = [
    "ScoredSample",
    "softmax",
    "rank_sample",
    "score_aps",
    "score_raps",
    "score_lac",
    "fit_temperature",
]


def softmax(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Temperature-scaled softmax over the last axis, max-shifted for
    stability. Works on vectors and batched matrices alike."""
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    z = np.asarray(logits, dtype=np.float64) / temperature
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class ScoredSample:
    """Probabilities sorted descending, the sorting permutation, and the
    1-based rank of the true label within that order."""

    sorted_probs: np.ndarray
    sort_order: np.ndarray
    label_rank: int


def _descending_order(probs: np.ndarray) -> np.ndarray:
    # stable sort of -p == descending p with ties toward the lower class index
    return np.argsort(-np.asarray(probs), axis=-1, kind="stable")


def rank_sample(probs: np.ndarray, label: int) -> ScoredSample:
    """Sort probabilities descending (stable; ties toward lower class index)
    and locate the true label's 1-based rank."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[0]:
        raise ValueError(f"label {label} outside [0, {probs.shape[0] - 1}]")
    order = _descending_order(probs)
    rank = int(np.nonzero(order == label)[0][0]) + 1
    return ScoredSample(probs[order], order, rank)


def score_aps(sample: ScoredSample) -> float:
    """Cumulative sorted-probability mass through the true label's rank."""
    return float(np.cumsum(sample.sorted_probs)[sample.label_rank - 1])


def score_raps(sample: ScoredSample, lam: float, k_reg: int) -> float:
    """APS score plus the rank penalty ``lam * max(0, rank - k_reg)``."""
    return score_aps(sample) + lam * max(0, sample.label_rank - k_reg)


def score_lac(probs: np.ndarray, label: int) -> float:
    """One minus the true label's probability."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[0]:
        raise ValueError(f"label {label} outside [0, {probs.shape[0] - 1}]")
    return float(1.0 - probs[label])


# ---------------------------------------------------------------------------
# Vectorized score paths shared with calibration
# ---------------------------------------------------------------------------

def label_ranks(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """1-based rank of each row's true label under the descending stable sort.

    Ranks depend only on the logit ordering, so they are invariant to
    temperature.
    """
    order = _descending_order(logits)
    n, k = order.shape
    positions = np.empty_like(order)
    np.put_along_axis(positions, order, np.broadcast_to(np.arange(k), (n, k)), axis=1)
    return positions[np.arange(n), labels] + 1


def _base_scores_and_ranks(probs: np.ndarray, labels: np.ndarray):
    order = _descending_order(probs)
    csum = np.cumsum(np.take_along_axis(probs, order, axis=1), axis=1)
    n, k = order.shape
    positions = np.empty_like(order)
    np.put_along_axis(positions, order, np.broadcast_to(np.arange(k), (n, k)), axis=1)
    ranks = positions[np.arange(n), labels] + 1
    return csum[np.arange(n), ranks - 1], ranks


def aps_scores(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-row APS score for a probability matrix (vectorized)."""
    return _base_scores_and_ranks(probs, labels)[0]


def raps_scores(probs: np.ndarray, labels: np.ndarray, lam: float, k_reg: int) -> np.ndarray:
    base, ranks = _base_scores_and_ranks(probs, labels)
    return base + lam * np.maximum(0, ranks - k_reg)


# ---------------------------------------------------------------------------
# Temperature scaling
# ---------------------------------------------------------------------------

_T_LO, _T_HI = 0.05, 20.0
_T_TOL = 1e-4
_FLAT_TOL = 1e-12
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def nll_at_temperature(data: LogitDataset, temperature: float) -> float:
    """Mean negative log-likelihood of the temperature-scaled softmax at the
    true labels."""
    z = data.logits / temperature
    lse = logsumexp(z, axis=1)
    return float(np.mean(lse - z[np.arange(data.n_samples), data.labels]))


def fit_temperature(data: LogitDataset) -> float:
    """Scalar temperature minimizing the calibration NLL.

    Deterministic golden-section search over [0.05, 20] to |dT| < 1e-4. A
    flat objective (e.g. identical logits across classes) returns 1.0, and
    the result is never worse than the uncalibrated T=1.
    """
    if data.n_samples < 2:
        raise ValueError("temperature fitting needs at least 2 samples")

    probes = [_T_LO, 1.0, 10.0, _T_HI]
    values = [nll_at_temperature(data, t) for t in probes]
    if max(values) - min(values) <= _FLAT_TOL:
        return 1.0

    lo, hi = _T_LO, _T_HI
    a = hi - _GOLDEN * (hi - lo)
    b = lo + _GOLDEN * (hi - lo)
    fa = nll_at_temperature(data, a)
    fb = nll_at_temperature(data, b)
    while hi - lo > _T_TOL:
        if fa <= fb:
            hi, b, fb = b, a, fa
            a = hi - _GOLDEN * (hi - lo)
            fa = nll_at_temperature(data, a)
        else:
            lo, a, fa = a, b, fb
            b = lo + _GOLDEN * (hi - lo)
            fb = nll_at_temperature(data, b)
    t_star = 0.5 * (lo + hi)
    if nll_at_temperature(data, t_star) > nll_at_temperature(data, 1.0):
        return 1.0
    return float(t_star)
