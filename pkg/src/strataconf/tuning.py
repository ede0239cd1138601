"""Hyperparameter selection on the tuning split.

Two criteria choose the RAPS penalty from a discrete grid: minimize average
prediction-set size, or minimize the worst absolute coverage violation over
populated set-size strata (the stratified minimax criterion). Both share one
inner protocol: the tuning set is split 50/50 into inner-cal/inner-eval with
a seeded shuffle, each grid point is calibrated on inner-cal and evaluated on
inner-eval, and the per-point records are kept in the report for audit. Ties
always break toward the smallest penalty.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .conformal import MethodParams, calibrate, predict_all
from .data import DEFAULT_STRATA, LogitDataset, StrataSpec
from .errors import SplitError
from .scoring import label_ranks

__all__ = [
    "LambdaGrid",
    "TuningReport",
    "LambdaRecord",
    "StratumCoverage",
    "DEFAULT_LAMBDA_GRID",
    "COARSE_LAMBDA_GRID",
    "FINE_LAMBDA_GRID",
    "stratum_of",
    "stratified_coverage",
    "tune_lambda_size",
    "tune_lambda_adaptive",
    "select_k_reg",
]


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly ascending, non-negative penalty grid."""

    values: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("lambda grid must be non-empty")
        if values[0] < 0:
            raise ValueError(f"lambda values must be >= 0, got {values[0]}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"lambda grid must be strictly ascending, got {values}")
        object.__setattr__(self, "values", values)


DEFAULT_LAMBDA_GRID = LambdaGrid((0.0, 1e-5, 1e-4, 8e-4, 9e-4, 1e-3, 1.5e-3, 2e-3))
COARSE_LAMBDA_GRID = LambdaGrid((0.0, 1e-4, 1e-3, 5e-3, 1e-2))
FINE_LAMBDA_GRID = LambdaGrid((0.0, 1e-5, 1e-4, 5e-4, 8e-4, 9e-4, 1e-3,
                               1.5e-3, 2e-3, 4e-3, 7e-3, 1e-2))


def stratum_of(size: int, strata: StrataSpec) -> int:
    """Stratum index for a prediction-set size (beyond-last sizes map to the
    last stratum)."""
    return strata.stratum_of(size)


@dataclass(frozen=True)
class StratumCoverage:
    lo: int
    hi: int | None
    n: int
    coverage: float | None
    populated: bool

    def to_jsonable(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "n": self.n,
                "coverage": self.coverage, "populated": self.populated}


def stratified_coverage_arrays(sizes, covered, strata: StrataSpec,
                               min_count: int = 1):
    """Per-stratum coverage from parallel size/covered arrays."""
    sizes = np.asarray(sizes, dtype=np.int64)
    covered = np.asarray(covered, dtype=bool)
    idx = strata.strata_of(sizes) if sizes.size else np.array([], dtype=np.int64)
    out = []
    for m, (lo, hi) in enumerate(strata.boundaries):
        mask = idx == m
        n = int(mask.sum())
        cov = float(covered[mask].mean()) if n else None
        out.append(StratumCoverage(lo, hi, n, cov, n >= min_count))
    return out


def stratified_coverage(sets, strata: StrataSpec, min_count: int = 1):
    """Per-stratum empirical coverage of a list of prediction sets.

    A stratum is populated when it holds at least ``min_count`` sets; empty
    strata report n=0 with coverage None.
    """
    sizes = np.array([s.size for s in sets], dtype=np.int64)
    covered = np.array([s.covered for s in sets], dtype=bool)
    return stratified_coverage_arrays(sizes, covered, strata, min_count)


def max_coverage_violation(per_stratum, target: float) -> float:
    """Worst |coverage - target| over populated strata; +inf when none is
    populated."""
    violations = [abs(s.coverage - target) for s in per_stratum if s.populated]
    return max(violations) if violations else math.inf


@dataclass(frozen=True)
class LambdaRecord:
    lam: float
    avg_size: float
    per_stratum: tuple
    max_violation: float
    multi_label_count: int

    def to_jsonable(self) -> dict:
        return {
            "lambda": self.lam,
            "avg_size": self.avg_size,
            "max_violation": None if math.isinf(self.max_violation) else self.max_violation,
            "multi_label_count": self.multi_label_count,
            "per_stratum": [s.to_jsonable() for s in self.per_stratum],
        }


@dataclass(frozen=True)
class TuningReport:
    criterion: str
    chosen_lambda: float
    chosen_k_reg: int
    alpha: float
    temperature: float
    inner_split_seed: int
    min_count: int
    records: tuple

    def to_jsonable(self) -> dict:
        return {
            "criterion": self.criterion,
            "chosen_lambda": self.chosen_lambda,
            "chosen_k_reg": self.chosen_k_reg,
            "alpha": self.alpha,
            "temperature": self.temperature,
            "inner_split_seed": self.inner_split_seed,
            "min_count": self.min_count,
            "records": [r.to_jsonable() for r in self.records],
        }


def _inner_split(tune: LogitDataset, seed: int):
    """Seeded 50/50 shuffle split of the tuning set."""
    n = tune.n_samples
    if n < 2:
        raise SplitError(f"tuning set of {n} samples cannot be split 50/50")
    rng = np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))
    perm = rng.permutation(n)
    half = n // 2
    return tune.take(perm[:half]), tune.take(perm[half:])


def _evaluate_grid(tune, grid, k_reg, params, strata, min_count, seed):
    inner_cal, inner_eval = _inner_split(tune, seed)
    target = 1.0 - params.alpha

    def one(lam: float) -> LambdaRecord:
        raps = MethodParams("raps", alpha=params.alpha, lam=lam, k_reg=k_reg,
                            temperature=params.temperature)
        artifact = calibrate(inner_cal, raps, strata)
        sets = predict_all(inner_eval, artifact)
        per_stratum = tuple(stratified_coverage(sets, strata, min_count))
        sizes = [s.size for s in sets]
        return LambdaRecord(
            lam=lam,
            avg_size=float(np.mean(sizes)),
            per_stratum=per_stratum,
            max_violation=max_coverage_violation(per_stratum, target),
            multi_label_count=sum(1 for s in sizes if s >= 2),
        )

    threads = int(os.environ.get("STRATACONF_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, grid.values))
    else:
        records = [one(lam) for lam in grid.values]
    return tuple(records)


def _argmin_record(records, key) -> float:
    best = min(range(len(records)), key=lambda i: (key(records[i]), records[i].lam))
    return records[best].lam


def tune_lambda_size(tune: LogitDataset, grid: LambdaGrid, k_reg: int,
                     params: MethodParams, inner_split_seed: int = 0,
                     strata: StrataSpec = DEFAULT_STRATA,
                     min_count: int = 1) -> TuningReport:
    """Pick the penalty minimizing average set size on the inner-eval half
    (ties toward the smallest penalty)."""
    records = _evaluate_grid(tune, grid, k_reg, params, strata, min_count,
                             inner_split_seed)
    chosen = _argmin_record(records, lambda r: r.avg_size)
    return TuningReport("size", chosen, k_reg, params.alpha, params.temperature,
                        inner_split_seed, min_count, records)


def tune_lambda_adaptive(tune: LogitDataset, grid: LambdaGrid, k_reg: int,
                         params: MethodParams,
                         strata: StrataSpec = DEFAULT_STRATA,
                         min_count: int = 1,
                         inner_split_seed: int = 0) -> TuningReport:
    """Pick the penalty minimizing the worst absolute stratified coverage
    violation over populated strata (ties toward the smallest penalty). Grid
    points whose sets populate no stratum score +inf and are never chosen
    unless every point does."""
    records = _evaluate_grid(tune, grid, k_reg, params, strata, min_count,
                             inner_split_seed)
    chosen = _argmin_record(records, lambda r: r.max_violation)
    return TuningReport("adaptive", chosen, k_reg, params.alpha, params.temperature,
                        inner_split_seed, min_count, records)


def select_k_reg(tune: LogitDataset, mode, alpha: float = 0.1) -> int:
    """Rank threshold for the RAPS penalty.

    An integer mode is returned as-is; "auto" returns the
    ceil((n+1)(1-alpha))-th smallest true-label rank on the tuning set (the
    rank needed to cover a 1-alpha fraction), clamped to [1, K].
    """
    if isinstance(mode, int):
        if mode < 1:
            raise ValueError(f"k_reg must be >= 1, got {mode}")
        return mode
    if mode != "auto":
        raise ValueError(f"mode must be an integer or 'auto', got {mode!r}")
    if tune.n_samples == 0:
        raise ValueError("cannot auto-select k_reg on an empty tuning set")
    ranks = np.sort(label_ranks(tune.logits, tune.labels))
    position = math.ceil((tune.n_samples + 1) * (1.0 - alpha))
    position = min(position, tune.n_samples)
    return int(np.clip(ranks[position - 1], 1, tune.n_classes))
