"""Evaluation metrics for prediction sets and the five-method comparison
protocol.

The report mirrors the standard comparison table: marginal coverage, average
set size, singleton and empty rates, per-stratum coverage with its populated
minimum, plus per-class coverage. ``compare_methods`` runs the full protocol
(naive thresholding, LAC, size-tuned RAPS, size-tuned RAPS with a fitted
temperature, and minimax-tuned RAPS), and ``ablate`` re-runs the minimax
variant across strata or grid alternatives.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .conformal import MethodParams, calibrate, predict_all
from .data import DEFAULT_STRATA, LogitDataset, StrataSpec
from .errors import DimensionError
from .scoring import fit_temperature
from .tuning import (
    DEFAULT_LAMBDA_GRID,
    LambdaGrid,
    select_k_reg,
    stratified_coverage_arrays,
    tune_lambda_adaptive,
    tune_lambda_size,
)

__all__ = [
    "MetricsReport",
    "ProtocolConfig",
    "evaluate",
    "compare_methods",
    "ablate",
    "format_table",
]


@dataclass(frozen=True)
class MetricsReport:
    coverage: float
    avg_size: float
    singleton_rate: float
    empty_rate: float
    per_stratum: tuple
    strat_min: float | None
    per_class_coverage: tuple
    n_test: int

    def to_jsonable(self, method: str | None = None) -> dict:
        out = {}
        if method is not None:
            out["method"] = method
        out.update({
            "n_test": self.n_test,
            "coverage": self.coverage,
            "avg_size": self.avg_size,
            "singleton_rate": self.singleton_rate,
            "empty_rate": self.empty_rate,
            "strat_min": self.strat_min,
            "per_stratum": [s.to_jsonable() for s in self.per_stratum],
            "per_class": list(self.per_class_coverage),
        })
        return out


def evaluate(sets, labels, strata: StrataSpec = DEFAULT_STRATA,
             min_count: int = 1) -> MetricsReport:
    """Aggregate a list of prediction sets against true labels.

    Coverage flags are recomputed from ``labels`` so the report is
    authoritative even if the sets were built elsewhere. ``strat_min`` is None
    when no stratum reaches ``min_count``.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(sets) != labels.shape[0] or len(sets) == 0:
        raise DimensionError(
            f"{len(sets)} sets vs {labels.shape[0]} labels (both must be equal and >= 1)"
        )
    covered = np.array([int(y) in s.classes for s, y in zip(sets, labels)], dtype=bool)
    sizes = np.array([s.size for s in sets], dtype=np.int64)
    per_stratum = tuple(stratified_coverage_arrays(sizes, covered, strata, min_count))
    populated = [s.coverage for s in per_stratum if s.populated]
    n_classes = int(labels.max()) + 1 if labels.size else 0
    per_class = []
    for k in range(n_classes):
        mask = labels == k
        per_class.append(float(covered[mask].mean()) if mask.any() else None)
    return MetricsReport(
        coverage=float(covered.mean()),
        avg_size=float(sizes.mean()),
        singleton_rate=float((sizes == 1).mean()),
        empty_rate=float((sizes == 0).mean()),
        per_stratum=per_stratum,
        strat_min=min(populated) if populated else None,
        per_class_coverage=tuple(per_class),
        n_test=len(sets),
    )


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything the comparison protocol needs besides the data."""

    alpha: float = 0.1
    grid: LambdaGrid = DEFAULT_LAMBDA_GRID
    strata: StrataSpec = DEFAULT_STRATA
    k_reg: object = 1          # int or "auto"
    min_count: int = 1
    inner_split_seed: int = 0
    methods: tuple = ("naive", "lac", "raps_size", "raps_temp", "raps_adaptive")


METHOD_LABELS = {
    "naive": "Naive",
    "lac": "LAC",
    "lac_classcond": "LAC (class-cond)",
    "aps": "APS",
    "raps_size": "RAPS (Size)",
    "raps_temp": "RAPS (Temp)",
    "raps_adaptive": "RAPS (Adaptive)",
}


def _run_method(name, tune, cal, test, config: ProtocolConfig):
    alpha = config.alpha
    if name in ("naive", "lac", "lac_classcond", "aps"):
        params = MethodParams(name, alpha=alpha)
        artifact = calibrate(cal, params, config.strata)
        return predict_all(test, artifact), artifact, None
    k_reg = select_k_reg(tune, config.k_reg, alpha)
    temperature = 1.0
    if name == "raps_temp":
        temperature = fit_temperature(cal)
    base = MethodParams("raps", alpha=alpha, temperature=temperature)
    if name == "raps_adaptive":
        report = tune_lambda_adaptive(tune, config.grid, k_reg, base,
                                      config.strata, config.min_count,
                                      config.inner_split_seed)
    else:
        report = tune_lambda_size(tune, config.grid, k_reg, base,
                                  config.inner_split_seed,
                                  config.strata, config.min_count)
    params = replace(base, lam=report.chosen_lambda, k_reg=k_reg)
    artifact = calibrate(cal, params, config.strata)
    return predict_all(test, artifact), artifact, report


def compare_methods(tune: LogitDataset, cal: LogitDataset, test: LogitDataset,
                    config: ProtocolConfig = ProtocolConfig()):
    """Run each configured method (calibrated on cal, evaluated on test) and
    return [(label, MetricsReport), ...] in the configured order."""
    rows = []
    for name in config.methods:
        sets, _, _ = _run_method(name, tune, cal, test, config)
        report = evaluate(sets, test.labels, config.strata, config.min_count)
        rows.append((METHOD_LABELS.get(name, name), report))
    return rows


@dataclass(frozen=True)
class AblationRow:
    variant: str
    chosen_lambda: float
    coverage: float
    avg_size: float
    strat_min: float | None

    def to_jsonable(self) -> dict:
        return {"variant": self.variant, "chosen_lambda": self.chosen_lambda,
                "coverage": self.coverage, "avg_size": self.avg_size,
                "strat_min": self.strat_min}


def ablate(tune: LogitDataset, cal: LogitDataset, test: LogitDataset,
           axis: str, variants, config: ProtocolConfig = ProtocolConfig()):
    """Re-run minimax-tuned RAPS per variant of one axis, holding everything
    else fixed. ``variants`` is a list of (name, StrataSpec) for axis
    'strata' or (name, LambdaGrid) for axis 'grid'."""
    if axis not in ("strata", "grid"):
        raise ValueError(f"axis must be 'strata' or 'grid', got {axis!r}")
    if len(variants) < 2:
        raise ValueError("ablation needs at least 2 variants")
    rows = []
    for name, variant in variants:
        if axis == "strata":
            variant_config = replace(config, strata=variant)
        else:
            variant_config = replace(config, grid=variant)
        sets, artifact, _ = _run_method("raps_adaptive", tune, cal, test,
                                        variant_config)
        report = evaluate(sets, test.labels, variant_config.strata,
                          variant_config.min_count)
        rows.append(AblationRow(name, artifact.lam, report.coverage,
                                report.avg_size, report.strat_min))
    return rows


def format_table(rows) -> str:
    """Fixed-width text table of (method, MetricsReport) rows."""
    header = f"{'Method':<20}{'Coverage':>10}{'Avg Size':>10}{'Singleton':>11}{'Empty':>9}{'Strat. Min.':>13}"
    lines = [header, "-" * len(header)]
    for name, r in rows:
        strat = f"{r.strat_min:.3f}" if r.strat_min is not None else "n/a"
        lines.append(
            f"{name:<20}{r.coverage:>10.4f}{r.avg_size:>10.2f}"
            f"{r.singleton_rate * 100:>10.1f}%{r.empty_rate * 100:>8.1f}%{strat:>13}"
        )
    return "\n".join(lines)
