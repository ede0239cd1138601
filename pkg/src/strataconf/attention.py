"""Saliency-map entropy statistics and their correlation with prediction-set
size.

Spatial entropy treats a non-negative heatmap as a probability distribution
over pixels and reports Shannon entropy in bits (lower = more focused
attention). Spearman uses midranks for ties; both correlations get two-sided
p-values from the Student-t transform with n-2 degrees of freedom, evaluated
through the regularized incomplete beta function.

Heatmap binary format: magic bytes ``GCAM``, three little-endian uint32
(count, height, width), then count*H*W little-endian float32 values,
row-major per map, maps concatenated in sample order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc
from scipy.stats import rankdata

from .data import _atomic_write_bytes
from .errors import CorrelationUndefined, DimensionError, EntropyUndefined, FormatError

__all__ = [
    "HeatmapBatch",
    "AttentionReport",
    "read_gcam",
    "write_gcam",
    "spatial_entropy",
    "spearman",
    "point_biserial",
    "student_t_sf2",
    "attention_report",
]

_GCAM_MAGIC = b"GCAM"


@dataclass(frozen=True)
class HeatmapBatch:
    """Stack of non-negative saliency maps, shape (count, H, W)."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 3:
            raise ValueError(f"heatmaps must be (count, H, W), got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("heatmaps must be finite")
        if values.size and values.min() < 0:
            raise ValueError("heatmaps must be non-negative (post-ReLU)")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def write_gcam(batch: HeatmapBatch, path) -> None:
    header = _GCAM_MAGIC + struct.pack("<III", batch.count, batch.height, batch.width)
    payload = batch.values.astype("<f4").tobytes(order="C")
    _atomic_write_bytes(path, header + payload)


def read_gcam(path) -> HeatmapBatch:
    with open(path, "rb") as handle:
        blob = handle.read()
    if len(blob) < 16 or blob[:4] != _GCAM_MAGIC:
        raise FormatError(f"{path}: missing GCAM magic bytes")
    count, height, width = struct.unpack("<III", blob[4:16])
    expected = 16 + 4 * count * height * width
    if len(blob) != expected:
        raise FormatError(
            f"{path}: payload is {len(blob)} bytes, expected {expected} "
            f"for {count} maps of {height}x{width}"
        )
    values = np.frombuffer(blob, dtype="<f4", offset=16).reshape(count, height, width)
    return HeatmapBatch(values.astype(np.float64))


def spatial_entropy(heatmap: np.ndarray) -> float:
    """Shannon entropy in bits of a heatmap normalized to a distribution over
    pixels; ranges over [0, log2(H*W)]."""
    values = np.asarray(heatmap, dtype=np.float64).ravel()
    total = values.sum()
    if total <= 0:
        raise EntropyUndefined("all-zero heatmap has no entropy")
    p = values / total
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def student_t_sf2(t: float, df: int) -> float:
    """Two-sided Student-t tail probability P(|T| >= t) via the regularized
    incomplete beta identity."""
    if df < 1:
        raise ValueError(f"df must be >= 1, got {df}")
    t = float(t)
    if not np.isfinite(t):
        return 0.0
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def _t_pvalue(coefficient: float, n: int) -> float:
    denom = 1.0 - coefficient * coefficient
    if denom <= 0.0:
        return 0.0
    t = coefficient * np.sqrt((n - 2) / denom)
    return student_t_sf2(t, n - 2)


def spearman(x, y):
    """Spearman rank correlation with midrank ties and a two-sided t-approx
    p-value. Returns (rho, p)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(f"x and y must be equal-length vectors, got {x.shape}, {y.shape}")
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise CorrelationUndefined("correlation undefined for a constant vector")
    rx = rankdata(x, method="average")
    ry = rankdata(y, method="average")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    rho = float((rx * ry).sum() / np.sqrt((rx * rx).sum() * (ry * ry).sum()))
    return rho, _t_pvalue(rho, n)


def point_biserial(x, group):
    """Point-biserial correlation between a continuous variable and a binary
    group, with a two-sided t-approx p-value. Returns (r, p)."""
    x = np.asarray(x, dtype=np.float64)
    group = np.asarray(group, dtype=bool)
    if x.shape != group.shape or x.ndim != 1:
        raise DimensionError(f"x and group must be equal-length vectors, got {x.shape}, {group.shape}")
    n = x.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 observations, got {n}")
    n1 = int(group.sum())
    n0 = n - n1
    if n1 == 0 or n0 == 0:
        raise CorrelationUndefined("point-biserial needs both groups non-empty")
    s = float(x.std())  # population standard deviation
    if s == 0.0:
        raise CorrelationUndefined("point-biserial undefined for zero-variance x")
    r = float((x[group].mean() - x[~group].mean()) / s * np.sqrt(n1 * n0 / (n * n)))
    return r, _t_pvalue(r, n)


@dataclass(frozen=True)
class AttentionReport:
    n: int
    spearman_rho: float | None
    spearman_p: float | None
    point_biserial_r: float | None
    point_biserial_p: float | None
    mean_entropy_singleton: float | None
    mean_entropy_multi: float | None
    n_singleton: int
    n_multi: int

    def to_jsonable(self) -> dict:
        return {
            "n": self.n,
            "spearman_rho": self.spearman_rho,
            "spearman_p": self.spearman_p,
            "point_biserial_r": self.point_biserial_r,
            "point_biserial_p": self.point_biserial_p,
            "mean_entropy_singleton": self.mean_entropy_singleton,
            "mean_entropy_multi": self.mean_entropy_multi,
            "n_singleton": self.n_singleton,
            "n_multi": self.n_multi,
        }


def attention_report(maps: HeatmapBatch, sets) -> AttentionReport:
    """Per-map entropy correlated with prediction-set size.

    Correlations that are undefined for the given inputs (e.g. all sets
    singleton) are reported as None rather than raised.
    """
    if maps.count != len(sets):
        raise DimensionError(f"{maps.count} heatmaps vs {len(sets)} prediction sets")
    entropy = np.array([spatial_entropy(maps.values[i]) for i in range(maps.count)])
    sizes = np.array([s.size for s in sets], dtype=np.float64)
    singleton = sizes == 1
    multi = sizes >= 2

    try:
        rho, rho_p = spearman(entropy, sizes)
    except CorrelationUndefined:
        rho, rho_p = None, None
    try:
        r, r_p = point_biserial(entropy, singleton)
    except CorrelationUndefined:
        r, r_p = None, None

    return AttentionReport(
        n=maps.count,
        spearman_rho=rho,
        spearman_p=rho_p,
        point_biserial_r=r,
        point_biserial_p=r_p,
        mean_entropy_singleton=float(entropy[singleton].mean()) if singleton.any() else None,
        mean_entropy_multi=float(entropy[multi].mean()) if multi.any() else None,
        n_singleton=int(singleton.sum()),
        n_multi=int(multi.sum()),
    )
