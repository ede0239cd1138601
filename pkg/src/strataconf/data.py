"""Domain types, file formats, and deterministic dataset splitting.

All types are immutable after construction (arrays are marked read-only), so
they can be shared freely across threads. The on-disk formats owned here are
the logit CSV (header ``label,logit_0,...,logit_{K-1}``) and the
prediction-set JSON-lines file.

Dataset shuffling uses numpy's PCG64 generator seeded with the 64-bit seed
from :class:`SplitSpec`; the algorithm is fixed and pinned by tests so
independently written producers and consumers agree on partitions.
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import FormatError, LabelError, SplitError

__all__ = [
    "LogitDataset",
    "SplitSpec",
    "StrataSpec",
    "PredictionSet",
    "CalibrationArtifact",
    "DEFAULT_STRATA",
    "COARSE_STRATA",
    "FINE_STRATA",
    "load_logit_csv",
    "write_logit_csv",
    "split_dataset",
    "write_prediction_sets",
    "read_prediction_sets",
]


def _atomic_write_bytes(path, payload: bytes) -> None:
    """Write a file atomically (temp file + rename in the target directory)."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


@dataclass(frozen=True)
class LogitDataset:
    """An N x K matrix of raw classifier scores with integer labels.

    Row order is significant and preserved by every operation in the package.
    """

    logits: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if logits.ndim != 2:
            raise ValueError(f"logits must be 2-D, got shape {logits.shape}")
        if labels.ndim != 1 or labels.shape[0] != logits.shape[0]:
            raise ValueError(
                f"labels shape {labels.shape} does not match logits shape {logits.shape}"
            )
        if logits.shape[1] < 2:
            raise ValueError("at least 2 classes are required")
        if not np.all(np.isfinite(logits)):
            bad = int(np.argwhere(~np.isfinite(logits).all(axis=1))[0][0])
            raise ValueError(f"non-finite logit at row {bad}")
        if labels.size and (labels.min() < 0 or labels.max() >= logits.shape[1]):
            bad = int(np.argwhere((labels < 0) | (labels >= logits.shape[1]))[0][0])
            raise LabelError(
                f"label {int(labels[bad])} at row {bad} outside [0, {logits.shape[1] - 1}]"
            )
        logits = logits.copy()
        labels = labels.copy()
        logits.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.logits.shape[0]

    @property
    def n_classes(self) -> int:
        return self.logits.shape[1]

    def take(self, indices: np.ndarray) -> "LogitDataset":
        """Row subset in the given index order."""
        return LogitDataset(self.logits[indices], self.labels[indices])


def _as_exact_fraction(value) -> Fraction:
    """Exact rational from int/Fraction/str, or from a float via its shortest
    decimal repr (so 0.3 means 3/10, not the binary expansion)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value))


@dataclass(frozen=True)
class SplitSpec:
    """Tune/cal/test fractions (exact rationals summing to 1) and a shuffle seed."""

    fractions: tuple
    seed: int = 0

    def __post_init__(self):
        if len(self.fractions) != 3:
            raise ValueError("fractions must be a (tune, cal, test) triple")
        fracs = tuple(_as_exact_fraction(f) for f in self.fractions)
        if any(f < 0 for f in fracs):
            raise ValueError(f"fractions must be non-negative, got {fracs}")
        if sum(fracs) != 1:
            raise ValueError(f"fractions must sum to 1 exactly, got {fracs}")
        object.__setattr__(self, "fractions", fracs)


def _shuffled_indices(n: int, seed: int) -> np.ndarray:
    """Seeded uniform shuffle of range(n) using PCG64 (pinned by tests)."""
    rng = np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))
    return rng.permutation(n)


def _split_indices(n: int, spec: SplitSpec):
    perm = _shuffled_indices(n, spec.seed)
    tune_frac, cal_frac, _ = spec.fractions
    n_tune = int(tune_frac * n)
    n_tune_cal = int((tune_frac + cal_frac) * n)
    return perm[:n_tune], perm[n_tune:n_tune_cal], perm[n_tune_cal:]


def split_dataset(data: LogitDataset, spec: SplitSpec):
    """Deterministic three-way split: seeded shuffle, then contiguous slices
    at floor(N*tune) and floor(N*(tune+cal)).

    Raises SplitError if any partition would be empty.
    """
    parts = _split_indices(data.n_samples, spec)
    names = ("tune", "cal", "test")
    for name, idx in zip(names, parts):
        if idx.size == 0:
            raise SplitError(f"empty {name} partition for fractions {spec.fractions}")
    return tuple(data.take(idx) for idx in parts)


# ---------------------------------------------------------------------------
# Logit CSV format
# ---------------------------------------------------------------------------

def load_logit_csv(path) -> LogitDataset:
    """Load a logit CSV with header ``label,logit_0,...,logit_{K-1}``.

    Raises FormatError for a malformed header or row, ValueError for a
    non-finite value (with its row index), LabelError for an out-of-range
    label.
    """
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        expected = ["label"] + [f"logit_{j}" for j in range(len(header) - 1)]
        if header != expected or len(header) < 3:
            raise FormatError(
                f"{path}: malformed header {header!r}; "
                "expected label,logit_0,...,logit_{K-1} with K >= 2"
            )
        k = len(header) - 1
        labels = []
        rows = []
        for i, row in enumerate(reader):
            if len(row) != k + 1:
                raise FormatError(f"{path}: row {i} has {len(row)} fields, expected {k + 1}")
            try:
                label = int(row[0])
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise FormatError(f"{path}: row {i}: {exc}") from None
            if not all(math.isfinite(v) for v in values):
                raise ValueError(f"{path}: non-finite logit at row {i}")
            if label < 0 or label >= k:
                raise LabelError(f"{path}: row {i}: label {label} outside [0, {k - 1}]")
            labels.append(label)
            rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return LogitDataset(np.array(rows, dtype=np.float64), np.array(labels, dtype=np.int64))


def write_logit_csv(data: LogitDataset, path) -> None:
    """Write the canonical logit CSV. Values use 17 significant digits so a
    write/load round trip is bit-exact for float64."""
    lines = ["label," + ",".join(f"logit_{j}" for j in range(data.n_classes))]
    for label, row in zip(data.labels, data.logits):
        lines.append(str(int(label)) + "," + ",".join(f"{v:.17g}" for v in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Prediction sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PredictionSet:
    """A per-sample subset of class indices with its size and coverage flag."""

    sample_index: int
    classes: tuple
    covered: bool
    label: int | None = None

    def __post_init__(self):
        classes = tuple(int(c) for c in self.classes)
        if sorted(set(classes)) != list(classes):
            raise ValueError(f"classes must be sorted and unique, got {classes}")
        object.__setattr__(self, "classes", classes)

    @property
    def size(self) -> int:
        return len(self.classes)

    @staticmethod
    def from_classes(sample_index, classes, label=None) -> "PredictionSet":
        classes = tuple(sorted(int(c) for c in set(classes)))
        covered = label is not None and int(label) in classes
        return PredictionSet(int(sample_index), classes, covered,
                             None if label is None else int(label))


def write_prediction_sets(sets, path) -> None:
    """One JSON object per line, in sample order, LF endings:
    ``{"index":i,"label":y,"set":[...],"size":n,"covered":bool}``."""
    lines = []
    for s in sets:
        record = {
            "index": s.sample_index,
            "label": s.label,
            "set": list(s.classes),
            "size": s.size,
            "covered": s.covered,
        }
        lines.append(json.dumps(record, separators=(",", ":")))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_prediction_sets(path):
    """Inverse of :func:`write_prediction_sets`."""
    sets = []
    with open(path, "r", encoding="utf-8") as handle:
        for i, line in enumerate(handle):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                sets.append(PredictionSet(
                    int(record["index"]),
                    tuple(record["set"]),
                    bool(record["covered"]),
                    None if record.get("label") is None else int(record["label"]),
                ))
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"{path}: line {i}: {exc}") from None
    return sets


# ---------------------------------------------------------------------------
# Strata over prediction-set sizes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrataSpec:
    """Partition of set sizes into contiguous inclusive ranges.

    ``boundaries`` is an ascending tuple of (lo, hi) pairs; hi may be None for
    an unbounded final range. The first range starts at 0 and sizes beyond
    the last bound map to the last stratum.
    """

    boundaries: tuple

    def __post_init__(self):
        ranges = []
        for pair in self.boundaries:
            lo, hi = pair
            lo = int(lo)
            hi = None if hi is None else int(hi)
            ranges.append((lo, hi))
        if not ranges:
            raise ValueError("at least one stratum is required")
        if ranges[0][0] != 0:
            raise ValueError("first stratum must start at 0")
        for i, (lo, hi) in enumerate(ranges):
            if hi is not None and hi < lo:
                raise ValueError(f"stratum {i} has hi < lo: ({lo}, {hi})")
            if hi is None and i != len(ranges) - 1:
                raise ValueError("only the last stratum may be unbounded")
            if i > 0:
                prev_hi = ranges[i - 1][1]
                if prev_hi is None or lo != prev_hi + 1:
                    raise ValueError(
                        f"strata must be contiguous and ascending; "
                        f"stratum {i} starts at {lo} after hi {prev_hi}"
                    )
        object.__setattr__(self, "boundaries", tuple(ranges))

    @property
    def n_strata(self) -> int:
        return len(self.boundaries)

    def stratum_of(self, size: int) -> int:
        """Index of the stratum containing ``size``; sizes beyond the last
        bound map to the last stratum."""
        if size < 0:
            raise ValueError(f"size must be non-negative, got {size}")
        for m, (lo, hi) in enumerate(self.boundaries):
            if size >= lo and (hi is None or size <= hi):
                return m
        return self.n_strata - 1

    def strata_of(self, sizes: np.ndarray) -> np.ndarray:
        """Vectorized stratum_of."""
        los = np.array([lo for lo, _ in self.boundaries])
        idx = np.searchsorted(los, np.asarray(sizes), side="right") - 1
        return np.clip(idx, 0, self.n_strata - 1)

    def to_jsonable(self):
        return [[lo, hi] for lo, hi in self.boundaries]

    @staticmethod
    def from_jsonable(obj) -> "StrataSpec":
        return StrataSpec(tuple((lo, hi) for lo, hi in obj))


DEFAULT_STRATA = StrataSpec(((0, 1), (2, 3), (4, 6), (7, 10), (11, 100), (101, None)))
COARSE_STRATA = StrataSpec(((0, 1), (2, 3), (4, None)))
FINE_STRATA = StrataSpec(((0, 0), (1, 1), (2, 2), (3, 3), (4, 6), (7, 10), (11, 100), (101, None)))


# ---------------------------------------------------------------------------
# Calibration artifact
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationArtifact:
    """Frozen parameters that fully determine prediction-set behavior.

    ``q_hat`` is None for the naive method (no quantile), +inf when the
    calibration set is too small for the requested alpha, and per-class
    quantiles live in ``class_q_hat`` for the class-conditional LAC variant.
    """

    method: str
    alpha: float
    q_hat: float | None
    lam: float
    k_reg: int
    temperature: float
    strata: StrataSpec
    n_cal: int
    n_classes: int
    class_q_hat: tuple | None = None

    _METHODS = ("naive", "lac", "lac_classcond", "aps", "raps")

    def __post_init__(self):
        if self.method not in self._METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.k_reg < 1:
            raise ValueError(f"k_reg must be >= 1, got {self.k_reg}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")

    @staticmethod
    def _encode_q(value):
        if value is None:
            return None
        return "inf" if math.isinf(value) else value

    @staticmethod
    def _decode_q(value):
        if value is None:
            return None
        return math.inf if value == "inf" else float(value)

    def to_jsonable(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "q_hat": self._encode_q(self.q_hat),
            "lambda": self.lam,
            "k_reg": self.k_reg,
            "temperature": self.temperature,
            "n_cal": self.n_cal,
            "n_classes": self.n_classes,
            "class_q_hat": (None if self.class_q_hat is None
                            else [self._encode_q(q) for q in self.class_q_hat]),
            "strata": self.strata.to_jsonable(),
        }

    @staticmethod
    def from_jsonable(obj: dict) -> "CalibrationArtifact":
        return CalibrationArtifact(
            method=obj["method"],
            alpha=float(obj["alpha"]),
            q_hat=CalibrationArtifact._decode_q(obj["q_hat"]),
            lam=float(obj["lambda"]),
            k_reg=int(obj["k_reg"]),
            temperature=float(obj["temperature"]),
            strata=StrataSpec.from_jsonable(obj["strata"]),
            n_cal=int(obj["n_cal"]),
            n_classes=int(obj["n_classes"]),
            class_q_hat=(None if obj.get("class_q_hat") is None else
                         tuple(CalibrationArtifact._decode_q(q) for q in obj["class_q_hat"])),
        )

    def save(self, path) -> None:
        _atomic_write_text(path, json.dumps(self.to_jsonable(), indent=2) + "\n")

    @staticmethod
    def load(path) -> "CalibrationArtifact":
        with open(path, "r", encoding="utf-8") as handle:
            return CalibrationArtifact.from_jsonable(json.load(handle))
