"""Seeded generator of exchangeable logit datasets with controllable
confusion structure.

Rows are i.i.d.: a uniform label, a one-hot mean logit scaled by
``sharpness``, an optional boost on a confusion partner (two-way ambiguity,
mimicking bilaterally symmetric classes), and Gaussian noise on every
coordinate. Exchangeability holds by construction, so coverage-test failures
indicate implementation bugs rather than data problems.

Determinism: :func:`generate` draws labels, then the ambiguity coin flips,
then the noise matrix from a single PCG64 stream; trial seeds in
:func:`coverage_trial` derive from ``SeedSequence([seed, trial_index])`` so
trials are reproducible independently of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import MethodParams, calibrate, predict_all
from .data import DEFAULT_STRATA, LogitDataset, StrataSpec

__all__ = ["GeneratorConfig", "generate", "coverage_trial"]


@dataclass(frozen=True)
class GeneratorConfig:
    n_classes: int
    n_samples: int
    seed: int = 0
    sharpness: float = 5.0
    confusion_pairs: tuple = ()
    noise_sd: float = 1.0
    ambiguous_fraction: float = 0.0

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.n_classes}")
        if self.n_samples < 1:
            raise ValueError(f"need at least 1 sample, got {self.n_samples}")
        if self.sharpness <= 0:
            raise ValueError(f"sharpness must be > 0, got {self.sharpness}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be >= 0, got {self.noise_sd}")
        if not 0.0 <= self.ambiguous_fraction <= 1.0:
            raise ValueError(
                f"ambiguous_fraction must be in [0,1], got {self.ambiguous_fraction}"
            )
        pairs = []
        for a, b, strength in self.confusion_pairs:
            a, b, strength = int(a), int(b), float(strength)
            if a == b:
                raise ValueError(f"confusion pair ({a},{b}) must name distinct classes")
            if not (0 <= a < self.n_classes and 0 <= b < self.n_classes):
                raise ValueError(f"confusion pair ({a},{b}) outside [0, {self.n_classes - 1}]")
            if strength < 0:
                raise ValueError(f"confusion strength must be >= 0, got {strength}")
            pairs.append((a, b, strength))
        object.__setattr__(self, "confusion_pairs", tuple(pairs))


def _partner_table(config: GeneratorConfig):
    """class -> (partner, strength) from the first pair mentioning the class."""
    partner = np.full(config.n_classes, -1, dtype=np.int64)
    strength = np.zeros(config.n_classes)
    for a, b, s in config.confusion_pairs:
        if partner[a] < 0:
            partner[a], strength[a] = b, s
        if partner[b] < 0:
            partner[b], strength[b] = a, s
    return partner, strength


def _draw(config: GeneratorConfig, n: int, rng: np.random.Generator) -> LogitDataset:
    k = config.n_classes
    labels = rng.integers(0, k, size=n)
    ambiguous = rng.random(n) < config.ambiguous_fraction
    mu = np.zeros((n, k))
    mu[np.arange(n), labels] = config.sharpness
    partner, strength = _partner_table(config)
    boosted = ambiguous & (partner[labels] >= 0)
    mu[np.nonzero(boosted)[0], partner[labels[boosted]]] += strength[labels[boosted]]
    logits = mu + rng.normal(0.0, config.noise_sd, size=(n, k))
    return LogitDataset(logits, labels)


def generate(config: GeneratorConfig) -> LogitDataset:
    """Deterministic i.i.d. logit dataset for the config's seed."""
    rng = np.random.Generator(np.random.PCG64(config.seed & 0xFFFFFFFFFFFFFFFF))
    return _draw(config, config.n_samples, rng)


def coverage_trial(config: GeneratorConfig, params: MethodParams,
                   n_cal: int, n_test: int, n_trials: int,
                   strata: StrataSpec = DEFAULT_STRATA):
    """Monte Carlo check of the split-conformal coverage guarantee.

    Each trial draws fresh calibration and test sets, calibrates, and records
    empirical test coverage. Returns (mean coverage, per-trial coverages).
    """
    if n_cal < 1 or n_test < 1:
        raise ValueError("n_cal and n_test must be >= 1")
    coverages = []
    for trial in range(n_trials):
        seq = np.random.SeedSequence([config.seed & 0xFFFFFFFFFFFFFFFF, trial])
        rng = np.random.Generator(np.random.PCG64(seq))
        cal = _draw(config, n_cal, rng)
        test = _draw(config, n_test, rng)
        artifact = calibrate(cal, params, strata)
        sets = predict_all(test, artifact)
        coverages.append(float(np.mean([s.covered for s in sets])))
    return float(np.mean(coverages)), coverages
