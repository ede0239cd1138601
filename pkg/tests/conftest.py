import numpy as np
import pytest

from strataconf import GeneratorConfig, LogitDataset, generate


def random_probs(rng, n, k):
    """Random probability rows (Dirichlet-ish via normalized exponentials)."""
    raw = rng.exponential(1.0, size=(n, k))
    return raw / raw.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_dataset():
    """Well-separated 3-class dataset, deterministic."""
    return generate(GeneratorConfig(n_classes=3, n_samples=60, seed=1,
                                    sharpness=6.0, noise_sd=0.5))


@pytest.fixture
def ambiguous_dataset():
    """11-class dataset with a confusable pair, like bilateral organs."""
    return generate(GeneratorConfig(
        n_classes=11, n_samples=4000, seed=3, sharpness=5.0,
        confusion_pairs=((4, 5, 5.0),), noise_sd=1.2, ambiguous_fraction=0.25,
    ))


def dataset_from_probs(probs, labels):
    """Logits whose softmax reproduces the given probabilities exactly
    (up to normalization): log(p)."""
    probs = np.asarray(probs, dtype=np.float64)
    return LogitDataset(np.log(np.maximum(probs, 1e-300)), np.asarray(labels))


def mixture_fixture(n_easy_labels, n_flat_labels, n_weird=0):
    """Exact-probability-atom 3-class dataset for penalty-selection tests.

    Three row kinds: easy pi=(0.97,0.02,0.01), flat pi=(0.47,0.43,0.10), and
    weird pi=(0.35,0.33,0.32) whose label is always the rank-3 class. Label
    assignments are exact counts per class, so every score is a known atom
    and the calibration quantile lands on the 0.97 atom regardless of the
    inner shuffle.
    """
    rows, labels = [], []

    def block(pi, counts):
        for cls, cnt in enumerate(counts):
            rows.extend([np.log(pi)] * cnt)
            labels.extend([cls] * cnt)

    block((0.97, 0.02, 0.01), n_easy_labels)
    block((0.47, 0.43, 0.10), n_flat_labels)
    if n_weird:
        block((0.35, 0.33, 0.32), (0, 0, n_weird))
    return LogitDataset(np.array(rows), np.array(labels))


def disagreement_fixture():
    """Size criterion picks 0.25, adaptive picks 0, deterministically.

    At the big penalty the flat rows truncate to singletons (minimal average
    size) but the weird rows' two-class sets survive with coverage exactly 0,
    so the minimax objective jumps to 0.9 there.
    """
    from strataconf.tuning import LambdaGrid
    data = mixture_fixture((4361, 89, 0), (235, 225, 40), n_weird=50)
    return data, LambdaGrid((0.0, 0.25))
