import numpy as np
import pytest

from cwboost.model import Dataset, Model, Stump


def make_blobs(per_class=50, num_classes=3, num_features=2, spread=4.0,
               std=1.0, seed=0) -> Dataset:
    """Gaussian blobs with class centers on a circle of radius `spread`."""
    rng = np.random.default_rng(seed)
    angles = 2.0 * np.pi * np.arange(num_classes) / num_classes
    centers = np.zeros((num_classes, num_features))
    centers[:, 0] = spread * np.cos(angles)
    centers[:, min(1, num_features - 1)] = spread * np.sin(angles)
    X = np.vstack([
        centers[c] + std * rng.standard_normal((per_class, num_features))
        for c in range(num_classes)
    ])
    y = np.repeat(np.arange(1, num_classes + 1), per_class)
    return Dataset(X, y, num_classes)


def random_dataset(rng, m, d, num_classes) -> Dataset:
    X = rng.standard_normal((m, d))
    # every class gets at least one example
    y = np.concatenate([np.arange(1, num_classes + 1),
                        rng.integers(1, num_classes + 1, size=m - num_classes)])
    rng.shuffle(y)
    return Dataset(X, y, num_classes)


def random_model(rng, dataset, stumps_per_class, max_weight=1.0) -> Model:
    """Random stumps with thresholds drawn from the data range, random
    non-negative weights."""
    K, d = dataset.num_classes, dataset.num_features
    lo, hi = dataset.features.min(), dataset.features.max()
    learners = []
    weights = []
    for _ in range(K):
        stumps = [
            Stump(int(rng.integers(0, d)),
                  float(rng.uniform(lo - 0.5, hi + 0.5)),
                  int(rng.choice([-1, 1])))
            for _ in range(stumps_per_class)
        ]
        learners.append(stumps)
        weights.append(rng.uniform(0.0, max_weight, size=stumps_per_class))
    return Model(learners, weights, K, d)


def random_dual(rng, dataset) -> np.ndarray:
    lam = rng.uniform(0.0, 2.0, size=(dataset.num_examples, dataset.num_classes))
    lam[np.arange(dataset.num_examples), dataset.labels - 1] = 0.0
    return lam


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
