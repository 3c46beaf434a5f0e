"""Core data model: datasets, decision stumps, per-class ensembles, training config."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Margins are clamped to this magnitude before exponentiation so that the
# exponential loss saturates instead of producing inf/nan arithmetic.
MARGIN_CLAMP = 500.0

ALGORITHMS = ("class_wise", "shared", "class_wise_stagewise")


class Dataset:
    """Dense feature matrix plus integer labels in 1..K.

    Prediction only needs valid labels; training additionally requires that
    every class in 1..K has at least one example (checked by the trainer).
    """

    def __init__(self, features, labels, num_classes: int):
        features = np.ascontiguousarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {features.shape}")
        m, d = features.shape
        if m < 1 or d < 1:
            raise ValueError(f"need at least one example and one feature, got {m}x{d}")
        if not np.all(np.isfinite(features)):
            raise ValueError("features contain non-finite values")
        if labels.shape != (m,):
            raise ValueError(f"labels must have shape ({m},), got {labels.shape}")
        if num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {num_classes}")
        if labels.min() < 1 or labels.max() > num_classes:
            raise ValueError(
                f"labels must lie in [1, {num_classes}], got range "
                f"[{labels.min()}, {labels.max()}]"
            )
        self.features = features
        self.labels = labels
        self.num_classes = int(num_classes)

    @property
    def num_examples(self) -> int:
        return self.features.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_constraints(self) -> int:
        """One loss term per (example, wrong class) pair: m * (K - 1)."""
        return self.num_examples * (self.num_classes - 1)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes + 1)[1:]

    def require_all_classes(self) -> None:
        counts = self.class_counts()
        missing = np.flatnonzero(counts == 0) + 1
        if missing.size:
            raise ValueError(f"classes without examples: {missing.tolist()}")


@dataclass(frozen=True)
class Stump:
    """Threshold test on one feature: +polarity if x[feature] > threshold else -polarity."""

    feature_index: int
    threshold: float
    polarity: int

    def __post_init__(self):
        if self.feature_index < 0:
            raise ValueError(f"feature_index must be >= 0, got {self.feature_index}")
        if self.polarity not in (-1, 1):
            raise ValueError(f"polarity must be -1 or +1, got {self.polarity}")


def evaluate_stump(stump: Stump, example) -> int:
    """Evaluate one stump on one feature row; output is always -1 or +1."""
    example = np.asarray(example)
    if stump.feature_index >= example.shape[-1]:
        raise IndexError(
            f"feature_index {stump.feature_index} out of range for "
            f"{example.shape[-1]} features"
        )
    return stump.polarity if example[stump.feature_index] > stump.threshold else -stump.polarity


def stump_outputs(stump: Stump, features: np.ndarray) -> np.ndarray:
    """Vectorized stump outputs over the rows of a feature matrix (+-1 floats)."""
    if stump.feature_index >= features.shape[1]:
        raise IndexError(
            f"feature_index {stump.feature_index} out of range for "
            f"{features.shape[1]} features"
        )
    out = np.where(features[:, stump.feature_index] > stump.threshold, 1.0, -1.0)
    if stump.polarity < 0:
        out = -out
    return out


class Model:
    """K ordered stump lists with non-negative weight vectors, one pair per class.

    In the shared-learner variant all classes hold identical stump lists but
    weights still differ per class.  The global variable index used by the
    solver enumerates weights class-major: all of class 1's slots first, then
    class 2's, and so on; within a class, slots follow append order.
    """

    def __init__(self, per_class_learners, per_class_weights, num_classes: int,
                 num_features: int):
        if num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {num_classes}")
        if len(per_class_learners) != num_classes or len(per_class_weights) != num_classes:
            raise ValueError("need one learner list and one weight vector per class")
        self.per_class_learners = [list(ls) for ls in per_class_learners]
        self.per_class_weights = [
            np.asarray(w, dtype=np.float64).copy() for w in per_class_weights
        ]
        self.num_classes = int(num_classes)
        self.num_features = int(num_features)
        for c, (ls, w) in enumerate(zip(self.per_class_learners, self.per_class_weights), 1):
            if len(ls) != w.shape[0]:
                raise ValueError(
                    f"class {c}: {len(ls)} stumps but {w.shape[0]} weights"
                )
            if w.size and w.min() < 0:
                raise ValueError(f"class {c}: negative weight {w.min()}")
            for s in ls:
                if s.feature_index >= num_features:
                    raise IndexError(
                        f"class {c}: stump feature {s.feature_index} out of range"
                    )

    @classmethod
    def empty(cls, num_classes: int, num_features: int) -> "Model":
        return cls([[] for _ in range(num_classes)],
                   [np.zeros(0) for _ in range(num_classes)],
                   num_classes, num_features)

    @property
    def num_variables(self) -> int:
        return sum(w.shape[0] for w in self.per_class_weights)

    def stumps_per_class(self) -> list[int]:
        return [len(ls) for ls in self.per_class_learners]

    def flat_weights(self) -> np.ndarray:
        """Concatenated weights in class-major variable order."""
        if self.num_variables == 0:
            return np.zeros(0)
        return np.concatenate(self.per_class_weights)

    def set_flat_weights(self, w: np.ndarray) -> None:
        w = np.asarray(w, dtype=np.float64)
        if w.shape[0] != self.num_variables:
            raise ValueError(f"expected {self.num_variables} weights, got {w.shape[0]}")
        if w.size and w.min() < 0:
            raise ValueError(f"negative weight {w.min()}")
        pos = 0
        for c in range(self.num_classes):
            n = self.per_class_weights[c].shape[0]
            self.per_class_weights[c] = w[pos:pos + n].copy()
            pos += n

    def variable_class_slot(self, j: int) -> tuple[int, int]:
        """Map a global variable index to (class in 1..K, slot within the class)."""
        pos = 0
        for c in range(self.num_classes):
            n = self.per_class_weights[c].shape[0]
            if j < pos + n:
                return c + 1, j - pos
            pos += n
        raise IndexError(f"variable {j} out of range ({self.num_variables} variables)")


def class_score(model: Model, example, c: int) -> float:
    """Weighted sum of class c's stump outputs on one example."""
    if not 1 <= c <= model.num_classes:
        raise ValueError(f"class index {c} out of range [1, {model.num_classes}]")
    x = np.asarray(example, dtype=np.float64)
    total = 0.0
    for stump, w in zip(model.per_class_learners[c - 1], model.per_class_weights[c - 1]):
        total += w * evaluate_stump(stump, x)
    return total


def score_matrix(model: Model, features: np.ndarray) -> np.ndarray:
    """All class scores for all rows at once; shape (rows, K)."""
    features = np.asarray(features, dtype=np.float64)
    scores = np.zeros((features.shape[0], model.num_classes))
    for c in range(model.num_classes):
        w = model.per_class_weights[c]
        for stump, wj in zip(model.per_class_learners[c], w):
            if wj != 0.0:
                scores[:, c] += wj * stump_outputs(stump, features)
    return scores


def predict(model: Model, example) -> int:
    """Class with the highest score; ties go to the smallest class index."""
    x = np.asarray(example, dtype=np.float64).reshape(1, -1)
    return int(predict_batch(model, x)[0])


def predict_batch(model: Model, features: np.ndarray) -> np.ndarray:
    scores = score_matrix(model, features)
    # argmax returns the first (= smallest) index on ties
    return scores.argmax(axis=1) + 1


def margin(model: Model, dataset: Dataset, i: int, y: int) -> float:
    """Score of example i's true class minus its score for class y (y != y_i)."""
    y_i = int(dataset.labels[i])
    if y == y_i:
        raise ValueError(f"margin is undefined for y == y_i (= {y})")
    if not 1 <= y <= model.num_classes:
        raise ValueError(f"class index {y} out of range [1, {model.num_classes}]")
    x = dataset.features[i]
    return class_score(model, x, y_i) - class_score(model, x, y)


def margins_from_scores(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Margins gamma[i, y] = score(y_i) - score(y); the (i, y_i) entries are 0."""
    own = scores[np.arange(scores.shape[0]), labels - 1]
    return own[:, None] - scores


def margin_matrix(model: Model, dataset: Dataset) -> np.ndarray:
    """All margins as an (m, K) matrix; the unused (i, y_i) entries are 0."""
    return margins_from_scores(score_matrix(model, dataset.features), dataset.labels)


def objective_from_scores(scores: np.ndarray, labels: np.ndarray,
                          weight_sum: float, C: float, p: int) -> float:
    """Objective value given precomputed class scores (clamped exponents)."""
    gamma = margins_from_scores(scores, labels)
    losses = np.exp(-np.clip(gamma, -MARGIN_CLAMP, MARGIN_CLAMP))
    losses[np.arange(scores.shape[0]), labels - 1] = 0.0
    # C * (total / p) rather than (C / p) * total: keeps the all-zero-weights
    # objective exactly equal to C.
    return weight_sum + C * (float(losses.sum()) / p)


def primal_objective(model: Model, dataset: Dataset, config: "TrainConfig") -> float:
    """L1 weight norm plus average exponential loss over all (i, y != y_i) pairs.

    Exponents are clamped to +-MARGIN_CLAMP so overflow saturates instead of
    turning into nan.
    """
    if model.num_classes != dataset.num_classes:
        raise ValueError(
            f"model has {model.num_classes} classes, dataset {dataset.num_classes}"
        )
    if model.num_features != dataset.num_features:
        raise ValueError(
            f"model has {model.num_features} features, dataset {dataset.num_features}"
        )
    weight_sum = float(sum(w.sum() for w in model.per_class_weights))
    return objective_from_scores(score_matrix(model, dataset.features),
                                 dataset.labels, weight_sum,
                                 config.C, dataset.num_constraints)


@dataclass
class TrainConfig:
    """Knobs for the boosting driver and the coordinate-descent solver."""

    C: float = 1e4
    epsilon: float = 0.1
    tau_max: int = 2
    max_cg_iterations: int = 500
    cg_rel_tolerance: float = 1e-5
    algorithm: str = "class_wise"
    rng_seed: int = 0

    def __post_init__(self):
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.tau_max < 1:
            raise ValueError(f"tau_max must be >= 1, got {self.tau_max}")
        if self.max_cg_iterations < 1:
            raise ValueError(f"max_cg_iterations must be >= 1, got {self.max_cg_iterations}")
        if self.cg_rel_tolerance <= 0:
            raise ValueError(f"cg_rel_tolerance must be positive, got {self.cg_rel_tolerance}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.algorithm == "class_wise_stagewise" and self.tau_max != 1:
            raise ValueError("class_wise_stagewise requires tau_max = 1")
        if self.rng_seed < 0:
            raise ValueError(f"rng_seed must be >= 0, got {self.rng_seed}")
