"""Weak-learner generation: edge-maximizing decision stumps per class.

Each boosting iteration needs, per class, the stump maximizing the edge
sum_i u_i * h(x_i) where u collapses the dual variables of that class.  The
search space is every (feature, candidate threshold, polarity) triple, with
candidate thresholds at midpoints between consecutive distinct sorted feature
values plus one sentinel below the minimum (the constant stump).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends
from .model import Dataset, Stump


@dataclass
class StumpSearchIndex:
    """Per-feature sort order and candidate thresholds, built once per dataset.

    Candidates are stored CSR-style: feature f owns the flat slice
    [cand_ptr[f], cand_ptr[f+1]); cand_split holds how many examples (in
    sorted order) fall on the <= side of each candidate threshold.
    """

    sort_idx: np.ndarray        # (d, m) int64, argsort per feature
    cand_ptr: np.ndarray        # (d + 1,) int64
    cand_threshold: np.ndarray  # flat float64
    cand_split: np.ndarray      # flat int64
    num_examples: int


def build_search_index(dataset: Dataset) -> StumpSearchIndex:
    X = dataset.features
    m, d = X.shape
    sort_idx = np.argsort(X, axis=0, kind="stable").T.copy()
    ptr = np.zeros(d + 1, dtype=np.int64)
    thresholds = []
    splits = []
    for f in range(d):
        v = X[sort_idx[f], f]
        # sentinel below the minimum: the constant (all +polarity) stump
        th = [v[0] - 1.0]
        sp = [0]
        boundaries = np.flatnonzero(v[:-1] < v[1:]) + 1
        for k in boundaries:
            lo, hi = v[k - 1], v[k]
            mid = lo + 0.5 * (hi - lo)
            # rounding may land on hi, which would move the boundary example
            # to the wrong side of the split the candidate was derived from
            if not (lo <= mid < hi):
                mid = lo
            th.append(mid)
            sp.append(int(k))
        ptr[f + 1] = ptr[f] + len(th)
        thresholds.append(np.asarray(th))
        splits.append(np.asarray(sp, dtype=np.int64))
    return StumpSearchIndex(
        sort_idx=sort_idx,
        cand_ptr=ptr,
        cand_threshold=np.concatenate(thresholds),
        cand_split=np.concatenate(splits),
        num_examples=m,
    )


def signed_weights(dataset: Dataset, lam: np.ndarray, c: int) -> np.ndarray:
    """Collapse the dual matrix into one signed weight per example for class c.

    u_i is the sum of example i's dual row when y_i = c, else -lam[i, c];
    the class-c stump sub-problem objective is then sum_i u_i * h(x_i).
    """
    m, K = dataset.num_examples, dataset.num_classes
    if lam.shape != (m, K):
        raise ValueError(f"dual matrix must have shape ({m}, {K}), got {lam.shape}")
    if not 1 <= c <= K:
        raise ValueError(f"class index {c} out of range [1, {K}]")
    rows = np.arange(m)
    off_diag = lam.copy()
    off_diag[rows, dataset.labels - 1] = 0.0
    if off_diag.min() < 0:
        raise ValueError(f"negative dual entry {off_diag.min()}")
    return np.where(dataset.labels == c, off_diag.sum(axis=1), -lam[:, c - 1])


def best_stump(dataset: Dataset, u: np.ndarray, index: StumpSearchIndex) -> tuple[Stump, float]:
    """Stump maximizing the edge sum_i u_i * h(x_i), with its edge.

    Ties break toward (smaller feature, smaller threshold, polarity +1 first).
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.shape != (index.num_examples,):
        raise ValueError(f"u must have shape ({index.num_examples},), got {u.shape}")
    if dataset.num_examples != index.num_examples:
        raise ValueError("index was built over a different dataset")
    kern = backends.get_kernels()
    f, ci, pol, edge = kern.stump_scan(u, index.sort_idx, index.cand_ptr, index.cand_split)
    stump = Stump(feature_index=int(f),
                  threshold=float(index.cand_threshold[ci]),
                  polarity=int(pol))
    return stump, float(edge)


def generate_class_wise(dataset: Dataset, lam: np.ndarray,
                        index: StumpSearchIndex) -> list[tuple[Stump, float]]:
    """Best stump per class: element c-1 solves the class-c sub-problem."""
    return [
        best_stump(dataset, signed_weights(dataset, lam, c), index)
        for c in range(1, dataset.num_classes + 1)
    ]


def generate_shared(dataset: Dataset, lam: np.ndarray,
                    index: StumpSearchIndex) -> tuple[Stump, int, float]:
    """Single best (stump, class, edge) across all classes.

    Equals the max-edge element of generate_class_wise (ties to the smaller
    class index), so the search cost matches the class-wise variant.
    """
    candidates = generate_class_wise(dataset, lam, index)
    best_c = 0
    for c in range(1, len(candidates)):
        if candidates[c][1] > candidates[best_c][1]:
            best_c = c
    stump, edge = candidates[best_c]
    return stump, best_c + 1, edge
