"""Fully-corrective coordinate-descent solver for the restricted master problem.

Minimizes  sum_j w_j + (C/p) * sum_{i, y != y_i} exp(-w . dh_i(y))  over w >= 0,
where dh_i(y) is the signed-output code of constraint (i, y) against every
variable.  Each coordinate has a closed-form update, KKT violation values
drive working-set selection and the stop rule, and a cached vector of
exp(-margin) terms (mu) makes each update linear in the size of the
variable's constraint lists.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import backends
from ._update_math import MU_MAX, MU_MIN, new_weight
from .model import MARGIN_CLAMP, Dataset, Model, TrainConfig, margin_matrix, stump_outputs


@dataclass
class DeltaCodes:
    """Constraint index lists per variable, CSR-style.

    Variable j (class-major order) owns the constraints whose signed code
    h_{c,t}(x_i) * (ind[y_i = c] - ind[y = c]) is +1 (pos) or -1 (neg);
    constraints code 0 everywhere else and are not stored.  Constraint (i, y)
    is flattened as i * K + (y - 1).
    """

    pos_ptr: np.ndarray
    pos_idx: np.ndarray
    neg_ptr: np.ndarray
    neg_idx: np.ndarray
    num_variables: int
    num_examples: int
    num_classes: int

    def pos_list(self, j: int) -> np.ndarray:
        return self.pos_idx[self.pos_ptr[j]:self.pos_ptr[j + 1]]

    def neg_list(self, j: int) -> np.ndarray:
        return self.neg_idx[self.neg_ptr[j]:self.neg_ptr[j + 1]]


def build_delta_codes(model: Model, dataset: Dataset, outputs=None) -> DeltaCodes:
    """Constraint lists for every variable of the model.

    For a variable in class c, examples of class c contribute all K-1 of
    their constraints with the sign of the stump output, and every other
    example contributes only its (i, c) constraint with the opposite sign.
    outputs, when given, must be per-class lists of precomputed +-1 stump
    output vectors (saves re-evaluating stumps the trainer already cached).
    """
    m, K = dataset.num_examples, dataset.num_classes
    labels0 = dataset.labels - 1
    rows = np.arange(m)
    pos_lists: list[np.ndarray] = []
    neg_lists: list[np.ndarray] = []
    for c in range(K):
        same = rows[labels0 == c]
        other = rows[labels0 != c]
        # all K-1 constraint ids of each class-c example, row-major
        ids_same = (same[:, None] * K + np.arange(K)[None, :])
        ids_same = ids_same[:, np.delete(np.arange(K), c)].ravel()
        ids_other = other * K + c
        stumps = model.per_class_learners[c]
        for t, stump in enumerate(stumps):
            if outputs is not None:
                h = outputs[c][t]
            else:
                h = stump_outputs(stump, dataset.features)
            h_same = np.repeat(h[same], K - 1)
            h_other = h[other]
            pos_lists.append(np.concatenate((ids_same[h_same > 0], ids_other[h_other < 0])))
            neg_lists.append(np.concatenate((ids_same[h_same < 0], ids_other[h_other > 0])))

    def _csr(lists):
        ptr = np.zeros(len(lists) + 1, dtype=np.int64)
        np.cumsum([a.size for a in lists], out=ptr[1:])
        idx = np.concatenate(lists) if lists else np.zeros(0, dtype=np.int64)
        return ptr, np.ascontiguousarray(idx, dtype=np.int64)

    pos_ptr, pos_idx = _csr(pos_lists)
    neg_ptr, neg_idx = _csr(neg_lists)
    return DeltaCodes(pos_ptr, pos_idx, neg_ptr, neg_idx,
                      num_variables=len(pos_lists), num_examples=m, num_classes=K)


def mu_from_margins(gamma: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """exp(-margin) with clamped exponents; unused (i, y_i) slots set to 1."""
    mu = np.exp(-np.clip(gamma, -MARGIN_CLAMP, MARGIN_CLAMP))
    mu[np.arange(gamma.shape[0]), labels - 1] = 1.0
    return mu


def init_mu(model: Model, dataset: Dataset) -> np.ndarray:
    """Fresh (m, K) matrix of exp(-margin) terms for the model's current weights.

    Margins are clamped to +-MARGIN_CLAMP first; the unused (i, y_i) slots
    are set to 1 and never touched by the solver.
    """
    return mu_from_margins(margin_matrix(model, dataset), dataset.labels)


def edge_sums(j: int, mu: np.ndarray, w_j: float, codes: DeltaCodes) -> tuple[float, float]:
    """(V-, V+) for variable j: the mu sums over its lists with the current
    w_j factor removed, i.e. V- = exp(-w_j) * sum(mu[neg]) and
    V+ = exp(+w_j) * sum(mu[pos])."""
    flat = mu.ravel()
    v_neg = math.exp(-w_j) * float(flat[codes.neg_list(j)].sum())
    v_pos = math.exp(w_j) * float(flat[codes.pos_list(j)].sum())
    return v_neg, v_pos


def closed_form_update(v_neg: float, v_pos: float, C: float, p: float) -> float:
    """Exact minimizer of the single-variable problem over w_j >= 0:

        max{0, log(sqrt(V+ V- + p^2/(4C^2)) - p/(2C)) - log V-}

    evaluated in a cancellation-free form that also covers the V- -> 0 limit
    (log(C V+ / p) when positive) and returns 0 when V+ = 0.
    """
    if v_neg < 0 or v_pos < 0:
        raise ValueError(f"V-, V+ must be non-negative, got ({v_neg}, {v_pos})")
    if C <= 0 or p <= 0:
        raise ValueError(f"C and p must be positive, got ({C}, {p})")
    return new_weight(0.0, v_pos, v_neg, p / (2.0 * C), False)


def stagewise_update(v_neg: float, v_pos: float) -> float:
    """Large-C update max{0, 0.5 * log(V+/V-)}, capped at 500 when V- = 0."""
    if v_neg < 0 or v_pos < 0:
        raise ValueError(f"V-, V+ must be non-negative, got ({v_neg}, {v_pos})")
    return new_weight(0.0, v_pos, v_neg, 0.0, True)


def update_mu(mu: np.ndarray, j: int, w_old: float, w_new: float, codes: DeltaCodes) -> None:
    """Incremental mu refresh after w_j moved: positive-list entries scale by
    exp(w_old - w_new), negative-list entries by exp(w_new - w_old)."""
    if w_new == w_old:
        return
    flat = mu.ravel()
    pos = codes.pos_list(j)
    neg = codes.neg_list(j)
    flat[pos] = np.clip(flat[pos] * math.exp(w_old - w_new), MU_MIN, MU_MAX)
    flat[neg] = np.clip(flat[neg] * math.exp(w_new - w_old), MU_MIN, MU_MAX)


def violations(mu: np.ndarray, weights: np.ndarray, codes: DeltaCodes,
               C: float, p: float) -> np.ndarray:
    """KKT violation value per variable.

    With g_j = sum(mu[pos_j]) - sum(mu[neg_j]) (mu as stored, current w
    included): |1 - (C/p) g_j| where w_j > 0, max{0, (C/p) g_j - 1} at 0.
    """
    weights = np.asarray(weights, dtype=np.float64)
    theta = np.empty(codes.num_variables)
    backends.get_kernels().violation_values(
        weights, np.ascontiguousarray(mu).ravel(),
        codes.pos_ptr, codes.pos_idx, codes.neg_ptr, codes.neg_idx,
        C / p, theta)
    return theta


@dataclass
class SolverStats:
    """Per-solve metrics plus the optional per-pick update history."""

    picks: int
    iterations: int
    final_max_violation: float
    wall_s: float
    exit_reason: str
    update_history: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None


def solve(model: Model, dataset: Dataset, config: TrainConfig, *,
          new_variable_indices=None, codes: DeltaCodes | None = None,
          mu: np.ndarray | None = None, rng: np.random.Generator | None = None,
          record_updates: bool = False) -> SolverStats:
    """Run working-set coordinate descent on the model's weights, in place.

    The working set starts as the newly added variables (all variables when
    new_variable_indices is None, e.g. for a cold solve).  Each working-set
    iteration performs |S| picks -- sequential over S the first time, then
    uniformly at random from S with replacement -- followed by a full
    violation pass that rebuilds S.  Terminates when the largest violation
    drops to epsilon or tau_max iterations are spent; an inexact solution on
    budget exhaustion is a normal exit.  mu, when supplied, must be
    consistent with the current weights and is updated in place.
    """
    t0 = time.perf_counter()
    kern = backends.get_kernels()
    weights = model.flat_weights()
    n = weights.shape[0]
    if codes is None:
        codes = build_delta_codes(model, dataset)
    if codes.num_variables != n:
        raise ValueError(f"codes cover {codes.num_variables} variables, model has {n}")
    if mu is None:
        mu = init_mu(model, dataset)
    if not mu.flags["C_CONTIGUOUS"]:
        raise ValueError("mu must be C-contiguous")
    mu_flat = mu.ravel()

    if new_variable_indices is None:
        working = np.arange(n, dtype=np.int64)
    else:
        working = np.unique(np.asarray(new_variable_indices, dtype=np.int64))
        if working.size and (working[0] < 0 or working[-1] >= n):
            raise IndexError(f"new variable indices out of range [0, {n})")
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)

    stagewise = config.algorithm == "class_wise_stagewise"
    c_over_p = config.C / dataset.num_constraints
    theta = np.empty(n)
    tau = 0
    picks = 0
    history = ([], [], []) if record_updates else None

    while True:
        tau += 1
        if tau == 1:
            order = working.copy()
        elif working.size:
            order = working[rng.integers(0, working.size, size=working.size)]
        else:
            order = np.zeros(0, dtype=np.int64)
        w_old = np.empty(order.size)
        w_new = np.empty(order.size)
        kern.coordinate_sweep(order, weights, mu_flat,
                              codes.pos_ptr, codes.pos_idx,
                              codes.neg_ptr, codes.neg_idx,
                              c_over_p, stagewise, w_old, w_new)
        picks += order.size
        if history is not None:
            history[0].append(order)
            history[1].append(w_old)
            history[2].append(w_new)
        kern.violation_values(weights, mu_flat,
                              codes.pos_ptr, codes.pos_idx,
                              codes.neg_ptr, codes.neg_idx,
                              c_over_p, theta)
        working = np.flatnonzero(theta > config.epsilon)
        max_violation = float(theta.max()) if n else 0.0
        if max_violation <= config.epsilon:
            exit_reason = "converged"
            break
        if tau >= config.tau_max:
            exit_reason = "tau_max"
            break

    model.set_flat_weights(weights)
    packed = None
    if history is not None:
        packed = (np.concatenate(history[0]) if history[0] else np.zeros(0, dtype=np.int64),
                  np.concatenate(history[1]) if history[1] else np.zeros(0),
                  np.concatenate(history[2]) if history[2] else np.zeros(0))
    return SolverStats(picks=picks, iterations=tau,
                       final_max_violation=max_violation,
                       wall_s=time.perf_counter() - t0,
                       exit_reason=exit_reason,
                       update_history=packed)
