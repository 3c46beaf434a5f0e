"""Column-generation boosting driver.

Alternates weak-learner generation against the current dual variables with
warm-started coordinate-descent solves of the restricted master problem,
recovering the duals from the primal solution after every solve.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .model import (Dataset, Model, TrainConfig, margins_from_scores,
                    objective_from_scores, stump_outputs)
from .solver import build_delta_codes, mu_from_margins, solve
from .stumps import build_search_index, generate_class_wise, generate_shared


@dataclass
class DualState:
    """Dual matrix lam[i, y-1] for constraints (i, y != y_i); diagonal unused (0)."""

    lam: np.ndarray
    labels: np.ndarray


def init_duals(dataset: Dataset) -> DualState:
    """All meaningful entries start at 1; the scale is immaterial for the
    first stump generation (the sub-problem argmax is scaling-invariant)."""
    lam = np.ones((dataset.num_examples, dataset.num_classes))
    lam[np.arange(dataset.num_examples), dataset.labels - 1] = 0.0
    return DualState(lam=lam, labels=dataset.labels)


def update_duals(dual: DualState, mu: np.ndarray, C: float, p: int) -> None:
    """KKT recovery from the primal solution: lam = (C/p) * mu, in place."""
    np.multiply(mu, C / p, out=dual.lam)
    dual.lam[np.arange(dual.lam.shape[0]), dual.labels - 1] = 0.0


@dataclass
class TraceRecord:
    iteration: int
    objective: float
    train_error: float
    test_error: float | None
    stumps_per_class: list[int]
    solver_ms: float
    total_ms: float
    exit_reason: str

    def to_json_dict(self, zero_timings: bool = False) -> dict:
        return {
            "iter": self.iteration,
            "objective": self.objective,
            "train_error": self.train_error,
            "test_error": self.test_error,
            "stumps_per_class": list(self.stumps_per_class),
            "solver_ms": 0.0 if zero_timings else self.solver_ms,
            "total_ms": 0.0 if zero_timings else self.total_ms,
            "exit_reason": self.exit_reason,
        }


@dataclass
class TrainTrace:
    """One record per completed column-generation iteration.

    update_history (populated on request) carries, per iteration, the flat
    weight vector the solve started from and every coordinate update it made.
    """

    records: list[TraceRecord]
    update_history: list[dict] | None = None

    def to_ndjson(self, zero_timings: bool = False) -> str:
        return "".join(json.dumps(r.to_json_dict(zero_timings)) + "\n"
                       for r in self.records)

    def write_ndjson(self, path, zero_timings: bool = False) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_ndjson(zero_timings))

    @classmethod
    def from_ndjson(cls, text: str) -> "TrainTrace":
        records = []
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            records.append(TraceRecord(
                iteration=d["iter"], objective=d["objective"],
                train_error=d["train_error"], test_error=d["test_error"],
                stumps_per_class=d["stumps_per_class"],
                solver_ms=d["solver_ms"], total_ms=d["total_ms"],
                exit_reason=d["exit_reason"]))
        return cls(records=records)

    @classmethod
    def read_ndjson(cls, path) -> "TrainTrace":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_ndjson(fh.read())


def stopping_check(trace: TrainTrace, config: TrainConfig) -> bool:
    """True when the relative objective change dropped below tolerance or the
    iteration budget is spent."""
    t = len(trace.records)
    if t < 1:
        raise ValueError("stopping_check needs at least one completed iteration")
    if t >= config.max_cg_iterations:
        return True
    if t < 2:
        return False
    prev = trace.records[-2].objective
    cur = trace.records[-1].objective
    return abs(cur - prev) / max(abs(prev), 1e-12) < config.cg_rel_tolerance


def _scores(outputs: list[list[np.ndarray]], weights: list[np.ndarray],
            m: int) -> np.ndarray:
    scores = np.zeros((m, len(outputs)))
    for c, (outs, w) in enumerate(zip(outputs, weights)):
        if w.size:
            scores[:, c] = w @ np.vstack(outs)
    return scores


def _error(scores: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(scores.argmax(axis=1) + 1 != labels))


def train(dataset: Dataset, config: TrainConfig, test_set: Dataset | None = None,
          record_updates: bool = False) -> tuple[Model, TrainTrace]:
    """Run the column-generation loop and return the model plus its trace.

    Per iteration: generate stumps from the duals (one per class, or one
    shared stump appended to every class), warm-start the solver with the new
    slots at zero, re-optimize, recover the duals, and record metrics.  Stops
    on a small relative objective change or after max_cg_iterations.
    """
    dataset.require_all_classes()
    if test_set is not None:
        if test_set.num_features != dataset.num_features:
            raise ValueError(
                f"test set has {test_set.num_features} features, "
                f"train set {dataset.num_features}")
        if test_set.num_classes != dataset.num_classes:
            raise ValueError(
                f"test set has {test_set.num_classes} classes, "
                f"train set {dataset.num_classes}")
    m, K = dataset.num_examples, dataset.num_classes
    p = dataset.num_constraints

    index = build_search_index(dataset)
    dual = init_duals(dataset)
    model = Model.empty(K, dataset.num_features)
    outputs: list[list[np.ndarray]] = [[] for _ in range(K)]
    test_outputs: list[list[np.ndarray]] = [[] for _ in range(K)]
    rng = np.random.default_rng(config.rng_seed)
    trace = TrainTrace(records=[], update_history=[] if record_updates else None)
    t_start = time.perf_counter()

    for it in range(1, config.max_cg_iterations + 1):
        if config.algorithm == "shared":
            stump, _, _ = generate_shared(dataset, dual.lam, index)
            chosen = [stump] * K
        else:
            chosen = [s for s, _ in generate_class_wise(dataset, dual.lam, index)]
        for c, stump in enumerate(chosen):
            model.per_class_learners[c].append(stump)
            model.per_class_weights[c] = np.append(model.per_class_weights[c], 0.0)
            outputs[c].append(stump_outputs(stump, dataset.features))
            if test_set is not None:
                test_outputs[c].append(stump_outputs(stump, test_set.features))
        # class-major variable order: the new slot of class c sits at c*it + (it-1)
        new_vars = [c * it + (it - 1) for c in range(K)]

        codes = build_delta_codes(model, dataset, outputs=outputs)
        scores = _scores(outputs, model.per_class_weights, m)
        mu = mu_from_margins(margins_from_scores(scores, dataset.labels), dataset.labels)
        if record_updates:
            w_start = model.flat_weights()
        stats = solve(model, dataset, config, new_variable_indices=new_vars,
                      codes=codes, mu=mu, rng=rng, record_updates=record_updates)
        update_duals(dual, mu, config.C, p)

        scores = _scores(outputs, model.per_class_weights, m)
        weight_sum = float(sum(w.sum() for w in model.per_class_weights))
        objective = objective_from_scores(scores, dataset.labels, weight_sum,
                                          config.C, p)
        train_error = _error(scores, dataset.labels)
        test_error = None
        if test_set is not None:
            test_scores = _scores(test_outputs, model.per_class_weights,
                                  test_set.num_examples)
            test_error = _error(test_scores, test_set.labels)

        trace.records.append(TraceRecord(
            iteration=it,
            objective=objective,
            train_error=train_error,
            test_error=test_error,
            stumps_per_class=model.stumps_per_class(),
            solver_ms=stats.wall_s * 1000.0,
            total_ms=(time.perf_counter() - t_start) * 1000.0,
            exit_reason=stats.exit_reason,
        ))
        if record_updates:
            picks, w_old, w_new = stats.update_history
            trace.update_history.append({
                "iteration": it,
                "initial_weights": w_start,
                "picks": picks,
                "w_old": w_old,
                "w_new": w_new,
            })
        if stopping_check(trace, config):
            break

    return model, trace
