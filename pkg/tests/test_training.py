import numpy as np
import pytest

from cwboost.model import Dataset, Model, TrainConfig
from cwboost.solver import build_delta_codes, init_mu, mu_from_margins, solve
from cwboost.stumps import build_search_index, generate_class_wise, generate_shared
from cwboost.training import (TrainTrace, _scores, init_duals, stopping_check,
                              train, update_duals)
from cwboost.model import margins_from_scores, stump_outputs
from conftest import make_blobs, random_dataset, random_model
from oracles import naive_objective


class TestInitDuals:
    def test_small_case(self):
        ds = Dataset([[0.0], [1.0]], [1, 2], 3)
        dual = init_duals(ds)
        assert dual.lam.shape == (2, 3)
        assert dual.lam[0, 0] == 0.0 and dual.lam[1, 1] == 0.0
        meaningful = [dual.lam[0, 1], dual.lam[0, 2], dual.lam[1, 0], dual.lam[1, 2]]
        assert meaningful == [1.0, 1.0, 1.0, 1.0]

    def test_first_iteration_selection_invariant_to_dual_scale(self, rng):
        ds = random_dataset(rng, 40, 3, 3)
        index = build_search_index(ds)
        dual = init_duals(ds)
        base = generate_class_wise(ds, dual.lam, index)
        scaled = generate_class_wise(ds, (123.0 / ds.num_constraints) * dual.lam, index)
        assert [s for s, _ in base] == [s for s, _ in scaled]


class TestUpdateDuals:
    def test_zero_weights_give_C_over_p(self, rng):
        ds = random_dataset(rng, 10, 2, 3)
        model = Model.empty(3, 2)
        dual = init_duals(ds)
        C, p = 50.0, ds.num_constraints
        update_duals(dual, init_mu(model, ds), C, p)
        off = dual.lam[dual.lam > 0]
        assert np.allclose(off, C / p, rtol=1e-15)
        assert dual.lam[np.arange(10), ds.labels - 1].max() == 0.0

    def test_ratio_to_mu_is_constant(self, rng):
        ds = random_dataset(rng, 12, 3, 3)
        model = random_model(rng, ds, 4)
        mu = init_mu(model, ds)
        dual = init_duals(ds)
        C, p = 77.0, ds.num_constraints
        update_duals(dual, mu, C, p)
        mask = np.ones_like(mu, dtype=bool)
        mask[np.arange(12), ds.labels - 1] = False
        assert np.allclose(dual.lam[mask] / mu[mask], C / p, rtol=1e-12)

    def test_matches_direct_kkt_formula(self, rng):
        from oracles import naive_class_score
        ds = random_dataset(rng, 10, 2, 3)
        model = random_model(rng, ds, 3)
        dual = init_duals(ds)
        C, p = 40.0, ds.num_constraints
        update_duals(dual, init_mu(model, ds), C, p)
        for i in range(ds.num_examples):
            y_i = int(ds.labels[i])
            for y in range(1, 4):
                if y == y_i:
                    continue
                expected = (C / p) * np.exp(
                    naive_class_score(model, ds.features[i], y)
                    - naive_class_score(model, ds.features[i], y_i))
                assert dual.lam[i, y - 1] == pytest.approx(expected, rel=1e-10)


class TestStoppingCheck:
    def _trace(self, objectives):
        trace = TrainTrace(records=[])
        for t, obj in enumerate(objectives, 1):
            from cwboost.training import TraceRecord
            trace.records.append(TraceRecord(t, obj, 0.0, None, [t], 0.0, 0.0, "x"))
        return trace

    def test_no_change_triggers(self):
        config = TrainConfig(cg_rel_tolerance=1e-6)
        assert stopping_check(self._trace([10.0, 10.0]), config) is True

    def test_large_change_does_not_trigger(self):
        config = TrainConfig(cg_rel_tolerance=0.05)
        assert stopping_check(self._trace([10.0, 9.0]), config) is False

    def test_iteration_budget_always_triggers(self):
        config = TrainConfig(max_cg_iterations=3, cg_rel_tolerance=1e-12)
        assert stopping_check(self._trace([10.0, 5.0, 2.0]), config) is True

    def test_single_iteration_does_not_trigger(self):
        config = TrainConfig(cg_rel_tolerance=0.5)
        assert stopping_check(self._trace([10.0]), config) is False

    def test_needs_a_record(self):
        with pytest.raises(ValueError):
            stopping_check(TrainTrace(records=[]), TrainConfig())


class TestTrain:
    def test_class_wise_growth(self):
        ds = make_blobs(per_class=20, seed=3)
        config = TrainConfig(C=1e3, max_cg_iterations=7, cg_rel_tolerance=1e-12)
        model, trace = train(ds, config)
        T = len(trace.records)
        assert model.stumps_per_class() == [T] * 3
        for rec in trace.records:
            assert rec.stumps_per_class == [rec.iteration] * 3

    def test_shared_lists_identical(self):
        ds = make_blobs(per_class=20, seed=3)
        config = TrainConfig(C=1e3, algorithm="shared", max_cg_iterations=7,
                             cg_rel_tolerance=1e-12)
        model, _ = train(ds, config)
        first = model.per_class_learners[0]
        for ls in model.per_class_learners[1:]:
            assert ls == first

    def test_blob_reaches_zero_train_error_within_30_iterations(self):
        ds = make_blobs(per_class=50, seed=0)
        config = TrainConfig(C=1e4, max_cg_iterations=30, cg_rel_tolerance=1e-12)
        model, trace = train(ds, config)
        assert min(r.train_error for r in trace.records) == 0.0
        # sanity oracle: a multinomial logit on the same stump features
        # separates the data, so zero training error is attainable
        from sklearn.linear_model import LogisticRegression
        H = np.hstack([
            np.vstack([stump_outputs(s, ds.features)
                       for s in model.per_class_learners[c]]).T
            for c in range(3)
        ])
        clf = LogisticRegression(penalty=None, max_iter=5000)
        clf.fit(H, ds.labels)
        assert clf.score(H, ds.labels) == 1.0

    def test_objective_non_increasing(self):
        ds = make_blobs(per_class=30, std=1.6, seed=5)
        for algorithm in ("class_wise", "shared"):
            config = TrainConfig(C=1e3, algorithm=algorithm,
                                 max_cg_iterations=25, cg_rel_tolerance=1e-12)
            _, trace = train(ds, config)
            objs = [r.objective for r in trace.records]
            for prev, cur in zip(objs, objs[1:]):
                assert cur <= prev + 1e-10 * abs(prev)

    def test_trace_objective_matches_primal_objective(self):
        from cwboost.model import primal_objective
        ds = make_blobs(per_class=15, seed=9)
        config = TrainConfig(C=500.0, max_cg_iterations=6, cg_rel_tolerance=1e-12)
        model, trace = train(ds, config)
        assert trace.records[-1].objective == pytest.approx(
            primal_objective(model, ds, config), rel=1e-12)
        assert trace.records[-1].objective == pytest.approx(
            naive_objective(model, ds, config.C), rel=1e-10)

    def test_missing_class_rejected_before_first_iteration(self):
        ds = Dataset([[0.0], [1.0]], [1, 1], 2)
        with pytest.raises(ValueError):
            train(ds, TrainConfig())

    def test_test_set_dimension_mismatch_rejected(self):
        ds = make_blobs(per_class=10)
        bad = Dataset(np.zeros((4, 5)), [1, 2, 3, 1], 3)
        with pytest.raises(ValueError):
            train(ds, TrainConfig(), test_set=bad)

    def test_test_error_recorded(self):
        ds = make_blobs(per_class=30, seed=1)
        held = make_blobs(per_class=10, seed=2)
        config = TrainConfig(C=1e3, max_cg_iterations=5, cg_rel_tolerance=1e-12)
        _, trace = train(ds, config, test_set=held)
        assert all(r.test_error is not None for r in trace.records)
        assert trace.records[-1].test_error <= 0.2

    def test_deterministic_semantics_across_runs(self):
        ds = make_blobs(per_class=25, std=1.5, seed=11)
        config = TrainConfig(C=1e3, max_cg_iterations=10, cg_rel_tolerance=1e-12,
                             rng_seed=4)
        m1, t1 = train(ds, config)
        m2, t2 = train(ds, config)
        assert all(np.array_equal(a, b) for a, b in
                   zip(m1.per_class_weights, m2.per_class_weights))
        assert t1.to_ndjson(zero_timings=True) == t2.to_ndjson(zero_timings=True)

    def test_trace_ndjson_roundtrip(self, tmp_path):
        ds = make_blobs(per_class=10, seed=6)
        config = TrainConfig(C=100.0, max_cg_iterations=4, cg_rel_tolerance=1e-12)
        _, trace = train(ds, config)
        path = tmp_path / "trace.ndjson"
        trace.write_ndjson(path)
        back = TrainTrace.read_ndjson(path)
        assert [r.to_json_dict() for r in back.records] == \
            [r.to_json_dict() for r in trace.records]

    def test_manual_replication_matches_train(self):
        """Step-by-step reconstruction with the library ops reproduces train(),
        checks the dual/mu identity each iteration, and confirms the shared
        variant appends the max-edge class-wise candidate."""
        ds = make_blobs(per_class=20, std=1.4, seed=8)
        config = TrainConfig(C=800.0, algorithm="shared", max_cg_iterations=8,
                             cg_rel_tolerance=1e-12, rng_seed=13)
        model_ref, _ = train(ds, config)

        K, m, p = ds.num_classes, ds.num_examples, ds.num_constraints
        index = build_search_index(ds)
        dual = init_duals(ds)
        model = Model.empty(K, ds.num_features)
        outputs = [[] for _ in range(K)]
        rng = np.random.default_rng(config.rng_seed)
        for it in range(1, 9):
            class_wise = generate_class_wise(ds, dual.lam, index)
            stump, c_star, edge = generate_shared(ds, dual.lam, index)
            assert edge == max(e for _, e in class_wise)
            assert (stump, edge) == class_wise[c_star - 1]
            for c in range(K):
                model.per_class_learners[c].append(stump)
                model.per_class_weights[c] = np.append(model.per_class_weights[c], 0.0)
                outputs[c].append(stump_outputs(stump, ds.features))
            codes = build_delta_codes(model, ds, outputs=outputs)
            scores = _scores(outputs, model.per_class_weights, m)
            mu = mu_from_margins(margins_from_scores(scores, ds.labels), ds.labels)
            solve(model, ds, config,
                  new_variable_indices=[c * it + (it - 1) for c in range(K)],
                  codes=codes, mu=mu, rng=rng)
            update_duals(dual, mu, config.C, p)
            # dual/mu identity after every iteration
            mask = np.ones((m, K), dtype=bool)
            mask[np.arange(m), ds.labels - 1] = False
            assert np.allclose(dual.lam[mask], (config.C / p) * mu[mask], rtol=1e-12)

        assert model.per_class_learners == model_ref.per_class_learners
        for a, b in zip(model.per_class_weights, model_ref.per_class_weights):
            assert np.array_equal(a, b)

    def test_shared_weights_sparser_than_class_wise(self):
        ds = make_blobs(per_class=40, std=1.8, seed=21)
        budget = 25
        fractions = {}
        for algorithm in ("class_wise", "shared"):
            config = TrainConfig(C=1e4, algorithm=algorithm,
                                 max_cg_iterations=budget, cg_rel_tolerance=1e-12)
            model, _ = train(ds, config)
            w = model.flat_weights()
            fractions[algorithm] = float(np.mean(np.abs(w) < 1e-8))
        assert fractions["shared"] > fractions["class_wise"]

    def test_record_updates_history(self):
        ds = make_blobs(per_class=10, seed=14)
        config = TrainConfig(C=200.0, max_cg_iterations=3, cg_rel_tolerance=1e-12)
        _, trace = train(ds, config, record_updates=True)
        assert trace.update_history is not None
        assert len(trace.update_history) == len(trace.records)
        first = trace.update_history[0]
        assert first["initial_weights"].tolist() == [0.0, 0.0, 0.0]
        assert first["picks"].size >= 3
