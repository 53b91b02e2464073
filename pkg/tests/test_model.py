import numpy as np
import pytest

from kscn import (Dataset, KernelConfig, KscnModel, SchemaError,
                  SupervisoryConfig, gram_build, load_model, predict,
                  save_model, train_kscn)
from kscn.basis import eval_nodes
from kscn.model import DimensionMismatch, EmptyValidation, grow_kernel_model


KC = KernelConfig(c=4.0, tau=1e-3)


def _train(exp, seed=0, kc=KC, sup=None):
    sup = sup or SupervisoryConfig(l_max=15)
    return train_kscn(exp.data, exp.split, sup, kc, rng=np.random.default_rng(seed))


class TestTrainKscn:
    def test_zero_targets_stop_with_zero_nodes(self, small_experiment):
        exp = small_experiment
        d0 = Dataset(X=exp.data.X, Y=np.zeros_like(exp.data.Y),
                     norm_stats=exp.data.norm_stats)
        model, trace = train_kscn(d0, exp.split, SupervisoryConfig(), KC)
        assert len(model.nodes) == 0
        assert trace.stopped_by == "zero_residual"
        np.testing.assert_allclose(
            predict(model, exp.raw.X[exp.split.test_idx]), 0.0, atol=1e-12)

    def test_trace_structure(self, small_experiment):
        model, trace = _train(small_experiment)
        assert trace.baseline.l_index == 0 and trace.baseline.scores is None
        assert [rec.l_index for rec in trace.steps] == list(range(1, len(trace.steps) + 1))
        assert len(model.nodes) == trace.best_step <= len(trace.steps)

    def test_accepted_scores_positive(self, small_experiment):
        _, trace = _train(small_experiment, seed=2)
        for rec in trace.steps:
            assert np.all(rec.scores > 0.0)

    def test_patience_bounded_and_monotone(self, small_experiment):
        sup = SupervisoryConfig(patience=4, l_max=40)
        _, trace = _train(small_experiment, seed=3, sup=sup)
        ps = [rec.patience for rec in trace.records]
        assert all(b >= a for a, b in zip(ps, ps[1:]))
        assert max(ps) <= 4
        assert len(trace.steps) <= 40

    def test_determinism_byte_for_byte(self, small_experiment):
        m1, t1 = _train(small_experiment, seed=11)
        m2, t2 = _train(small_experiment, seed=11)
        assert t1.val_curve() == t2.val_curve()
        assert [r.train_residual_norm for r in t1.records] == \
               [r.train_residual_norm for r in t2.records]
        for a, b in zip(m1.nodes, m2.nodes):
            assert np.array_equal(a.w, b.w) and a.b == b.b
        assert np.array_equal(m1.alpha, m2.alpha)

    def test_returned_model_is_best_snapshot(self, small_experiment):
        _, trace = _train(small_experiment, seed=4)
        curve = trace.val_curve()
        assert curve[trace.best_step] == min(curve)

    def test_empty_validation_rejected(self, small_experiment):
        exp = small_experiment
        from kscn import Split
        bad = Split(train_idx=exp.split.train_idx,
                    val_idx=np.array([], dtype=np.intp),
                    test_idx=exp.split.test_idx)
        with pytest.raises(EmptyValidation):
            train_kscn(exp.data, bad, SupervisoryConfig(), KC)

    def test_monotone_training_residual_at_tiny_tau(self, small_experiment):
        exp = small_experiment
        kc = KernelConfig(c=4.0, tau=1e-10)
        _, trace = train_kscn(exp.data, exp.split, SupervisoryConfig(l_max=12),
                              kc, rng=np.random.default_rng(6))
        norms = [rec.train_residual_norm for rec in trace.records]
        assert all(b <= a + 1e-8 for a, b in zip(norms, norms[1:]))

    def test_regularized_objective_non_increasing(self, small_experiment):
        # Eq-7-style objective: 0.5 * ||Y - K a||^2 + 0.5 * tau * tr(a' K a)
        exp = small_experiment
        Xtr = exp.data.X[exp.split.train_idx]
        Ytr = exp.data.Y[exp.split.train_idx]
        Xv = exp.data.X[exp.split.val_idx]
        Yv = exp.data.Y[exp.split.val_idx]
        res = grow_kernel_model(Xtr, Ytr, Xv, Yv, SupervisoryConfig(l_max=12),
                                KC, np.random.default_rng(8), patience=None,
                                collect_alphas=True)
        H = np.empty((Xtr.shape[0], 0))
        vals = []
        for step, alpha in enumerate(res.alphas):
            H_step = eval_nodes(res.nodes[:step], Xtr)
            K = gram_build(H_step, Xtr, KC.c).K
            data_term = 0.5 * np.sum((Ytr - K @ alpha) ** 2)
            penalty = 0.5 * KC.tau * np.sum(alpha * (K @ alpha))
            vals.append(data_term + penalty)
        assert all(b <= a + 1e-8 for a, b in zip(vals, vals[1:]))


class TestPredict:
    def test_training_rows_reproduce_fitted(self, small_experiment):
        exp = small_experiment
        model, _ = _train(exp, seed=1)
        H = eval_nodes(model.nodes, model.x_train)
        K = gram_build(H, model.x_train, model.kernel.c).K
        fitted = K @ model.alpha
        raw_train = exp.raw.X[exp.split.train_idx]
        np.testing.assert_allclose(predict(model, raw_train), fitted, atol=1e-8)

    def test_duplicated_training_row(self, small_experiment):
        exp = small_experiment
        model, _ = _train(exp, seed=1)
        raw_train = exp.raw.X[exp.split.train_idx]
        single = predict(model, raw_train[5:6])
        full = predict(model, raw_train)
        np.testing.assert_allclose(single[0], full[5], atol=1e-8)

    def test_dimension_mismatch(self, small_experiment):
        model, _ = _train(small_experiment)
        with pytest.raises(DimensionMismatch):
            predict(model, np.zeros((3, model.m + 1)))


class TestPersistence:
    def test_roundtrip_prediction_bitlevel(self, small_experiment, tmp_path):
        exp = small_experiment
        model, _ = _train(exp, seed=7)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        X = exp.raw.X[exp.split.test_idx]
        delta = np.abs(predict(model, X) - predict(back, X))
        assert delta.max() <= 1e-12

    def test_roundtrip_exact_fields(self, small_experiment, tmp_path):
        model, _ = _train(small_experiment, seed=7)
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert np.array_equal(back.alpha, model.alpha)
        assert np.array_equal(back.x_train, model.x_train)
        assert back.kernel == model.kernel
        assert len(back.nodes) == len(model.nodes)
        for a, b in zip(model.nodes, back.nodes):
            assert np.array_equal(a.w, b.w) and a.b == b.b

    def test_truncated_file(self, small_experiment, tmp_path):
        model, _ = _train(small_experiment)
        path = tmp_path / "model.json"
        save_model(model, path)
        path.write_text(path.read_text()[:40])
        with pytest.raises(SchemaError):
            load_model(path)

    def test_missing_field_names_path(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"type": "kscn", "m": 1, "M": 1, "kernel": {"c": 1.0}}')
        with pytest.raises(SchemaError, match="tau"):
            load_model(path)

    def test_zero_node_model_roundtrip(self, small_experiment, tmp_path):
        exp = small_experiment
        d0 = Dataset(X=exp.data.X, Y=np.zeros_like(exp.data.Y),
                     norm_stats=exp.data.norm_stats)
        model, _ = train_kscn(d0, exp.split, SupervisoryConfig(), KC)
        assert len(model.nodes) == 0
        path = tmp_path / "zero.json"
        save_model(model, path)
        back = load_model(path)
        X = exp.raw.X[exp.split.test_idx][:5]
        np.testing.assert_allclose(predict(back, X), predict(model, X), atol=1e-12)

    def test_io_error_on_missing_file(self, tmp_path):
        from kscn import IoError
        with pytest.raises(IoError):
            load_model(tmp_path / "nope.json")
