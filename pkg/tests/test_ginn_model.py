import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse_gi import (
    DivergenceError,
    GILayer,
    GILayerConfig,
    GILayerParams,
    GinnModel,
    IntegrityError,
    ShapeError,
    TrainConfig,
    from_edge_list,
    load_checkpoint,
    model_forward,
    save_checkpoint,
    sgd_step,
    train_mse,
)
from sparse_gi.generate import erdos_renyi_edges
from sparse_gi.ginn_model import checkpoint_document, model_backward, model_from_document
from sparse_gi.harness import GRAD_RTOL


def unit(adj, K=1, F=1, **cfg):
    layer = GILayer.build(adj, GILayerConfig(num_filters=F, **cfg), K)
    return layer.with_params(GILayerParams(np.ones((K, F, adj.n_rows)), np.zeros((adj.n_cols, F))))


def teacher_student(seed, n=12, M=64):
    rng = np.random.default_rng(seed)
    edges = erdos_renyi_edges(n, 0.3, rng, symmetric=True)
    adj = from_edge_list(edges, n_nodes=n)
    cfg = GILayerConfig(activation="identity")
    teacher = GILayer.build(adj, cfg, 1, init_seed=1000 + seed)
    teacher = teacher.with_params(GILayerParams(teacher.params.weights, rng.normal(0, 0.5, size=(n, 1))))
    X = rng.normal(size=(M, n, 1))
    return GinnModel([GILayer.build(adj, cfg, 1, init_seed=seed)]), X, teacher.forward(X)


class TestComposition:
    def test_single_layer(self, p3, rng):
        layer = GILayer.build(p3, GILayerConfig(num_filters=2, activation="tanh"), 2, init_seed=3)
        X = rng.normal(size=(4, 3, 2))
        np.testing.assert_array_equal(model_forward(GinnModel([layer]), X), layer.forward(X))

    def test_two_unit_layers(self, p3):
        model = GinnModel([unit(p3), unit(p3)])
        np.testing.assert_array_equal(model_forward(model, np.array([[[1.0], [2.0], [3.0]]]))[0, :, 0], [9, 14, 11])

    def test_batch_axis_preserved(self, p3, rng):
        model = GinnModel([unit(p3, F=3), unit(p3, K=3, pool="max")])
        assert model_forward(model, rng.normal(size=(7, 3, 1))).shape == (7, 3, 1)

    def test_mismatch_rejected(self, p3, p3_sub):
        with pytest.raises(ShapeError, match="layer 0"):
            GinnModel([unit(p3, F=2), unit(p3)])
        with pytest.raises(ShapeError):
            GinnModel([unit(p3_sub), unit(p3)])

    def test_forward_reports_layer(self, p3):
        with pytest.raises(ShapeError, match="layer 0"):
            model_forward(GinnModel([unit(p3)]), np.ones((1, 4, 1)))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 3), st.booleans()), min_size=2, max_size=4),
           st.booleans())
    def test_chain_validation(self, chain, break_chain):
        # chain entries: (node-subset size, filters, pooled)
        edges = [(i, j) for i in range(4) for j in range(4) if i != j]
        layers, K, sizes = [], 1, [3] + [s for s, _, _ in chain]
        for t, (n_out, F, pooled) in enumerate(chain):
            adj = from_edge_list(edges, range(sizes[t]), range(n_out), n_nodes=4)
            layer = GILayer.build(adj, GILayerConfig(num_filters=F, pool="sum" if pooled else None), K)
            layers.append(layer)
            K = layer.out_features
        if break_chain:
            last = layers[-1]
            bad_K = last.num_features + 1
            layers[-1] = GILayer.build(last.adjacency, last.config, bad_K)
            with pytest.raises(ShapeError):
                GinnModel(layers)
        else:
            assert GinnModel(layers).shape_chain()[-1] == (layers[-1].n_out, layers[-1].out_features)


class TestBackprop:
    def test_two_layer_gradient_finite_difference(self, p3, rng):
        a = GILayer.build(p3, GILayerConfig(num_filters=2, activation="tanh"), 1, init_seed=1)
        b = GILayer.build(p3, GILayerConfig(num_filters=2, activation="sigmoid", pool="mean"), 2, init_seed=2)
        model = GinnModel([a, b])
        X = rng.normal(size=(3, 3, 1))
        y = model_forward(model, X)
        grads, gx = model_backward(model, X, y)
        h = 1e-5

        def loss(m, x):
            return 0.5 * float(np.sum(model_forward(m, x) ** 2))

        W = a.params.weights
        for idx in np.ndindex(W.shape):
            w = W.copy(); w[idx] += h
            mp = GinnModel([a.with_params(GILayerParams(w, a.params.bias)), b])
            w[idx] -= 2 * h
            mm = GinnModel([a.with_params(GILayerParams(w, a.params.bias)), b])
            fd = (loss(mp, X) - loss(mm, X)) / (2 * h)
            assert abs(grads[0][0][idx] - fd) <= GRAD_RTOL * max(abs(fd), 1e-3)
        for idx in np.ndindex(X.shape):
            x = X.copy(); x[idx] += h
            lp = loss(model, x)
            x[idx] -= 2 * h
            fd = (lp - loss(model, x)) / (2 * h)
            assert abs(gx[idx] - fd) <= GRAD_RTOL * max(abs(fd), 1e-3)


class TestSGD:
    def test_zero_gradient(self):
        p = GILayerParams(np.ones((1, 1, 2)), np.ones((2, 1)))
        q = sgd_step(p, (np.zeros((1, 1, 2)), np.zeros((2, 1))), 0.3)
        np.testing.assert_array_equal(q.weights, p.weights)
        np.testing.assert_array_equal(q.bias, p.bias)

    def test_arithmetic(self):
        p = GILayerParams(np.ones((1, 1, 1)), np.ones((1, 1)))
        g = (2 * np.ones((1, 1, 1)), 2 * np.ones((1, 1)))
        q = sgd_step(p, g, 0.5)
        assert q.weights.item() == 0.0 and q.bias.item() == 0.0

    def test_twice(self):
        p = GILayerParams(np.full((1, 1, 1), 3.0), np.zeros((1, 1)))
        g = (np.full((1, 1, 1), 0.25), np.ones((1, 1)))
        q = sgd_step(sgd_step(p, g, 2.0), g, 2.0)
        assert q.weights.item() == 3.0 - 2 * 2.0 * 0.25
        assert q.bias.item() == -4.0

    def test_shape_mismatch(self):
        p = GILayerParams(np.ones((1, 1, 2)), np.ones((2, 1)))
        with pytest.raises(ShapeError):
            sgd_step(p, (np.zeros((1, 1, 3)), np.zeros((2, 1))), 0.1)


class TestTraining:
    def test_teacher_student_converges(self):
        model, X, Y = teacher_student(3)
        history = train_mse(model, X, Y, TrainConfig(learning_rate=1.0, epochs=500))
        assert 2 * history[-1] < 1e-3

    def test_zero_learning_rate(self):
        model, X, Y = teacher_student(0)
        history = train_mse(model, X, Y, TrainConfig(learning_rate=0.0, epochs=10))
        assert len(set(history)) == 1

    def test_monotone_for_small_lr(self, p3, rng):
        model = GinnModel([GILayer.build(p3, GILayerConfig(), 1, init_seed=4)])
        X = rng.normal(size=(1, 3, 1))
        Y = rng.normal(size=(1, 3, 1))
        history = train_mse(model, X, Y, TrainConfig(learning_rate=1e-3, epochs=200))
        assert all(b <= a for a, b in zip(history, history[1:]))

    def test_deterministic_with_minibatches(self):
        runs = []
        for _ in range(2):
            model, X, Y = teacher_student(5)
            runs.append(train_mse(model, X, Y, TrainConfig(learning_rate=0.5, epochs=20, batch_size=16, seed=8)))
        assert runs[0] == runs[1]

    def test_divergence(self):
        model, X, Y = teacher_student(1)
        with pytest.raises(DivergenceError) as info:
            train_mse(model, X, Y, TrainConfig(learning_rate=50.0, epochs=500))
        assert info.value.epoch > 0

    def test_nonlinear_subgraph_teacher(self):
        rng = np.random.default_rng(0)
        n = 15
        edges = erdos_renyi_edges(n, 0.3, rng)
        adj = from_edge_list(edges, sorted(rng.choice(n, 10, replace=False)),
                             sorted(rng.choice(n, 8, replace=False)), n_nodes=n)
        cfg = GILayerConfig(activation="tanh", num_filters=2)
        X = rng.normal(size=(64, 10, 2))
        Y = GILayer.build(adj, cfg, 2, init_seed=99).forward(X)
        model = GinnModel([GILayer.build(adj, cfg, 2, init_seed=0)])
        history = train_mse(model, X, Y, TrainConfig(learning_rate=3.0, epochs=500))
        assert 2 * history[-1] < 1e-3

    def test_shape_checks(self, p3):
        model = GinnModel([unit(p3)])
        with pytest.raises(ShapeError):
            train_mse(model, np.ones((2, 3, 1)), np.ones((2, 2, 1)), TrainConfig())
        with pytest.raises(ShapeError):
            train_mse(model, np.ones((0, 3, 1)), np.ones((0, 3, 1)), TrainConfig())


class TestCheckpoint:
    def _model(self, p3_sub, p3):
        a = GILayer.build(p3, GILayerConfig(num_filters=2, activation="relu", selfloop_value=0.5), 1, 1)
        b = GILayer.build(
            from_edge_list([(0, 1), (1, 2), (2, 0)], None, [1, 2], n_nodes=3),
            GILayerConfig(num_filters=2, pool="max"), 2, 2,
        )
        return GinnModel([a, b])

    def test_round_trip_bitwise(self, tmp_path, p3_sub, p3, rng):
        model = self._model(p3_sub, p3)
        path = tmp_path / "ckpt.json"
        save_checkpoint(model, path)
        restored = load_checkpoint(path)
        X = rng.normal(size=(6, 3, 1))
        assert model_forward(restored, X).tobytes() == model_forward(model, X).tobytes()
        assert restored.layers[1].adjacency == model.layers[1].adjacency

    def test_byte_stable(self, p3_sub, p3):
        model = self._model(p3_sub, p3)
        text = checkpoint_document(model)
        assert checkpoint_document(model_from_document(text)) == text

    def test_flat_parameter_order(self, p3_sub, p3):
        import json

        model = self._model(p3_sub, p3)
        rec = json.loads(checkpoint_document(model))["layers"][0]
        W = model.layers[0].params.weights
        assert rec["weights"] == [W[k, l, i] for k in range(W.shape[0]) for l in range(W.shape[1])
                                  for i in range(W.shape[2])]

    @pytest.mark.parametrize("corruption", [
        lambda t: t.replace('"weights": [', '"weights": [1.5, ', 1),
        lambda t: t[: len(t) // 2],
        lambda t: t.replace("sparse-gi-checkpoint", "other-format"),
    ])
    def test_corruption_detected(self, p3_sub, p3, corruption):
        text = checkpoint_document(self._model(p3_sub, p3))
        with pytest.raises(IntegrityError):
            model_from_document(corruption(text))
