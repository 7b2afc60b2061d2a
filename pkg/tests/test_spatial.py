import numpy as np
import pytest

from neurotype import nn
from neurotype.spatial import (ConvLayer, SpatialNet, SpatialNetConfig,
                               extract_spatial, maxpool, maxpool_backward)


class TestConv:
    def test_width2_running_sum(self):
        # x=[1,2,3] with filter [1,1] and a right zero pad -> [3,5,3]
        layer = ConvLayer(2, 1, 1)
        layer.W[...] = 1.0
        x = np.array([1.0, 2.0, 3.0]).reshape(1, 3, 1)
        assert np.allclose(layer.forward(x)[0, :, 0], [3, 5, 3])

    def test_width1_identity(self):
        layer = ConvLayer(1, 1, 1)
        layer.W[...] = 1.0
        x = np.random.default_rng(0).normal(size=(2, 5, 1))
        assert np.allclose(layer.forward(x), x)

    def test_depth_mixing(self):
        layer = ConvLayer(1, 2, 1)
        layer.W[0, :, 0] = [2.0, -1.0]
        layer.b[...] = 0.5
        x = np.array([[[1.0, 3.0]]])  # 2*1 - 1*3 + 0.5 = -0.5
        assert np.allclose(layer.forward(x), [[[-0.5]]])

    def test_depth_mismatch(self):
        with pytest.raises(nn.ShapeError):
            ConvLayer(1, 2, 3).forward(np.zeros((1, 4, 3)))

    def test_invalid_width(self):
        with pytest.raises(ValueError):
            ConvLayer(3, 1, 1)


class TestPool:
    def test_hand_case(self):
        x = np.array([1.0, 4.0, 2.0, 2.0]).reshape(1, 4, 1)
        assert np.allclose(maxpool(x)[0, :, 0], [4, 2])

    def test_constant_idempotent(self):
        x = np.full((1, 8, 2), 3.7)
        assert np.allclose(maxpool(x), 3.7)

    def test_commutes_with_positive_scaling(self):
        x = np.random.default_rng(1).normal(size=(2, 6, 3))
        for alpha in (0.5, 2.0, 7.3):
            assert np.allclose(maxpool(alpha * x), alpha * maxpool(x))

    def test_odd_width_rejected(self):
        with pytest.raises(nn.ShapeError):
            maxpool(np.zeros((1, 5, 1)))

    def test_backward_routes_to_first_max_on_ties(self):
        x = np.full((1, 2, 1), 1.0)
        dout = np.ones((1, 1, 1))
        dx = maxpool_backward(x, dout)
        assert np.allclose(dx[0, :, 0], [1.0, 0.0])

    def test_backward_finite_difference(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(2, 4, 3))
        t = rng.normal(size=(2, 2, 3))
        pred = maxpool(x)
        dout = 2 * (pred - t) / pred.size
        grads = {"x": maxpool_backward(x, dout)}

        def loss_fn(p):
            return nn.mse(maxpool(x), t)

        assert nn.gradient_check(loss_fn, {"x": x}, grads) < 1e-5


class TestConfig:
    def test_shape_chain_for_64_channels(self):
        cfg = SpatialNetConfig(input_size=64)
        assert cfg.shape_chain == ((64, 1), (64, 2), (32, 2), (32, 4),
                                   (16, 4), (64,), (120,), (5,))

    def test_input_not_divisible_by_four(self):
        with pytest.raises(ValueError):
            SpatialNetConfig(input_size=30)


class TestForward:
    def test_shapes(self):
        net = SpatialNet(SpatialNetConfig(input_size=64), seed=0)
        logits, probs, Xs = net.forward(np.random.default_rng(0).normal(size=(3, 64)))
        assert logits.shape == (3, 5)
        assert Xs.shape == (3, 120)
        assert np.allclose(probs.sum(axis=1), 1.0)

    def test_feature_nonnegative(self):
        net = SpatialNet(SpatialNetConfig(input_size=8, fc_size=10), seed=1)
        Xs = net.extract(np.random.default_rng(1).normal(size=(4, 8)))
        assert np.all(Xs >= 0)

    def test_channel_mismatch(self):
        net = SpatialNet(SpatialNetConfig(input_size=8))
        with pytest.raises(nn.ShapeError):
            net.forward(np.zeros((1, 9)))

    def test_stateless_inference(self):
        net = SpatialNet(SpatialNetConfig(input_size=8, fc_size=10), seed=2)
        x = np.random.default_rng(3).normal(size=8)
        batch = np.stack([x, x])
        _, probs, _ = net.forward(batch)
        assert np.allclose(probs[0], probs[1])
        assert np.allclose(extract_spatial(x, net), net.extract(batch)[0])


class TestGradients:
    def test_full_stack_finite_difference(self):
        # conv -> pool -> conv -> pool -> fc -> softmax on an 8-channel input
        cfg = SpatialNetConfig(input_size=8, fc_size=6, l2=0.0)
        net = SpatialNet(cfg, seed=4)
        rng = np.random.default_rng(5)
        # zero biases leave some relu pre-activations exactly on the kink,
        # where finite differences are one-sided; nudge them off it
        for name in ("conv1.b", "conv2.b", "fc.b", "out.b"):
            net.params()[name][...] = 0.1 * rng.normal(size=net.params()[name].shape)
        X = rng.normal(size=(3, 8))
        Y = np.eye(5)[[0, 2, 4]]
        _, grads = net.loss_and_grads(X, Y)

        def loss_fn(_p):
            _, probs, _ = net.forward(X)
            return nn.cross_entropy(probs, Y)

        assert nn.gradient_check(loss_fn, net.params(), grads) < 1e-4

    def test_l2_gradients(self):
        cfg = SpatialNetConfig(input_size=8, fc_size=6, l2=0.01)
        net = SpatialNet(cfg, seed=6)
        X = np.random.default_rng(7).normal(size=(3, 8))
        Y = np.eye(5)[[1, 3, 0]]
        _, grads = net.loss_and_grads(X, Y)

        def loss_fn(_p):
            _, probs, _ = net.forward(X)
            return nn.cross_entropy(probs, Y) + nn.l2_penalty(
                net._weight_matrices(), cfg.l2)

        assert nn.gradient_check(loss_fn, net.params(), grads) < 1e-4


def separable_data(n=200, k=8, seed=0):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 5, size=n)
    centers = rng.normal(size=(5, k)) * 4.0
    return centers[labels] + 0.3 * rng.standard_normal((n, k)), labels


class TestTraining:
    def test_separable_accuracy(self):
        X, y = separable_data(seed=31)
        cfg = SpatialNetConfig(input_size=8, fc_size=16, iterations=300,
                               batch_size=200, learning_rate=0.01, l2=0.0)
        net = SpatialNet(cfg, seed=31)
        trace = net.train(X, y, seed=31)
        assert len(trace) == 300
        acc = np.mean(np.argmax(net.predict_proba(X), axis=1) == y)
        assert acc >= 0.95

    def test_lr_zero_noop(self):
        X, y = separable_data(n=30, seed=32)
        net = SpatialNet(SpatialNetConfig(input_size=8, fc_size=6, iterations=5),
                         seed=32)
        before = {k: v.copy() for k, v in net.params().items()}
        trace = net.train(X, y, seed=0, learning_rate=0.0)
        for k, v in net.params().items():
            assert np.array_equal(v, before[k])
        assert np.allclose(trace, trace[0])

    def test_seed_determinism(self):
        X, y = separable_data(n=60, seed=33)
        cfg = SpatialNetConfig(input_size=8, fc_size=6, iterations=10)
        nets = []
        for _ in range(2):
            net = SpatialNet(cfg, seed=9)
            net.train(X, y, seed=9)
            nets.append(net)
        for k in nets[0].params():
            assert np.array_equal(nets[0].params()[k], nets[1].params()[k])

    def test_empty_training_set(self):
        net = SpatialNet(SpatialNetConfig(input_size=8))
        with pytest.raises(nn.TrainingError):
            net.train(np.zeros((0, 8)), np.zeros(0, dtype=int))
