"""Convolutional branch over the channel axis of a single EEG sample.

Shape chain for 64 channels:
[1,64,1] -> conv[1,1]d2 -> [1,64,2] -> pool[1,2] -> [1,32,2]
         -> conv[1,2]d4 -> [1,32,4] -> pool[1,2] -> [1,16,4]
         -> flatten 64 -> dense 120 (relu) -> dense 5 (softmax)

Width-2 convolutions use same-shape zero padding with the single pad
element on the right.  Arrays are (batch, width, depth); the leading
[1, ...] spatial row of the written shapes is implicit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn


class ConvLayer:
    """1-D convolution, stride 1, same-shape zero padding (right pad)."""

    def __init__(self, width, d_in, d_out, rng=None):
        if width not in (1, 2):
            raise ValueError("only filter widths 1 and 2 are supported")
        self.width, self.d_in, self.d_out = width, d_in, d_out
        if rng is None:
            self.W = np.zeros((width, d_in, d_out))
        else:
            limit = 1.0 / np.sqrt(width * d_in)
            self.W = rng.uniform(-limit, limit, size=(width, d_in, d_out))
        self.b = np.zeros(d_out)

    def forward(self, x):
        # x: (n, K, d_in) -> (n, K, d_out)
        if x.shape[-1] != self.d_in:
            raise nn.ShapeError(f"conv expects depth {self.d_in}, got {x.shape[-1]}")
        y = np.tensordot(x, self.W[0], axes=([2], [0]))
        if self.width == 2:
            shifted = np.zeros_like(x)
            shifted[:, :-1] = x[:, 1:]  # right zero pad
            y += np.tensordot(shifted, self.W[1], axes=([2], [0]))
        return y + self.b

    def backward(self, x, dout):
        dW = np.zeros_like(self.W)
        dW[0] = np.tensordot(x, dout, axes=([0, 1], [0, 1]))
        dx = np.tensordot(dout, self.W[0], axes=([2], [1]))
        if self.width == 2:
            shifted = np.zeros_like(x)
            shifted[:, :-1] = x[:, 1:]
            dW[1] = np.tensordot(shifted, dout, axes=([0, 1], [0, 1]))
            back = np.tensordot(dout, self.W[1], axes=([2], [1]))
            dx[:, 1:] += back[:, :-1]
        db = dout.sum(axis=(0, 1))
        return dx, dW, db


def conv1d_forward(x, layer):
    return layer.forward(x)


def maxpool(x):
    """Max over disjoint [1,2] windows along the width axis; depth unchanged."""
    n, K, d = x.shape
    if K % 2:
        raise nn.ShapeError(f"maxpool needs an even width, got {K}")
    pairs = x.reshape(n, K // 2, 2, d)
    return pairs.max(axis=2)


def maxpool_backward(x, dout):
    # gradient routed to the first maximal element of each window
    n, K, d = x.shape
    pairs = x.reshape(n, K // 2, 2, d)
    first_wins = pairs[:, :, 0, :] >= pairs[:, :, 1, :]
    dx = np.zeros_like(pairs)
    dx[:, :, 0, :] = np.where(first_wins, dout, 0.0)
    dx[:, :, 1, :] = np.where(first_wins, 0.0, dout)
    return dx.reshape(n, K, d)


@dataclass
class SpatialNetConfig:
    input_size: int = 64
    conv_depths: tuple = (2, 4)
    fc_size: int = 120
    n_classes: int = 5
    iterations: int = 2500
    batch_size: int = 7000
    learning_rate: float = 0.004
    l2: float = 0.001
    shape_chain: tuple = field(init=False)

    def __post_init__(self):
        K = self.input_size
        if K % 4:
            raise ValueError("input size must be divisible by 4")
        d1, d2 = self.conv_depths
        self.shape_chain = ((K, 1), (K, d1), (K // 2, d1), (K // 2, d2),
                            (K // 4, d2), (K // 4 * d2,), (self.fc_size,),
                            (self.n_classes,))


class SpatialNet:
    def __init__(self, config: SpatialNetConfig, seed=0):
        self.config = config
        rng = np.random.default_rng(seed)
        K = config.input_size
        d1, d2 = config.conv_depths
        self.conv1 = ConvLayer(1, 1, d1, rng)
        self.conv2 = ConvLayer(2, d1, d2, rng)
        self.fc = nn.DenseLayer(K // 4 * d2, config.fc_size, rng)
        self.out = nn.DenseLayer(config.fc_size, config.n_classes, rng)

    def params(self):
        return {"conv1.W": self.conv1.W, "conv1.b": self.conv1.b,
                "conv2.W": self.conv2.W, "conv2.b": self.conv2.b,
                "fc.W": self.fc.W, "fc.b": self.fc.b,
                "out.W": self.out.W, "out.b": self.out.b}

    def load_params(self, tensors):
        for name, arr in tensors.items():
            cur = self.params()[name]
            if cur.shape != arr.shape:
                raise nn.ShapeError(f"parameter {name} has shape {arr.shape}, "
                                    f"expected {cur.shape}")
            cur[...] = arr

    def _weight_matrices(self):
        return [self.conv1.W, self.conv2.W, self.fc.W, self.out.W]

    def forward(self, X, want_cache=False):
        """Returns (logits, probs, Xs[, cache]); Xs is the relu'd FC output."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        K = self.config.input_size
        if X.shape[1] != K:
            raise nn.ShapeError(f"expected {K} channels, got {X.shape[1]}")
        chain = self.config.shape_chain
        x0 = X[:, :, None]
        c1 = self.conv1.forward(x0)
        a1 = nn.relu(c1)
        p1 = maxpool(a1)
        c2 = self.conv2.forward(p1)
        a2 = nn.relu(c2)
        p2 = maxpool(a2)
        flat = p2.reshape(X.shape[0], -1)
        assert a1.shape[1:] == chain[1] and p1.shape[1:] == chain[2]
        assert a2.shape[1:] == chain[3] and p2.shape[1:] == chain[4]
        assert flat.shape[1:] == chain[5]
        z = self.fc.forward(flat)
        Xs = nn.relu(z)
        logits = self.out.forward(Xs)
        probs = nn.softmax(logits)
        if want_cache:
            return logits, probs, Xs, (x0, c1, a1, p1, c2, a2, p2, flat, z, Xs)
        return logits, probs, Xs

    WEIGHT_KEYS = ("conv1.W", "conv2.W", "fc.W", "out.W")

    def _grads(self, probs, Y, cache, coupled_l2=True):
        x0, c1, a1, p1, c2, a2, p2, flat, z, Xs = cache
        n = x0.shape[0]
        lam = self.config.l2 if coupled_l2 else 0.0
        dlogits = (probs - Y) / n
        dXs, dWo, dbo = self.out.backward(Xs, dlogits)
        dz = dXs * (z > 0)
        dflat, dWfc, dbfc = self.fc.backward(flat, dz)
        dp2 = dflat.reshape(p2.shape)
        da2 = maxpool_backward(a2, dp2)
        dc2 = da2 * (c2 > 0)
        dp1, dW2, db2 = self.conv2.backward(p1, dc2)
        da1 = maxpool_backward(a1, dp1)
        dc1 = da1 * (c1 > 0)
        _, dW1, db1 = self.conv1.backward(x0, dc1)
        g = {"conv1.W": dW1, "conv1.b": db1, "conv2.W": dW2, "conv2.b": db2,
             "fc.W": dWfc, "fc.b": dbfc, "out.W": dWo, "out.b": dbo}
        if lam:
            for name in self.WEIGHT_KEYS:
                g[name] = g[name] + 2.0 * lam * self.params()[name]
        return g

    def loss_and_grads(self, X, Y):
        _, probs, _, cache = self.forward(X, want_cache=True)
        value = nn.cross_entropy(probs, Y) + nn.l2_penalty(
            self._weight_matrices(), self.config.l2)
        return value, self._grads(probs, Y, cache)

    def train(self, X, y, seed=0, iterations=None, learning_rate=None):
        """Adam training; returns the per-iteration loss trace."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.shape[0] == 0:
            raise nn.TrainingError("empty training set")
        iterations = self.config.iterations if iterations is None else iterations
        lr = self.config.learning_rate if learning_rate is None else learning_rate
        Y = np.eye(self.config.n_classes)[y]
        bs = min(self.config.batch_size, X.shape[0])
        rng = np.random.default_rng(seed)
        # The L2 term is applied as decoupled decay on the weight matrices;
        # the reported loss still includes the penalty.
        opt = nn.Optimizer("adam", lr, weight_decay=2.0 * self.config.l2,
                           decay_keys=self.WEIGHT_KEYS)
        trace = []
        order = rng.permutation(X.shape[0])
        pos = 0
        for _ in range(iterations):
            if pos + bs > X.shape[0]:
                if bs < X.shape[0]:
                    order = rng.permutation(X.shape[0])
                pos = 0
            idx = order[pos:pos + bs]
            pos += bs
            _, probs, _, cache = self.forward(X[idx], want_cache=True)
            value = nn.cross_entropy(probs, Y[idx]) + nn.l2_penalty(
                self._weight_matrices(), self.config.l2)
            grads = self._grads(probs, Y[idx], cache, coupled_l2=False)
            opt.step(self.params(), grads)
            trace.append(value)
        return trace

    def extract(self, X):
        """Spatial features (fc_size per sample)."""
        return self.forward(X)[2]

    def predict_proba(self, X):
        return self.forward(X)[1]


def extract_spatial(sample, net):
    """120-dim spatial feature of a single sample."""
    return net.extract(np.atleast_2d(sample))[0]
