"""Recurrent branch: dense stack plus two LSTM layers over the sample axis.

The network treats the order of samples inside a batch as the time axis:
LSTM state chains from one batch entry to the next and is reset at every
batch boundary and at every inference call.  The 64-dim hidden output of
the second LSTM layer is the temporal feature vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn


@dataclass
class LstmCellState:
    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, size, n=1):
        return cls(np.zeros((n, size)), np.zeros((n, size)))


class LstmLayer:
    """Four-gate LSTM cell; gates packed along the last axis as (i, f, o, m)."""

    def __init__(self, size, rng=None):
        self.size = int(size)
        if rng is None:
            self.Wx = np.zeros((size, 4 * size))
            self.Wh = np.zeros((size, 4 * size))
        else:
            limit = 1.0 / np.sqrt(size)
            self.Wx = rng.uniform(-limit, limit, size=(size, 4 * size))
            self.Wh = rng.uniform(-limit, limit, size=(size, 4 * size))
        self.b = np.zeros(4 * size)


def lstm_cell_forward(x, prev, layer):
    """One LSTM step.  x is (n, size) or (size,); returns the next state."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != layer.size:
        raise nn.ShapeError(f"lstm cell expects input extent {layer.size}, got {x.shape[1]}")
    H = layer.size
    z = x @ layer.Wx + prev.h @ layer.Wh + layer.b
    gates = nn.sigmoid(z[:, : 3 * H])
    fi, ff, fo = gates[:, :H], gates[:, H:2 * H], gates[:, 2 * H:]
    fm = np.tanh(z[:, 3 * H:])
    c = ff * prev.c + fi * fm
    h = fo * np.tanh(c)
    return LstmCellState(h, c)


def _lstm_forward_seq(x, layer):
    """Run the cell across the sample axis of x (n, H), state zeroed at start.

    Returns the hidden outputs (n, H) and a cache for backprop.
    """
    n, H = x.shape[0], layer.size
    xp = x @ layer.Wx + layer.b
    Hs = np.zeros((n, H))
    Cs = np.zeros((n, H))
    Hprev = np.zeros((n, H))
    Cprev = np.zeros((n, H))
    Gi = np.zeros((n, H))
    Gf = np.zeros((n, H))
    Go = np.zeros((n, H))
    Gm = np.zeros((n, H))
    h = np.zeros((1, H))
    c = np.zeros((1, H))
    for t in range(n):
        z = xp[t:t + 1] + h @ layer.Wh
        s = nn.sigmoid(z[:, : 3 * H])
        m = np.tanh(z[:, 3 * H:])
        Hprev[t] = h
        Cprev[t] = c
        Gi[t], Gf[t], Go[t], Gm[t] = s[:, :H], s[:, H:2 * H], s[:, 2 * H:], m
        c = s[:, H:2 * H] * c + s[:, :H] * m
        h = s[:, 2 * H:] * np.tanh(c)
        Hs[t] = h
        Cs[t] = c
    cache = (x, Hprev, Cprev, Gi, Gf, Go, Gm, Cs)
    return Hs, cache


def _lstm_backward_seq(dH, layer, cache):
    """BPTT through one LSTM layer.  Returns (dx, dWx, dWh, db)."""
    x, Hprev, Cprev, Gi, Gf, Go, Gm, Cs = cache
    n, H = x.shape[0], layer.size
    tanhC = np.tanh(Cs)
    dZ = np.zeros((n, 4 * H))
    WhT = layer.Wh.T
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    for t in range(n - 1, -1, -1):
        dh = dH[t] + dh_next
        tc = tanhC[t]
        do = dh * tc
        dc = dh * Go[t] * (1.0 - tc * tc) + dc_next
        di = dc * Gm[t]
        df = dc * Cprev[t]
        dm = dc * Gi[t]
        dc_next = dc * Gf[t]
        dz = dZ[t]
        dz[:H] = di * Gi[t] * (1.0 - Gi[t])
        dz[H:2 * H] = df * Gf[t] * (1.0 - Gf[t])
        dz[2 * H:3 * H] = do * Go[t] * (1.0 - Go[t])
        dz[3 * H:] = dm * (1.0 - Gm[t] * Gm[t])
        dh_next = dz @ WhT
    dWx = x.T @ dZ
    dWh = Hprev.T @ dZ
    db = dZ.sum(axis=0)
    dx = dZ @ layer.Wx.T
    return dx, dWx, dWh, db


@dataclass
class TemporalNetConfig:
    input_size: int = 64
    hidden_size: int = 64
    n_classes: int = 5
    iterations: int = 2500
    batch_size: int = 7000
    learning_rate: float = 0.005
    l2: float = 0.004


class TemporalNet:
    """input -> 3 tanh dense layers -> 2 LSTM layers -> dense softmax output."""

    def __init__(self, config: TemporalNetConfig, seed=0):
        self.config = config
        rng = np.random.default_rng(seed)
        K, H, C = config.input_size, config.hidden_size, config.n_classes
        self.d1 = nn.DenseLayer(K, H, rng)
        self.d2 = nn.DenseLayer(H, H, rng)
        self.d3 = nn.DenseLayer(H, H, rng)
        self.lstm1 = LstmLayer(H, rng)
        self.lstm2 = LstmLayer(H, rng)
        self.out = nn.DenseLayer(H, C, rng)

    # -- parameter plumbing ------------------------------------------------

    def params(self):
        p = {}
        for name, layer in (("d1", self.d1), ("d2", self.d2), ("d3", self.d3),
                            ("out", self.out)):
            p[f"{name}.W"] = layer.W
            p[f"{name}.b"] = layer.b
        for name, layer in (("lstm1", self.lstm1), ("lstm2", self.lstm2)):
            p[f"{name}.Wx"] = layer.Wx
            p[f"{name}.Wh"] = layer.Wh
            p[f"{name}.b"] = layer.b
        return p

    def load_params(self, tensors):
        for name, arr in tensors.items():
            cur = self.params()[name]
            if cur.shape != arr.shape:
                raise nn.ShapeError(f"parameter {name} has shape {arr.shape}, "
                                    f"expected {cur.shape}")
            cur[...] = arr

    def _weight_matrices(self):
        return [self.d1.W, self.d2.W, self.d3.W, self.out.W,
                self.lstm1.Wx, self.lstm1.Wh, self.lstm2.Wx, self.lstm2.Wh]

    # -- forward / backward ------------------------------------------------

    def forward(self, X, want_cache=False):
        """Returns (logits, probs, Xt[, cache]).  State zeroed at entry 0."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.config.input_size:
            raise nn.ShapeError(
                f"expected {self.config.input_size} channels, got {X.shape[1]}")
        z1 = self.d1.forward(X); a1 = np.tanh(z1)
        z2 = self.d2.forward(a1); a2 = np.tanh(z2)
        z3 = self.d3.forward(a2); a3 = np.tanh(z3)
        h1, cache1 = _lstm_forward_seq(a3, self.lstm1)
        h2, cache2 = _lstm_forward_seq(h1, self.lstm2)
        logits = self.out.forward(h2)
        probs = nn.softmax(logits)
        if want_cache:
            return logits, probs, h2, (X, a1, a2, a3, cache1, cache2, h2)
        return logits, probs, h2

    WEIGHT_KEYS = ("d1.W", "d2.W", "d3.W", "out.W",
                   "lstm1.Wx", "lstm1.Wh", "lstm2.Wx", "lstm2.Wh")

    def _grads(self, probs, Y, cache, coupled_l2=True):
        X, a1, a2, a3, cache1, cache2, h2 = cache
        n = X.shape[0]
        lam = self.config.l2 if coupled_l2 else 0.0
        dlogits = (probs - Y) / n
        dh2, dWo, dbo = self.out.backward(h2, dlogits)
        dh1, dWx2, dWh2, db2 = _lstm_backward_seq(dh2, self.lstm2, cache2)
        da3, dWx1, dWh1, db1 = _lstm_backward_seq(dh1, self.lstm1, cache1)
        dz3 = da3 * (1.0 - a3 * a3)
        da2, dW3, db3 = self.d3.backward(a2, dz3)
        dz2 = da2 * (1.0 - a2 * a2)
        da1, dW2, db2d = self.d2.backward(a1, dz2)
        dz1 = da1 * (1.0 - a1 * a1)
        _, dW1, db1d = self.d1.backward(X, dz1)
        g = {"d1.W": dW1, "d1.b": db1d, "d2.W": dW2, "d2.b": db2d,
             "d3.W": dW3, "d3.b": db3, "out.W": dWo, "out.b": dbo,
             "lstm1.Wx": dWx1, "lstm1.Wh": dWh1, "lstm1.b": db1,
             "lstm2.Wx": dWx2, "lstm2.Wh": dWh2, "lstm2.b": db2}
        if lam:
            for name in self.WEIGHT_KEYS:
                g[name] = g[name] + 2.0 * lam * self.params()[name]
        return g

    def loss_and_grads(self, X, Y):
        _, probs, _, cache = self.forward(X, want_cache=True)
        value = nn.cross_entropy(probs, Y) + nn.l2_penalty(
            self._weight_matrices(), self.config.l2)
        return value, self._grads(probs, Y, cache)

    # -- training ----------------------------------------------------------

    def train(self, X, y, seed=0, iterations=None, learning_rate=None):
        """Adam training; returns the per-iteration loss trace."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.shape[0] == 0:
            raise nn.TrainingError("empty training set")
        iterations = self.config.iterations if iterations is None else iterations
        lr = self.config.learning_rate if learning_rate is None else learning_rate
        C = self.config.n_classes
        Y = np.eye(C)[y]
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
                # keep a stable order when one batch covers the whole set
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
        """Temporal features with fresh zero state per sample (single LSTM step)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.config.input_size:
            raise nn.ShapeError(
                f"expected {self.config.input_size} channels, got {X.shape[1]}")
        a = np.tanh(self.d3.forward(np.tanh(self.d2.forward(np.tanh(self.d1.forward(X))))))
        H = self.config.hidden_size
        state = LstmCellState.zeros(H, n=X.shape[0])
        s1 = lstm_cell_forward(a, state, self.lstm1)
        s2 = lstm_cell_forward(s1.h, LstmCellState.zeros(H, n=X.shape[0]), self.lstm2)
        return s2.h

    def predict_proba(self, X):
        """Class probabilities with fresh zero state per sample."""
        Xt = self.extract(X)
        return nn.softmax(self.out.forward(Xt))


def extract_temporal(sample, net):
    """64-dim temporal feature of a single sample."""
    return net.extract(np.atleast_2d(sample))[0]
