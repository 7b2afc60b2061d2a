"""Minimal dense neural-network substrate shared by all learned components.

Everything here operates on plain numpy arrays.  Layers cache nothing;
forward/backward helpers return whatever the caller needs to chain
gradients, which keeps the branch networks explicit and easy to check
against finite differences.
"""

from __future__ import annotations

import struct

import numpy as np


class ShapeError(ValueError):
    """Raised when tensor extents do not match a layer contract."""


class TrainingError(RuntimeError):
    """Raised when training goes numerically wrong (e.g. NaN gradients)."""


# ---------------------------------------------------------------------------
# activations


def sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh(x):
    return np.tanh(x)


def relu(x):
    return np.maximum(x, 0.0)


def softmax(x, axis=-1):
    # max-subtraction keeps exp in range; result rows sum to 1
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


_ACTIVATIONS = {"sigmoid": sigmoid, "tanh": tanh, "relu": relu, "softmax": softmax}


def activation(kind, x):
    """Apply one of the supported activations by name."""
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None
    return fn(np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# layers


class DenseLayer:
    """Affine layer y = x @ W + b with W[in, out]."""

    def __init__(self, n_in, n_out, rng=None):
        self.n_in = int(n_in)
        self.n_out = int(n_out)
        if rng is None:
            self.W = np.zeros((n_in, n_out))
        else:
            limit = 1.0 / np.sqrt(n_in)
            self.W = rng.uniform(-limit, limit, size=(n_in, n_out))
        self.b = np.zeros(n_out)

    def forward(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_in:
            raise ShapeError(
                f"dense layer expects input extent {self.n_in}, got {x.shape[-1]}"
            )
        return x @ self.W + self.b

    def backward(self, x, dout):
        """Gradients for a forward pass: returns (dx, dW, db)."""
        dW = x.T @ dout
        db = dout.sum(axis=0) if dout.ndim > 1 else dout
        dx = dout @ self.W.T
        return dx, dW, db


def dense_forward(x, layer):
    return layer.forward(x)


# ---------------------------------------------------------------------------
# losses

_EPS = 1e-12


class LossSpec:
    def __init__(self, kind, l2=0.0):
        if kind not in ("cross-entropy", "mse"):
            raise ValueError(f"unknown loss kind {kind!r}")
        if l2 < 0:
            raise ValueError("l2 coefficient must be >= 0")
        self.kind = kind
        self.l2 = float(l2)


def cross_entropy(pred, target):
    """-sum(target * log(pred)) averaged over rows; pred are probabilities."""
    pred = np.clip(np.asarray(pred, dtype=np.float64), _EPS, 1.0)
    target = np.asarray(target, dtype=np.float64)
    per_row = -(target * np.log(pred)).sum(axis=-1)
    return float(np.mean(per_row))


def mse(pred, target):
    d = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.mean(d * d))


def l2_penalty(params, lam):
    if lam == 0.0:
        return 0.0
    return lam * sum(float(np.sum(w * w)) for w in params)


def loss(spec, pred, target, params=()):
    """Data loss plus optional l2 penalty over the given parameter tensors."""
    base = cross_entropy(pred, target) if spec.kind == "cross-entropy" else mse(pred, target)
    return base + l2_penalty(params, spec.l2)


# ---------------------------------------------------------------------------
# optimizers


class Optimizer:
    """Adam or RMSProp over a dict of named parameter arrays.

    Parameter dicts map name -> array; gradients use the same keys.
    Updates are in place and the step counter increments once per call.
    """

    def __init__(self, kind, learning_rate, beta1=0.9, beta2=0.999,
                 adam_eps=1e-8, decay=0.9, rms_eps=1e-10,
                 weight_decay=0.0, decay_keys=()):
        if kind not in ("adam", "rmsprop"):
            raise ValueError(f"unknown optimizer kind {kind!r}")
        self.kind = kind
        self.lr = float(learning_rate)
        self.beta1, self.beta2, self.adam_eps = beta1, beta2, adam_eps
        self.decay, self.rms_eps = decay, rms_eps
        # Decoupled weight decay: the regularizer is applied directly to the
        # listed parameters, scaled by the learning rate, instead of being
        # folded into the adaptive gradient.  Folding it in lets the
        # per-coordinate normalization amplify the decay term far beyond the
        # data gradient and drag every weight to zero.
        self.weight_decay = float(weight_decay)
        self.decay_keys = frozenset(decay_keys)
        self.t = 0
        self._m = {}
        self._v = {}

    def step(self, params, grads):
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for parameter {name!r}")
        self.t += 1
        for name, p in params.items():
            g = grads[name]
            if self.kind == "adam":
                m = self._m.setdefault(name, np.zeros_like(p))
                v = self._v.setdefault(name, np.zeros_like(p))
                m *= self.beta1
                m += (1 - self.beta1) * g
                v *= self.beta2
                v += (1 - self.beta2) * g * g
                mhat = m / (1 - self.beta1 ** self.t)
                vhat = v / (1 - self.beta2 ** self.t)
                p -= self.lr * mhat / (np.sqrt(vhat) + self.adam_eps)
            else:
                v = self._v.setdefault(name, np.zeros_like(p))
                v *= self.decay
                v += (1 - self.decay) * g * g
                p -= self.lr * g / np.sqrt(v + self.rms_eps)
            if self.weight_decay and name in self.decay_keys:
                p -= self.lr * self.weight_decay * p
        return params


def optimizer_step(state, params, grads):
    return state.step(params, grads)


# ---------------------------------------------------------------------------
# gradient checking


def gradient_check(loss_fn, params, analytic_grads, step=1e-5):
    """Max relative error between analytic gradients and central differences.

    loss_fn takes the params dict and returns a scalar.  Intended for
    small fragments (a few hundred parameters at most).
    """
    worst = 0.0
    for name, p in params.items():
        ag = analytic_grads[name]
        flat = p.reshape(-1)
        gflat = np.asarray(ag).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            lp = loss_fn(params)
            flat[i] = orig - step
            lm = loss_fn(params)
            flat[i] = orig
            num = (lp - lm) / (2 * step)
            denom = max(abs(gflat[i]), abs(num), 1e-8)
            worst = max(worst, abs(gflat[i] - num) / denom)
    return worst


# ---------------------------------------------------------------------------
# parameter persistence ("NNP1" container)

_MAGIC = b"NNP1"


def save_tensors(tensors):
    """Serialize a name->array dict to the flat binary container format."""
    out = [_MAGIC]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")
        nb = name.encode("utf-8")
        out.append(struct.pack("<H", len(nb)))
        out.append(nb)
        out.append(struct.pack("<B", arr.ndim))
        for ext in arr.shape:
            out.append(struct.pack("<I", ext))
        out.append(arr.tobytes())
    return b"".join(out)


def load_tensors(blob):
    """Inverse of save_tensors."""
    if blob[:4] != _MAGIC:
        raise ValueError("bad magic: not an NNP1 parameter container")
    tensors = {}
    off = 4
    view = memoryview(blob)
    while off < len(blob):
        (nlen,) = struct.unpack_from("<H", view, off)
        off += 2
        name = bytes(view[off:off + nlen]).decode("utf-8")
        off += nlen
        (rank,) = struct.unpack_from("<B", view, off)
        off += 1
        shape = struct.unpack_from(f"<{rank}I", view, off)
        off += 4 * rank
        count = int(np.prod(shape)) if rank else 1
        arr = np.frombuffer(view, dtype="<f8", count=count, offset=off).reshape(shape)
        off += 8 * count
        tensors[name] = arr.copy()
    return tensors


def write_tensors(path, tensors):
    with open(path, "wb") as fh:
        fh.write(save_tensors(tensors))


def read_tensors(path):
    with open(path, "rb") as fh:
        return load_tensors(fh.read())
