"""Feature fusion: stack the two branch features and learn a linear
autoencoder whose latent code is the fused representation.

Both encoder and decoder are purely affine; training minimizes the
reconstruction MSE with RMSProp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn


def stack_features(Xt, Xs):
    """Concatenate temporal (first) and spatial (second) feature vectors."""
    Xt = np.asarray(Xt, dtype=np.float64)
    Xs = np.asarray(Xs, dtype=np.float64)
    return np.concatenate([Xt, Xs], axis=-1)


@dataclass
class AutoencoderConfig:
    input_size: int = 184
    latent_size: int = 800
    iterations: int = 400
    batch_size: int = 7000
    # Table value 0.01 conflicts with the tuned 0.002 in the text; the
    # tuned value is the default.
    learning_rate: float = 0.002


class AutoencoderParams:
    def __init__(self, config: AutoencoderConfig, seed=0):
        self.config = config
        rng = np.random.default_rng(seed)
        n_in, n_h = config.input_size, config.latent_size
        lim_e = 1.0 / np.sqrt(n_in)
        lim_d = 1.0 / np.sqrt(n_h)
        self.W_en = rng.uniform(-lim_e, lim_e, size=(n_in, n_h))
        self.b_en = np.zeros(n_h)
        self.W_de = rng.uniform(-lim_d, lim_d, size=(n_h, n_in))
        self.b_de = np.zeros(n_in)

    def params(self):
        return {"W_en": self.W_en, "b_en": self.b_en,
                "W_de": self.W_de, "b_de": self.b_de}

    def load_params(self, tensors):
        for name, arr in tensors.items():
            cur = self.params()[name]
            if cur.shape != arr.shape:
                raise nn.ShapeError(f"parameter {name} has shape {arr.shape}, "
                                    f"expected {cur.shape}")
            cur[...] = arr


def encode(X, ae: AutoencoderParams):
    """Latent code h = X' W_en + b_en (no nonlinearity)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != ae.config.input_size:
        raise nn.ShapeError(f"encoder expects extent {ae.config.input_size}, "
                            f"got {X.shape[-1]}")
    return X @ ae.W_en + ae.b_en


def decode(h, ae: AutoencoderParams):
    """Reconstruction Xhat' = h W_de + b_de."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[-1] != ae.config.latent_size:
        raise nn.ShapeError(f"decoder expects extent {ae.config.latent_size}, "
                            f"got {h.shape[-1]}")
    return h @ ae.W_de + ae.b_de


def ae_train(X, config=None, seed=0):
    """Train the linear autoencoder; returns (params, loss trace)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise nn.TrainingError("empty feature set")
    if config is None:
        config = AutoencoderConfig(input_size=X.shape[1])
    ae = AutoencoderParams(config, seed=seed)
    opt = nn.Optimizer("rmsprop", config.learning_rate)
    rng = np.random.default_rng(seed)
    bs = min(config.batch_size, X.shape[0])
    order = rng.permutation(X.shape[0])
    pos = 0
    trace = []
    n_in = config.input_size
    for _ in range(config.iterations):
        if pos + bs > X.shape[0]:
            order = rng.permutation(X.shape[0])
            pos = 0
        batch = X[order[pos:pos + bs]]
        pos += bs
        h = batch @ ae.W_en + ae.b_en
        recon = h @ ae.W_de + ae.b_de
        diff = recon - batch
        trace.append(float(np.mean(diff * diff)))
        # d(mean squared error)/d(recon); the mean runs over every element
        dr = 2.0 * diff / diff.size
        grads = {"W_de": h.T @ dr, "b_de": dr.sum(axis=0)}
        dh = dr @ ae.W_de.T
        grads["W_en"] = batch.T @ dh
        grads["b_en"] = dh.sum(axis=0)
        opt.step(ae.params(), grads)
    return ae, trace
