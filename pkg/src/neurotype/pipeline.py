"""End-to-end training/prediction pipeline and evaluation metrics.

Stage order is fixed: train the recurrent branch, train the convolutional
branch, extract and stack both feature sets, train the autoencoder,
encode, then fit the boosted-tree classifier on the latent codes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import fusion, gbt, nn, spatial, temporal
from .data import N_CLASSES

DEFAULT_COMMAND_MAP = {0: "left", 1: "up", 2: "right", 3: "cancel", 4: "confirm"}


class PipelineError(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    channels: int = 64
    rnn: temporal.TemporalNetConfig = None
    cnn: spatial.SpatialNetConfig = None
    ae: fusion.AutoencoderConfig = None
    classifier: gbt.GbtConfig = None
    command_map: dict = field(default_factory=lambda: dict(DEFAULT_COMMAND_MAP))

    def __post_init__(self):
        K = self.channels
        if self.rnn is None:
            self.rnn = temporal.TemporalNetConfig(input_size=K)
        if self.cnn is None:
            self.cnn = spatial.SpatialNetConfig(input_size=K)
        if self.ae is None:
            stacked = self.rnn.hidden_size + self.cnn.fc_size
            self.ae = fusion.AutoencoderConfig(input_size=stacked)
        if self.classifier is None:
            self.classifier = gbt.GbtConfig()
        stacked = self.rnn.hidden_size + self.cnn.fc_size
        if self.ae.input_size != stacked:
            raise PipelineError(
                f"autoencoder input {self.ae.input_size} != stacked feature "
                f"size {stacked}")

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        kwargs = {}
        if "channels" in raw:
            kwargs["channels"] = raw["channels"]
        K = kwargs.get("channels", 64)
        if "rnn" in raw:
            kwargs["rnn"] = temporal.TemporalNetConfig(
                **{"input_size": K, **raw["rnn"]})
        if "cnn" in raw:
            kwargs["cnn"] = spatial.SpatialNetConfig(
                **{"input_size": K, **raw["cnn"]})
        if "ae" in raw:
            kwargs["ae"] = fusion.AutoencoderConfig(**raw["ae"])
        if "classifier" in raw:
            kwargs["classifier"] = gbt.GbtConfig(**raw["classifier"])
        if "command_map" in raw:
            kwargs["command_map"] = {int(k): v for k, v in raw["command_map"].items()}
        return cls(**kwargs)

    def to_json(self):
        def fields(obj, names):
            return {n: getattr(obj, n) for n in names}
        return json.dumps({
            "channels": self.channels,
            "rnn": fields(self.rnn, ["input_size", "hidden_size", "n_classes",
                                     "iterations", "batch_size", "learning_rate", "l2"]),
            "cnn": fields(self.cnn, ["input_size", "conv_depths", "fc_size", "n_classes",
                                     "iterations", "batch_size", "learning_rate", "l2"]),
            "ae": fields(self.ae, ["input_size", "latent_size", "iterations",
                                   "batch_size", "learning_rate"]),
            "classifier": fields(self.classifier,
                                 ["learning_rate", "rounds", "max_depth", "reg_lambda",
                                  "gamma", "min_split_gain", "n_classes"]),
            "command_map": self.command_map,
        }, indent=2)


class PipelineModel:
    def __init__(self, config, rnn, cnn, ae, ensemble):
        self.config = config
        self.rnn = rnn
        self.cnn = cnn
        self.ae = ae
        self.ensemble = ensemble
        self.channels = config.channels
        self.command_map = config.command_map

    def features(self, X):
        """Stacked branch features (fresh recurrent state per sample)."""
        Xt = self.rnn.extract(X)
        Xs = self.cnn.extract(X)
        return fusion.stack_features(Xt, Xs)

    def latent(self, X):
        return fusion.encode(self.features(X), self.ae)

    def predict(self, X):
        """Intent labels for one sample or a batch."""
        single = np.ndim(X) == 1
        h = self.latent(np.atleast_2d(X))
        labels = gbt.gbt_predict(self.ensemble, h)
        return int(labels[0]) if single else labels

    def predict_scores(self, X):
        single = np.ndim(X) == 1
        probs = gbt.gbt_predict_scores(self.ensemble, self.latent(np.atleast_2d(X)))
        return probs[0] if single else probs


def train_pipeline(train, config=None, seed=0, loss_traces=None):
    """Train every stage in order on a labeled Dataset; returns the model."""
    if config is None:
        config = PipelineConfig(channels=train.channels)
    if train.channels != config.channels:
        raise PipelineError(f"dataset has {train.channels} channels, "
                            f"config expects {config.channels}")
    X, y = train.samples, train.labels

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            raise PipelineError(f"stage {name!r} failed: {exc}") from exc

    rnn = temporal.TemporalNet(config.rnn, seed=seed)
    trace = stage("temporal_train", lambda: rnn.train(X, y, seed=seed))
    if loss_traces is not None:
        loss_traces["rnn"] = trace
    cnn = spatial.SpatialNet(config.cnn, seed=seed)
    trace = stage("spatial_train", lambda: cnn.train(X, y, seed=seed))
    if loss_traces is not None:
        loss_traces["cnn"] = trace
    stacked = stage("extract_features", lambda: fusion.stack_features(
        rnn.extract(X), cnn.extract(X)))
    ae, trace = stage("ae_train", lambda: fusion.ae_train(
        stacked, config.ae, seed=seed))
    if loss_traces is not None:
        loss_traces["ae"] = trace
    latent = stage("encode", lambda: fusion.encode(stacked, ae))
    ensemble = stage("gbt_fit", lambda: gbt.gbt_fit(
        latent, y, config.classifier, seed=seed))
    return PipelineModel(config, rnn, cnn, ae, ensemble)


def pipeline_predict(model, sample):
    return model.predict(sample)


# ---------------------------------------------------------------------------
# metrics


@dataclass
class Metrics:
    accuracy: float
    confusion: np.ndarray          # [predicted, truth]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    auc: np.ndarray = None
    roc: list = None               # per class list of (fpr, tpr) arrays

    @property
    def macro_precision(self):
        return float(np.mean(self.precision))

    @property
    def macro_recall(self):
        return float(np.mean(self.recall))

    @property
    def macro_f1(self):
        return float(np.mean(self.f1))

    @property
    def macro_auc(self):
        return float(np.mean(self.auc)) if self.auc is not None else None


def confusion_matrix(predicted, truth, n_classes=N_CLASSES):
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (np.asarray(predicted), np.asarray(truth)), 1)
    return m


def metrics_from_confusion(m):
    """Precision/recall/F1 from a [predicted, truth] confusion matrix."""
    m = np.asarray(m, dtype=np.float64)
    diag = np.diag(m)
    row = m.sum(axis=1)
    col = m.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(row > 0, diag / row, 0.0)
        recall = np.where(col > 0, diag / col, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    accuracy = float(diag.sum() / m.sum())
    return Metrics(accuracy, m.astype(np.int64), precision, recall, f1)


def roc_curve(scores, positive):
    """ROC points for one class; returns (fpr, tpr) including both endpoints."""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(positive, dtype=bool)
    order = np.argsort(-scores, kind="stable")
    tp = np.cumsum(positive[order])
    fp = np.cumsum(~positive[order])
    n_pos = max(int(positive.sum()), 1)
    n_neg = max(int((~positive).sum()), 1)
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    return fpr, tpr


def auc_trapezoid(fpr, tpr):
    return float(np.trapezoid(tpr, fpr))


def evaluate(model, test):
    """All metrics over a test Dataset."""
    if len(test) == 0:
        raise PipelineError("cannot evaluate on an empty test set")
    scores = model.predict_scores(test.samples)
    predicted = np.argmax(scores, axis=1)
    m = confusion_matrix(predicted, test.labels)
    metrics = metrics_from_confusion(m)
    aucs = []
    rocs = []
    for c in range(N_CLASSES):
        fpr, tpr = roc_curve(scores[:, c], test.labels == c)
        rocs.append((fpr, tpr))
        aucs.append(auc_trapezoid(fpr, tpr))
    metrics.auc = np.array(aucs)
    metrics.roc = rocs
    return metrics


def metrics_to_csv(metrics):
    lines = ["class,precision,recall,f1,auc"]
    for c in range(len(metrics.precision)):
        auc = metrics.auc[c] if metrics.auc is not None else float("nan")
        lines.append(f"{c},{metrics.precision[c]:.4f},{metrics.recall[c]:.4f},"
                     f"{metrics.f1[c]:.4f},{auc:.4f}")
    lines.append(f"accuracy,{metrics.accuracy:.4f},,,")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# model persistence
#
# Container: magic "NTM1", version u8, u32 section count, then sections of
# u16 name length, name, u64 payload length, payload.  The nn-core "NNP1"
# blobs keep their per-stage tensor name prefixes.

_MODEL_MAGIC = b"NTM1"
_MODEL_VERSION = 1
_REQUIRED_SECTIONS = ("meta", "rnn", "cnn", "ae", "trees")


def save_model(model, path):
    meta = {
        "config": json.loads(model.config.to_json()),
        "channels": model.channels,
    }
    sections = {
        "meta": json.dumps(meta).encode(),
        "rnn": nn.save_tensors({f"rnn.{k}": v for k, v in model.rnn.params().items()}),
        "cnn": nn.save_tensors({f"cnn.{k}": v for k, v in model.cnn.params().items()}),
        "ae": nn.save_tensors({f"ae.{k}": v for k, v in model.ae.params().items()}),
        "trees": gbt.gbt_dump(model.ensemble).encode(),
    }
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<B", _MODEL_VERSION))
        fh.write(struct.pack("<I", len(sections)))
        for name, payload in sections.items():
            nb = name.encode()
            fh.write(struct.pack("<H", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<Q", len(payload)))
            fh.write(payload)


def load_model(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MODEL_MAGIC:
        raise PipelineError("bad magic: not a pipeline model file")
    (version,) = struct.unpack_from("<B", blob, 4)
    if version != _MODEL_VERSION:
        raise PipelineError(f"unsupported model version {version}")
    (count,) = struct.unpack_from("<I", blob, 5)
    off = 9
    sections = {}
    try:
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", blob, off)
            off += 2
            name = blob[off:off + nlen].decode()
            off += nlen
            (plen,) = struct.unpack_from("<Q", blob, off)
            off += 8
            if off + plen > len(blob):
                raise PipelineError("truncated model file")
            sections[name] = blob[off:off + plen]
            off += plen
    except struct.error:
        raise PipelineError("truncated model file") from None
    for name in _REQUIRED_SECTIONS:
        if name not in sections:
            raise PipelineError(f"model file missing section {name!r}")
    meta = json.loads(sections["meta"].decode())
    config = PipelineConfig.from_json(json.dumps(meta["config"]))
    rnn = temporal.TemporalNet(config.rnn)
    rnn.load_params({k[len("rnn."):]: v
                     for k, v in nn.load_tensors(sections["rnn"]).items()})
    cnn = spatial.SpatialNet(config.cnn)
    cnn.load_params({k[len("cnn."):]: v
                     for k, v in nn.load_tensors(sections["cnn"]).items()})
    ae = fusion.AutoencoderParams(config.ae)
    ae.load_params({k[len("ae."):]: v
                    for k, v in nn.load_tensors(sections["ae"]).items()})
    ensemble = gbt.gbt_load_dump(sections["trees"].decode(), config.classifier,
                                 config.ae.latent_size)
    return PipelineModel(config, rnn, cnn, ae, ensemble)
