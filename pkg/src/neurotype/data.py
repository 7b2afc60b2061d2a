"""Dataset ingestion, validation, splitting and batching.

On-disk layout: one CSV per subject with header ch0..ch{K-1},label and
one sample per row, plus a sidecar "<subject>.meta" file of key=value
lines recording rate/channels/subject/corpus.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


class DatasetError(ValueError):
    pass


N_CLASSES = 5


@dataclass
class Dataset:
    samples: np.ndarray          # (n, K) float64
    labels: np.ndarray           # (n,) int
    channels: int
    rate: int = 0
    subject: str = ""
    corpus: str = ""

    def __post_init__(self):
        if self.samples.shape[0] != self.labels.shape[0]:
            raise DatasetError("sample/label counts differ")
        if self.samples.ndim != 2 or self.samples.shape[1] != self.channels:
            raise DatasetError(f"expected {self.channels} channels per sample")

    def __len__(self):
        return self.samples.shape[0]

    def subset(self, idx):
        return Dataset(self.samples[idx], self.labels[idx], self.channels,
                       self.rate, self.subject, self.corpus)

    def by_intent(self):
        return [self.samples[self.labels == c] for c in range(N_CLASSES)]


@dataclass
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DatasetError("train fraction must lie in (0, 1)")


def load_dataset(path, expected_channels=None):
    """Load one subject CSV (plus its .meta sidecar when present)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or (len(lines) == 1 and not lines[0].strip()):
        raise DatasetError(f"{path}: empty dataset file")
    header = lines[0].split(",")
    if header[-1] != "label" or not all(h == f"ch{i}" for i, h in enumerate(header[:-1])):
        raise DatasetError(f"{path}: malformed header {lines[0]!r}")
    K = len(header) - 1
    if expected_channels is not None and K != expected_channels:
        raise DatasetError(f"{path}: expected {expected_channels} channels, found {K}")
    n = len(lines) - 1
    if n == 0:
        raise DatasetError(f"{path}: empty dataset file")
    samples = np.empty((n, K))
    labels = np.empty(n, dtype=np.int64)
    for row, line in enumerate(lines[1:], start=1):
        cells = line.split(",")
        if len(cells) != K + 1:
            raise DatasetError(f"{path}: row {row}: expected {K + 1} columns, "
                               f"got {len(cells)}")
        try:
            values = [float(c) for c in cells[:-1]]
            label = int(cells[-1])
        except ValueError:
            raise DatasetError(f"{path}: row {row}: non-numeric cell") from None
        if not 0 <= label < N_CLASSES:
            raise DatasetError(f"{path}: row {row}: label {label} outside 0..4")
        if not np.all(np.isfinite(values)):
            raise DatasetError(f"{path}: row {row}: non-finite channel value")
        samples[row - 1] = values
        labels[row - 1] = label
    meta = _load_meta(os.path.splitext(path)[0] + ".meta")
    return Dataset(samples, labels, K,
                   rate=int(meta.get("rate", 0)),
                   subject=meta.get("subject", ""),
                   corpus=meta.get("corpus", ""))


def _load_meta(path):
    if not os.path.exists(path):
        return {}
    meta = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                key, value = line.split("=", 1)
                meta[key] = value
    return meta


def save_dataset(dataset, path):
    """Write CSV + sidecar; values keep 17 significant digits (round trip)."""
    with open(path, "w") as fh:
        fh.write(",".join([f"ch{i}" for i in range(dataset.channels)] + ["label"]) + "\n")
        for sample, label in zip(dataset.samples, dataset.labels):
            fh.write(",".join(f"{v:.17g}" for v in sample) + f",{label}\n")
    with open(os.path.splitext(path)[0] + ".meta", "w") as fh:
        fh.write(f"rate={dataset.rate}\nchannels={dataset.channels}\n"
                 f"subject={dataset.subject}\ncorpus={dataset.corpus}\n")


def split(dataset, spec=None):
    """Seeded shuffle split into disjoint, exhaustive train/test parts."""
    if len(dataset) == 0:
        raise DatasetError("cannot split an empty dataset")
    spec = spec or SplitSpec()
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(len(dataset))
    n_train = round(spec.train_fraction * len(dataset))
    return dataset.subset(order[:n_train]), dataset.subset(order[n_train:])


def batches(n, batch_size, seed=0):
    """Index batches over n samples; the final short batch is emitted."""
    if batch_size < 1:
        raise DatasetError("batch size must be >= 1")
    order = np.random.default_rng(seed).permutation(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def synthesize_subject(n, channels, seed=0, rate=160, subject="SYN",
                       corpus="eegmmidb", noise=2.0):
    """Synthetic stand-in for one recorded subject.

    Class-conditional mixtures of per-class channel templates plus a
    shared background component and Gaussian noise, so the classes are
    learnable but not linearly trivial.
    """
    rng = np.random.default_rng(seed)
    templates = rng.normal(size=(N_CLASSES, channels))
    background = rng.normal(size=(3, channels))
    labels = rng.integers(0, N_CLASSES, size=n)
    amp = 1.0 + 0.5 * rng.standard_normal(n)
    bg = rng.standard_normal((n, 3)) @ background
    samples = amp[:, None] * templates[labels] + bg
    samples += noise * rng.standard_normal((n, channels))
    samples *= 10.0  # plausible microvolt scale
    return Dataset(samples, labels, channels, rate=rate, subject=subject,
                   corpus=corpus)
