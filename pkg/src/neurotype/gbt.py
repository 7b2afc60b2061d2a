"""Gradient-boosted regression trees with a multiclass softmax objective.

Each boosting round fits one tree per class to the softmax
gradient/hessian statistics.  Split search is exact greedy: every
feature, every distinct threshold.  The scan kernels are jitted with
numba because the desk-scale runs visit ~10^10 (sample, feature) pairs;
the math is plain second-order gain maximization either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import nn


@dataclass
class GbtConfig:
    learning_rate: float = 0.5
    rounds: int = 500
    max_depth: int = 6
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_split_gain: float = 1e-6
    n_classes: int = 5

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.rounds < 1 or self.reg_lambda < 0 or self.gamma < 0:
            raise ValueError("invalid boosting configuration")


@njit(cache=True)
def _best_split(S, X, g, h, G, H, lam):
    """Scan all features/thresholds of one node.

    S is (n, F) int32: for each feature column, the node's sample ids in
    ascending feature order.  Returns (gain, feature, threshold, GL, HL)
    of the best split, gain = -inf when no valid threshold exists.
    """
    n, F = S.shape
    parent = G * G / (H + lam)
    best_gain = -np.inf
    best_f = -1
    best_thr = 0.0
    best_gl = 0.0
    best_hl = 0.0
    for f in range(F):
        gl = 0.0
        hl = 0.0
        for i in range(n - 1):
            idx = S[i, f]
            gl += g[idx]
            hl += h[idx]
            x1 = X[idx, f]
            x2 = X[S[i + 1, f], f]
            if x1 < x2:
                gr = G - gl
                hr = H - hl
                gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = 0.5 * (x1 + x2)
                    best_gl = gl
                    best_hl = hl
    return best_gain, best_f, best_thr, best_gl, best_hl


@njit(cache=True)
def _partition(S, goes_left):
    """Split a node's per-feature sorted id matrix into the two children.

    goes_left is indexed by global sample id (one cached bool per sample),
    so the kernel never has to re-read feature values.
    """
    n, F = S.shape
    nl = 0
    for i in range(n):
        if goes_left[S[i, 0]]:
            nl += 1
    SL = np.empty((nl, F), dtype=np.int32)
    SR = np.empty((n - nl, F), dtype=np.int32)
    for c in range(F):
        a = 0
        b = 0
        for i in range(n):
            idx = S[i, c]
            if goes_left[idx]:
                SL[a, c] = idx
                a += 1
            else:
                SR[b, c] = idx
                b += 1
    return SL, SR


class Tree:
    """One regression tree stored as parallel node arrays (ids in build order)."""

    def __init__(self):
        self.feature = []    # -1 for leaves
        self.threshold = []  # nan for leaves
        self.score = []      # nan for splits; leaf scores include shrinkage
        self.left = []
        self.right = []

    def _new_node(self):
        self.feature.append(-1)
        self.threshold.append(float("nan"))
        self.score.append(float("nan"))
        self.left.append(-1)
        self.right.append(-1)
        return len(self.feature) - 1

    def depth(self):
        def walk(nid):
            if self.feature[nid] < 0:
                return 0
            return 1 + max(walk(self.left[nid]), walk(self.right[nid]))
        return walk(0)

    def predict(self, X):
        out = np.empty(X.shape[0])
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            nid, rows = stack.pop()
            if rows.size == 0:
                continue
            f = self.feature[nid]
            if f < 0:
                out[rows] = self.score[nid]
            else:
                goes_left = X[rows, f] < self.threshold[nid]
                stack.append((self.left[nid], rows[goes_left]))
                stack.append((self.right[nid], rows[~goes_left]))
        return out


class TreeEnsemble:
    def __init__(self, config: GbtConfig, n_features):
        self.config = config
        self.n_features = n_features
        self.trees = [[] for _ in range(config.n_classes)]

    def raw_scores(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise nn.ShapeError(
                f"ensemble expects {self.n_features} features, got {X.shape[1]}")
        scores = np.zeros((X.shape[0], self.config.n_classes))
        for c, trees in enumerate(self.trees):
            for tree in trees:
                scores[:, c] += tree.predict(X)
        return scores


def _build_tree(X, P, g, h, config):
    """Grow one tree; returns (tree, list of (leaf row ids, score))."""
    tree = Tree()
    leaves = []
    eta = config.learning_rate
    lam = config.reg_lambda
    root = tree._new_node()
    queue = [(root, P, 0, float(g.sum()), float(h.sum()))]
    while queue:
        nid, S, depth, G, H = queue.pop(0)
        n = S.shape[0]
        make_leaf = depth >= config.max_depth or n < 2
        if not make_leaf:
            gain, f, thr, GL, HL = _best_split(S, X, g, h, G, H, lam)
            make_leaf = (gain - config.gamma) <= config.min_split_gain
        if make_leaf:
            score = eta * (-G / (H + lam))
            tree.score[nid] = score
            leaves.append((S[:, 0].copy(), score))
            continue
        SL, SR = _partition(S, X[:, f] < thr)
        tree.feature[nid] = int(f)
        tree.threshold[nid] = float(thr)
        lid = tree._new_node()
        rid = tree._new_node()
        tree.left[nid] = lid
        tree.right[nid] = rid
        queue.append((lid, SL, depth + 1, GL, HL))
        queue.append((rid, SR, depth + 1, G - GL, H - HL))
    return tree, leaves


def gbt_fit(X, y, config=None, seed=0):
    """Fit the boosted ensemble.  Deterministic given input order."""
    # column-major: split scans walk one feature column at a time
    X = np.asfortranarray(np.atleast_2d(X), dtype=np.float64)
    y = np.asarray(y)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training samples")
    if config is None:
        config = GbtConfig()
    if y.min() < 0 or y.max() >= config.n_classes:
        raise ValueError(f"labels must lie in 0..{config.n_classes - 1}")
    n, F = X.shape
    C = config.n_classes
    ensemble = TreeEnsemble(config, F)
    P = np.argsort(X, axis=0, kind="stable").astype(np.int32)
    P = np.ascontiguousarray(P)
    onehot = np.eye(C)[y]
    scores = np.zeros((n, C))
    for _ in range(config.rounds):
        probs = nn.softmax(scores)
        for c in range(C):
            g = np.ascontiguousarray(probs[:, c] - onehot[:, c])
            h = np.ascontiguousarray(probs[:, c] * (1.0 - probs[:, c]))
            tree, leaves = _build_tree(X, P, g, h, config)
            ensemble.trees[c].append(tree)
            for rows, score in leaves:
                scores[rows, c] += score
    return ensemble


def gbt_predict(ensemble, X):
    """Predicted labels; argmax ties break to the lowest class index."""
    scores = ensemble.raw_scores(X)
    labels = np.argmax(scores, axis=1)
    return labels if np.ndim(X) > 1 else int(labels[0])


def gbt_predict_scores(ensemble, X):
    """Per-class probabilities (softmax over summed leaf scores)."""
    probs = nn.softmax(ensemble.raw_scores(X))
    return probs if np.ndim(X) > 1 else probs[0]


# ---------------------------------------------------------------------------
# textual persistence
#
# One line per node: class round node_id kind feature threshold score
# left_id right_id, with "-" for fields a node kind does not carry.


def gbt_dump(ensemble):
    lines = []
    for c, trees in enumerate(ensemble.trees):
        for r, tree in enumerate(trees):
            for nid in range(len(tree.feature)):
                if tree.feature[nid] < 0:
                    lines.append(f"{c} {r} {nid} leaf - - {tree.score[nid]!r} - -")
                else:
                    lines.append(
                        f"{c} {r} {nid} split {tree.feature[nid]} "
                        f"{tree.threshold[nid]!r} - {tree.left[nid]} {tree.right[nid]}")
    return "\n".join(lines) + "\n"


def gbt_load_dump(text, config, n_features):
    ensemble = TreeEnsemble(config, n_features)
    nodes = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 9:
            raise ValueError(f"tree dump line {lineno}: expected 9 fields")
        c, r, nid = int(parts[0]), int(parts[1]), int(parts[2])
        nodes.setdefault((c, r), {})[nid] = parts[3:]
    for (c, r), by_id in sorted(nodes.items()):
        while len(ensemble.trees[c]) <= r:
            ensemble.trees[c].append(Tree())
        tree = ensemble.trees[c][r]
        for nid in sorted(by_id):
            if nid != tree._new_node():
                raise ValueError(f"non-contiguous node ids in tree {c}/{r}")
            kind, feat, thr, score, left, right = by_id[nid]
            if kind == "leaf":
                tree.score[nid] = float(score)
            else:
                tree.feature[nid] = int(feat)
                tree.threshold[nid] = float(thr)
                tree.left[nid] = int(left)
                tree.right[nid] = int(right)
    return ensemble
