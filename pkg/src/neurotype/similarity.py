"""Pearson-correlation similarity analysis of intent classes.

Produces the per-intent self-similarity (mean correlation over
same-intent sample pairs), cross-similarity (mean over pairs drawn from
two different intents), and their percentage difference.
"""

from __future__ import annotations

import numpy as np


class UndefinedCorrelationError(ValueError):
    """Raised when a correlation input has zero variance."""


def pearson(x, y):
    """Sample Pearson correlation coefficient of two equal-length vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length vectors of length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt((xc * xc).sum())
    sy = np.sqrt((yc * yc).sum())
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    return float((xc * yc).sum() / (sx * sy))


def similarity_matrix(groups, m=50, seed=0):
    """Mean pairwise correlation matrix over intent groups.

    groups: sequence of 2-D arrays, one per intent (samples x channels).
    At most m samples per intent are drawn (seeded) before pairing.
    Diagonal entries average all unordered same-intent pairs; off-diagonal
    entries average all cross-intent pairs.
    """
    rng = np.random.default_rng(seed)
    picked = []
    for gi, g in enumerate(groups):
        g = np.atleast_2d(np.asarray(g, dtype=np.float64))
        if g.shape[0] < 2:
            raise ValueError(f"intent {gi} has fewer than 2 samples")
        if g.shape[0] > m:
            idx = rng.choice(g.shape[0], size=m, replace=False)
            g = g[np.sort(idx)]
        picked.append(g)
    k = len(picked)
    mat = np.zeros((k, k))
    for i in range(k):
        a = picked[i]
        coeffs = [pearson(a[p], a[q])
                  for p in range(a.shape[0]) for q in range(p + 1, a.shape[0])]
        mat[i, i] = np.mean(coeffs)
        for j in range(i + 1, k):
            b = picked[j]
            coeffs = [pearson(sa, sb) for sa in a for sb in b]
            mat[i, j] = mat[j, i] = np.mean(coeffs)
    return mat


def cross_similarity(row, intent):
    """Mean of a matrix row's off-diagonal entries."""
    row = np.asarray(row, dtype=np.float64)
    if row.size < 2:
        raise ValueError("need at least 2 intents")
    mask = np.ones(row.size, dtype=bool)
    mask[intent] = False
    return float(row[mask].mean())


def percentage_difference(self_sim, cross_sim):
    """(self - cross) / self, in percent."""
    if self_sim == 0.0:
        raise ValueError("percentage difference undefined for zero self-similarity")
    return 100.0 * (self_sim - cross_sim) / self_sim


def similarity_report(groups, m=50, seed=0):
    """Matrix plus per-intent Self/Cross/PD columns, as CSV-ready rows."""
    mat = similarity_matrix(groups, m=m, seed=seed)
    rows = []
    for i in range(mat.shape[0]):
        self_sim = mat[i, i]
        cross = cross_similarity(mat[i], i)
        rows.append({"intent": i, "row": mat[i].tolist(), "self": self_sim,
                     "cross": cross, "pd": percentage_difference(self_sim, cross)})
    return mat, rows


def report_to_csv(mat, rows):
    k = mat.shape[0]
    header = ["class"] + [str(j) for j in range(k)] + ["self", "cross", "pd_percent"]
    lines = [",".join(header)]
    for r in rows:
        cells = [str(r["intent"])] + [f"{v:.6f}" for v in r["row"]]
        cells += [f"{r['self']:.6f}", f"{r['cross']:.6f}", f"{r['pd']:.4f}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
