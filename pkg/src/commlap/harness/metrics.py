"""Clustering accuracy and normalized mutual information."""
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import ValidationError

EXHAUSTIVE_MAX_K = 8
MAX_LABELS = 12


def contingency(labels, truth):
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape or labels.ndim != 1:
        raise ValidationError(f"label vectors differ in shape: {labels.shape} vs {truth.shape}")
    lu, li = np.unique(labels, return_inverse=True)
    tu, ti = np.unique(truth, return_inverse=True)
    if max(len(lu), len(tu)) > MAX_LABELS:
        raise ValidationError(f"at most {MAX_LABELS} distinct labels supported")
    M = np.zeros((len(lu), len(tu)), dtype=np.int64)
    np.add.at(M, (li, ti), 1)
    return M


def accuracy(labels, truth):
    """Fraction of points matched under the best one-to-one relabeling."""
    M = contingency(labels, truth)
    n = M.sum()
    k = max(M.shape)
    P = np.zeros((k, k), dtype=np.int64)
    P[: M.shape[0], : M.shape[1]] = M
    if k <= EXHAUSTIVE_MAX_K:
        rows = np.arange(k)
        best = max(P[rows, list(perm)].sum() for perm in permutations(range(k)))
    else:
        r, c = linear_sum_assignment(-P)
        best = P[r, c].sum()
    return float(best / n)


def nmi(labels, truth):
    """``I(labels; truth) / sqrt(H(labels) H(truth))`` in nats; ``0/0`` is 0."""
    M = contingency(labels, truth).astype(float)
    n = M.sum()
    pij = M / n
    pi = pij.sum(axis=1)
    pj = pij.sum(axis=0)
    nz = pij > 0
    mi = float(np.sum(pij[nz] * np.log(pij[nz] / np.outer(pi, pj)[nz])))
    hi = -float(np.sum(pi * np.log(pi)))
    hj = -float(np.sum(pj * np.log(pj)))
    denom = np.sqrt(hi * hj)
    if denom == 0:
        return 0.0
    return float(np.clip(mi / denom, 0.0, 1.0))


def clustering_metrics(labels, truth):
    """``(accuracy, nmi)`` of a predicted labeling against ground truth."""
    return accuracy(labels, truth), nmi(labels, truth)
