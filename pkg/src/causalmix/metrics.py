"""Evaluation metrics: log-loss, ROC-AUC, Pearson correlation, score normalization.

`roc_auc` and `pearson` return NaN as the undefined marker (single-class
labels, zero variance) so callers can propagate "no score" without mixing it
up with a real value.
"""

from __future__ import annotations

import warnings

import numpy as np


def log_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log predicted probability of the true class.

    Rows must sum to 1 within 1e-6; probabilities are clipped to
    [1e-15, 1 - 1e-15] before the log.
    """
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if probs.ndim != 2:
        raise ValueError("probs must be an n x k matrix")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise ValueError("probability rows must sum to 1 within 1e-6")
    if labels.min() < 0 or labels.max() >= probs.shape[1]:
        raise ValueError("label index outside probability columns")
    picked = probs[np.arange(len(labels)), labels]
    picked = np.clip(picked, 1e-15, 1.0 - 1e-15)
    return float(-np.mean(np.log(picked)))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing the average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    n_pos = int(positive.sum())
    n_neg = int(len(positive) - n_pos)
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[positive].sum())
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def roc_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney ROC-AUC; ties count one half.

    `scores` is an n x k probability matrix (or a 1-d positive-class score for
    binary labels). Multiclass returns the macro average of one-vs-rest AUCs
    over the classes present in `labels`; classes absent from the labels are
    skipped. Returns NaN when no dichotomy has both a positive and a negative.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.ndim == 1:
        return _binary_auc(scores, labels == 1)
    k = scores.shape[1]
    present = np.unique(labels)
    if present.size < 2:
        return float("nan")
    if k == 2:
        return _binary_auc(scores[:, 1], labels == 1)
    aucs = []
    for cls in present:
        if cls >= k:
            raise ValueError(f"label {cls} outside score columns")
        value = _binary_auc(scores[:, cls], labels == cls)
        if not np.isnan(value):
            aucs.append(value)
    return float(np.mean(aucs)) if aucs else float("nan")


def pearson(xs: np.ndarray, ys: np.ndarray) -> float:
    """Sample Pearson correlation; NaN when either side has zero variance."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("pearson needs two equal-length vectors")
    if xs.size < 2:
        raise ValueError("pearson needs at least 2 points")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    denom = np.sqrt((dx**2).sum() * (dy**2).sum())
    if denom == 0:
        return float("nan")
    return float(np.clip((dx * dy).sum() / denom, -1.0, 1.0))


def normalize_score(method: float, baseline: float, metric_sign: int) -> float:
    """Percent improvement over a baseline: sign * (method/baseline - 1) * 100.

    metric_sign is +1 for higher-is-better metrics and -1 for lower-is-better.
    A zero baseline has no defined improvement; returns NaN with a warning.
    """
    if metric_sign not in (1, -1):
        raise ValueError("metric_sign must be +1 or -1")
    if baseline == 0:
        warnings.warn("normalize_score undefined for a zero baseline", stacklevel=2)
        return float("nan")
    return float(metric_sign * (method / baseline - 1.0) * 100.0)
