"""Common fitted-model plumbing for the learner zoo."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FitDiagnostics:
    converged: bool = True
    n_iter: int = 0
    cov_reg_escalations: int = 0
    fell_back_to_uniform: bool = False


class FittedModel:
    """Base for fitted learners; enforces the training feature width."""

    def __init__(self, spec, n_features: int, diagnostics: FitDiagnostics | None = None):
        self.spec = spec
        self.n_features = int(n_features)
        self.diagnostics = diagnostics or FitDiagnostics()

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        return X


def check_training_inputs(X: np.ndarray, y: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray | None]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] == 0:
        raise ValueError("zero training rows")
    if not np.isfinite(X).all():
        raise ValueError("non-finite values in features")
    if y is not None:
        y = np.asarray(y, dtype=float).ravel()
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if not np.isfinite(y).all():
            raise ValueError("non-finite values in targets")
    return X, y


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
