"""k-nearest-neighbour regression and classification (brute-force Euclidean)."""

from __future__ import annotations

import numpy as np

from .base import FittedModel, check_training_inputs


def _neighbour_indices(train: np.ndarray, X: np.ndarray, k: int) -> np.ndarray:
    d2 = ((X[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
    # argsort is stable, so distance ties resolve to the lowest training index
    return np.argsort(d2, axis=1, kind="stable")[:, :k]


class KNNRegressor(FittedModel):
    def __init__(self, spec, train_X: np.ndarray, train_y: np.ndarray, k: int):
        super().__init__(spec, train_X.shape[1])
        self.train_X = train_X
        self.train_y = train_y
        self.k = min(k, train_X.shape[0])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        idx = _neighbour_indices(self.train_X, X, self.k)
        return self.train_y[idx].mean(axis=1)


class KNNClassifier(FittedModel):
    def __init__(self, spec, train_X: np.ndarray, train_y: np.ndarray, k: int):
        super().__init__(spec, train_X.shape[1])
        self.train_X = train_X
        self.classes_ = np.unique(train_y)
        self.train_idx = np.searchsorted(self.classes_, train_y)
        self.k = min(k, train_X.shape[0])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        idx = _neighbour_indices(self.train_X, X, self.k)
        votes = self.train_idx[idx]
        probs = np.zeros((X.shape[0], self.classes_.size))
        for col in range(self.k):
            probs[np.arange(X.shape[0]), votes[:, col]] += 1.0
        return probs / self.k

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def fit_knn_regressor(spec, X: np.ndarray, y: np.ndarray, k: int) -> KNNRegressor:
    X, y = check_training_inputs(X, y)
    return KNNRegressor(spec, X.copy(), y.copy(), k)


def fit_knn_classifier(spec, X: np.ndarray, y: np.ndarray, k: int) -> KNNClassifier:
    X, y = check_training_inputs(X, y)
    return KNNClassifier(spec, X.copy(), y.copy(), k)
