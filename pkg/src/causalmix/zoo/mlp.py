"""Single-hidden-layer perceptron classifier trained by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from .base import FitDiagnostics, FittedModel, check_training_inputs, softmax

_ACTIVATIONS = {
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(float)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "logistic": (
        lambda z: 1.0 / (1.0 + np.exp(-z)),
        lambda z: (s := 1.0 / (1.0 + np.exp(-z))) * (1.0 - s),
    ),
}


class MLPClassifier(FittedModel):
    def __init__(self, spec, W1, b1, W2, b2, activation: str, classes: np.ndarray):
        super().__init__(spec, W1.shape[0])
        self.W1, self.b1, self.W2, self.b2 = W1, b1, W2, b2
        self.activation = activation
        self.classes_ = classes

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        act, _ = _ACTIVATIONS[self.activation]
        hidden = act(X @ self.W1 + self.b1)
        return softmax(hidden @ self.W2 + self.b2)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def fit_mlp_classifier(
    spec,
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    hidden_size: int = 32,
    activation: str = "relu",
    alpha: float = 1e-4,
    learning_rate: float = 0.05,
    max_iter: int = 300,
) -> MLPClassifier:
    X, y = check_training_inputs(X, y)
    if activation not in _ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("MLP needs at least 2 classes")
    n, d = X.shape
    k = classes.size
    onehot = (y[:, None] == classes[None, :]).astype(float)
    act, act_grad = _ACTIVATIONS[activation]

    limit1 = np.sqrt(6.0 / (d + hidden_size))
    limit2 = np.sqrt(6.0 / (hidden_size + k))
    W1 = rng.uniform(-limit1, limit1, size=(d, hidden_size))
    b1 = np.zeros(hidden_size)
    W2 = rng.uniform(-limit2, limit2, size=(hidden_size, k))
    b2 = np.zeros(k)

    diag = FitDiagnostics(converged=False, n_iter=max_iter)
    for it in range(max_iter):
        z1 = X @ W1 + b1
        h = act(z1)
        probs = softmax(h @ W2 + b2)
        delta2 = (probs - onehot) / n
        gW2 = h.T @ delta2 + alpha * W2
        gb2 = delta2.sum(axis=0)
        delta1 = (delta2 @ W2.T) * act_grad(z1)
        gW1 = X.T @ delta1 + alpha * W1
        gb1 = delta1.sum(axis=0)
        if max(np.abs(gW1).max(), np.abs(gW2).max()) < 1e-7:
            diag.converged = True
            diag.n_iter = it
            break
        W1 -= learning_rate * gW1
        b1 -= learning_rate * gb1
        W2 -= learning_rate * gW2
        b2 -= learning_rate * gb2

    model = MLPClassifier(spec, W1, b1, W2, b2, activation, classes)
    model.diagnostics = diag
    return model
