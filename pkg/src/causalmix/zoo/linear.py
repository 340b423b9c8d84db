"""Linear-family learners: least squares, ridge, lasso, and multinomial logistic.

All solvers are deterministic. The lasso uses cyclic coordinate descent; the
logistic classifier uses plain gradient descent with a Lipschitz step size so
its gradient can be checked against finite differences.
"""

from __future__ import annotations

import numpy as np

from .base import FitDiagnostics, FittedModel, check_training_inputs, softmax

LASSO_TOL = 1e-6
LASSO_MAX_SWEEPS = 10_000
LOGISTIC_L2 = 1e-4
LOGISTIC_MAX_ITER = 1000
RANK_FALLBACK_LAMBDA = 1e-6


def polynomial_expand(X: np.ndarray, degree: int) -> np.ndarray:
    """Per-feature power expansion [x, x^2, ..., x^degree]; degree 1 is the identity."""
    if degree < 1:
        raise ValueError("polynomial degree must be >= 1")
    return np.hstack([X**p for p in range(1, degree + 1)])


def _solve_least_squares(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    """SVD least squares; rank-deficient designs fall back to a tiny ridge."""
    coef, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        lam = RANK_FALLBACK_LAMBDA
        gram = A.T @ A + lam * np.eye(A.shape[1])
        coef = np.linalg.solve(gram, A.T @ y)
    return coef


class LinearRegressor(FittedModel):
    def __init__(self, spec, coef: np.ndarray, intercept: float, degree: int = 1):
        super().__init__(spec, coef.shape[0] // degree)
        self.coef = coef
        self.intercept = float(intercept)
        self.degree = degree

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        return polynomial_expand(X, self.degree) @ self.coef + self.intercept


def fit_linear(spec, X: np.ndarray, y: np.ndarray, degree: int = 1) -> LinearRegressor:
    X, y = check_training_inputs(X, y)
    expanded = polynomial_expand(X, degree)
    A = np.hstack([np.ones((X.shape[0], 1)), expanded])
    full = _solve_least_squares(A, y)
    return LinearRegressor(spec, full[1:], full[0], degree=degree)


def fit_ridge(spec, X: np.ndarray, y: np.ndarray, lam: float) -> LinearRegressor:
    """Closed-form ridge with an unpenalized intercept."""
    X, y = check_training_inputs(X, y)
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    gram = Xc.T @ Xc + lam * np.eye(X.shape[1])
    coef = np.linalg.solve(gram, Xc.T @ (y - y_mean))
    return LinearRegressor(spec, coef, y_mean - x_mean @ coef)


def fit_lasso(spec, X: np.ndarray, y: np.ndarray, lam: float) -> LinearRegressor:
    """Cyclic coordinate descent on (1/2n)||y - b - Xw||^2 + lam*||w||_1."""
    X, y = check_training_inputs(X, y)
    n, d = X.shape
    col_scale = (X**2).sum(axis=0) / n
    coef = np.zeros(d)
    intercept = float(y.mean())
    resid = y - intercept
    diag = FitDiagnostics(converged=False)
    for sweep in range(LASSO_MAX_SWEEPS):
        max_delta = 0.0
        for j in range(d):
            if col_scale[j] == 0.0:
                continue
            old = coef[j]
            rho = (X[:, j] @ resid) / n + col_scale[j] * old
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_scale[j]
            if new != old:
                resid -= X[:, j] * (new - old)
                coef[j] = new
                max_delta = max(max_delta, abs(new - old))
        shift = float(resid.mean())
        if shift != 0.0:
            intercept += shift
            resid -= shift
            max_delta = max(max_delta, abs(shift))
        if max_delta < LASSO_TOL:
            diag.converged = True
            diag.n_iter = sweep + 1
            break
    else:
        diag.n_iter = LASSO_MAX_SWEEPS
    model = LinearRegressor(spec, coef, intercept)
    model.diagnostics = diag
    return model


def logistic_loss_grad(
    W: np.ndarray, A: np.ndarray, onehot: np.ndarray, l2: float
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy with L2 on the non-bias rows, and its gradient."""
    n = A.shape[0]
    probs = softmax(A @ W)
    eps = 1e-15
    loss = -np.mean(np.sum(onehot * np.log(np.clip(probs, eps, 1.0)), axis=1))
    penalty_mask = np.ones_like(W)
    penalty_mask[0, :] = 0.0
    loss += 0.5 * l2 * float(np.sum((W * penalty_mask) ** 2))
    grad = A.T @ (probs - onehot) / n + l2 * W * penalty_mask
    return float(loss), grad


class LogisticClassifier(FittedModel):
    def __init__(self, spec, W: np.ndarray, classes: np.ndarray, degree: int = 1):
        super().__init__(spec, (W.shape[0] - 1) // degree)
        self.W = W
        self.classes_ = classes
        self.degree = degree

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = self._check_input(X)
        A = np.hstack([np.ones((X.shape[0], 1)), polynomial_expand(X, self.degree)])
        return softmax(A @ self.W)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def fit_logistic(
    spec,
    X: np.ndarray,
    y: np.ndarray,
    degree: int = 1,
    l2: float = LOGISTIC_L2,
    max_iter: int = LOGISTIC_MAX_ITER,
) -> LogisticClassifier:
    """Multinomial logistic regression by full-batch gradient descent.

    The step size is 1/L with L an upper bound on the softmax-loss Lipschitz
    constant, so the loss decreases monotonically.
    """
    X, y = check_training_inputs(X, y)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("logistic regression needs at least 2 classes")
    expanded = polynomial_expand(X, degree)
    A = np.hstack([np.ones((X.shape[0], 1)), expanded])
    n, p = A.shape
    onehot = (y[:, None] == classes[None, :]).astype(float)
    W = np.zeros((p, classes.size))
    smax = np.linalg.norm(A, 2)
    lr = 1.0 / (smax**2 / (2.0 * n) + l2)
    diag = FitDiagnostics(converged=False)
    for it in range(max_iter):
        _, grad = logistic_loss_grad(W, A, onehot, l2)
        if np.max(np.abs(grad)) < 1e-7:
            diag.converged = True
            diag.n_iter = it
            break
        W -= lr * grad
    else:
        diag.n_iter = max_iter
    model = LogisticClassifier(spec, W, classes, degree=degree)
    model.diagnostics = diag
    return model
