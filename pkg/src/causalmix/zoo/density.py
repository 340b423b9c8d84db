"""Density estimators: Gaussian mixture (EM), Gaussian KDE, and per-column uniform.

The mixture fit escalates its covariance regularizer by a factor of 10 on
numerical singularity, up to 10 times, before falling back to the uniform
estimator. Categorical columns sampled by the continuous estimators are
snapped to the nearest observed code so code domains survive generation.
"""

from __future__ import annotations

import numpy as np

from ..tables import ColumnKind
from .base import FitDiagnostics, FittedModel, check_training_inputs

GMM_MAX_ITER = 100
GMM_TOL = 1e-6
COV_REG_DEFAULT = 1e-6
MAX_COV_ESCALATIONS = 10


class _SingularCovariance(Exception):
    pass


def _snap_to_codes(samples: np.ndarray, kinds, observed_codes) -> np.ndarray:
    if kinds is None:
        return samples
    for j, kind in enumerate(kinds):
        if kind is ColumnKind.CATEGORICAL and observed_codes[j] is not None:
            codes = observed_codes[j]
            diffs = np.abs(samples[:, j][:, None] - codes[None, :])
            samples[:, j] = codes[np.argmin(diffs, axis=1)]
    return samples


def _observed_codes(X: np.ndarray, kinds):
    if kinds is None:
        return None
    return [
        np.unique(X[:, j]) if kind is ColumnKind.CATEGORICAL else None
        for j, kind in enumerate(kinds)
    ]


class DensityModel(FittedModel):
    """Base for densities; subclasses implement `_draw`."""

    def __init__(self, spec, n_features: int, kinds=None, observed_codes=None):
        super().__init__(spec, n_features)
        self.kinds = kinds
        self.observed_codes = observed_codes

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ValueError("sample count must be >= 1")
        return _snap_to_codes(self._draw(n, rng), self.kinds, self.observed_codes)

    def _draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class UniformDensity(DensityModel):
    """Continuous columns uniform over the observed [min, max]; categorical
    columns uniform over the observed codes."""

    def __init__(self, spec, X: np.ndarray, kinds=None):
        super().__init__(spec, X.shape[1], kinds, _observed_codes(X, kinds))
        self.lows = X.min(axis=0)
        self.highs = X.max(axis=0)

    def _draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty((n, self.n_features))
        for j in range(self.n_features):
            if self.kinds is not None and self.kinds[j] is ColumnKind.CATEGORICAL:
                out[:, j] = rng.choice(self.observed_codes[j], size=n)
            else:
                out[:, j] = rng.uniform(self.lows[j], self.highs[j], size=n)
        return out


class KDEDensity(DensityModel):
    """Gaussian product-kernel KDE; sampling picks a training point uniformly
    and adds kernel noise."""

    def __init__(self, spec, X: np.ndarray, bandwidth: float | None, kinds=None):
        super().__init__(spec, X.shape[1], kinds, _observed_codes(X, kinds))
        self.train = X.copy()
        n, d = X.shape
        if bandwidth is not None:
            self.bandwidths = np.full(d, float(bandwidth))
        else:
            # Scott's rule, per dimension
            sigma = X.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
            self.bandwidths = sigma * n ** (-1.0 / (d + 4))

    def _draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, self.train.shape[0], size=n)
        noise = rng.standard_normal((n, self.n_features)) * self.bandwidths
        return self.train[idx] + noise


class GaussianMixtureDensity(DensityModel):
    def __init__(self, spec, weights, means, covs, chols, kinds, observed_codes, diagnostics):
        super().__init__(spec, means.shape[1], kinds, observed_codes)
        self.weights = weights
        self.means = means
        self.covs = covs
        self.chols = chols
        self.diagnostics = diagnostics

    def _draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comps = rng.choice(self.weights.size, size=n, p=self.weights)
        z = rng.standard_normal((n, self.n_features))
        out = np.empty((n, self.n_features))
        for k in range(self.weights.size):
            mask = comps == k
            if mask.any():
                out[mask] = self.means[k] + z[mask] @ self.chols[k].T
        return out


def _kmeanspp_centers(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(0, n)]]
    for _ in range(1, k):
        d2 = np.min(
            [((X - c) ** 2).sum(axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(X[rng.integers(0, n)])
            continue
        probs = d2 / total
        centers.append(X[rng.choice(n, p=probs)])
    return np.array(centers)


def _log_gaussian(X: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d = X.shape[1]
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise _SingularCovariance from None
    diff = X - mean
    solved = np.linalg.solve(chol, diff.T)
    maha = (solved**2).sum(axis=0)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    if not np.isfinite(logdet):
        raise _SingularCovariance
    return -0.5 * (d * np.log(2 * np.pi) + logdet + maha), chol


def _fit_gmm_once(X: np.ndarray, k: int, cov_reg: float, rng: np.random.Generator):
    """One EM fit; raises _SingularCovariance on numerical trouble.

    The log-likelihood is checked to be non-decreasing at every iteration.
    """
    n, d = X.shape
    k = min(k, n)
    means = _kmeanspp_centers(X, k, rng)
    base_cov = np.cov(X.T, ddof=0).reshape(d, d) + cov_reg * np.eye(d)
    covs = np.array([base_cov.copy() for _ in range(k)])
    weights = np.full(k, 1.0 / k)

    prev_ll = -np.inf
    n_iter = 0
    for it in range(GMM_MAX_ITER):
        n_iter = it + 1
        log_probs = np.empty((n, k))
        chols = []
        for j in range(k):
            lp, chol = _log_gaussian(X, means[j], covs[j])
            log_probs[:, j] = lp + np.log(max(weights[j], 1e-300))
            chols.append(chol)
        m = log_probs.max(axis=1, keepdims=True)
        log_norm = m + np.log(np.exp(log_probs - m).sum(axis=1, keepdims=True))
        ll = float(log_norm.sum())
        if not np.isfinite(ll):
            raise _SingularCovariance
        if ll < prev_ll - 1e-8 * max(1.0, abs(prev_ll)):
            raise RuntimeError(f"EM log-likelihood decreased: {prev_ll} -> {ll}")
        resp = np.exp(log_probs - log_norm)
        nk = resp.sum(axis=0)
        if np.any(nk <= 1e-12):
            raise _SingularCovariance
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        for j in range(k):
            diff = X - means[j]
            covs[j] = (resp[:, j][:, None] * diff).T @ diff / nk[j] + cov_reg * np.eye(d)
        if abs(ll - prev_ll) < GMM_TOL * max(1.0, abs(ll)):
            prev_ll = ll
            break
        prev_ll = ll

    chols = []
    for j in range(k):
        _, chol = _log_gaussian(X[:1], means[j], covs[j])
        chols.append(chol)
    return weights, means, covs, chols, n_iter


def fit_gmm(
    spec,
    X: np.ndarray,
    n_components: int,
    rng: np.random.Generator,
    cov_reg: float = COV_REG_DEFAULT,
    kinds=None,
) -> DensityModel:
    X, _ = check_training_inputs(X)
    seeds = rng.integers(0, 2**63, size=MAX_COV_ESCALATIONS + 1)
    diag = FitDiagnostics()
    reg = cov_reg
    for attempt in range(MAX_COV_ESCALATIONS + 1):
        try:
            weights, means, covs, chols, n_iter = _fit_gmm_once(
                X, n_components, reg, np.random.default_rng(seeds[attempt])
            )
            diag.n_iter = n_iter
            diag.cov_reg_escalations = attempt
            return GaussianMixtureDensity(
                spec, weights, means, covs, chols, kinds, _observed_codes(X, kinds), diag
            )
        except _SingularCovariance:
            if attempt < MAX_COV_ESCALATIONS:
                diag.cov_reg_escalations = attempt + 1
                reg = reg * 10.0
    fallback = UniformDensity(spec, X, kinds)
    diag.fell_back_to_uniform = True
    diag.converged = False
    fallback.diagnostics = diag
    return fallback
