"""Learner specifications and fitting dispatchers.

A spec names a model family plus family-specific hyperparameters; the fit
functions validate inputs, route to the concrete learner, and return fitted
models that are deterministic given (data, spec, rng seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .base import FitDiagnostics, FittedModel, check_training_inputs
from .density import COV_REG_DEFAULT, KDEDensity, UniformDensity, fit_gmm
from .linear import fit_lasso, fit_linear, fit_logistic, fit_ridge
from .mlp import fit_mlp_classifier
from .neighbors import fit_knn_classifier, fit_knn_regressor
from .trees import (
    TreeParams,
    fit_forest,
    fit_gradboost_classifier,
    fit_gradboost_regressor,
    fit_tree_classifier,
    fit_tree_regressor,
    resolve_max_features,
)


class RegressorFamily(str, Enum):
    LINEAR = "linear"
    POLYNOMIAL_LINEAR = "polynomial_linear"
    RIDGE = "ridge"
    LASSO = "lasso"
    KNN = "knn"
    DECISION_TREE = "decision_tree"
    RANDOM_FOREST = "random_forest"
    GRAD_BOOST_TREES = "grad_boost_trees"


class ClassifierFamily(str, Enum):
    LOGISTIC = "logistic"
    POLYNOMIAL_LOGISTIC = "polynomial_logistic"
    DECISION_TREE = "decision_tree"
    RANDOM_FOREST = "random_forest"
    KNN = "knn"
    GRAD_BOOST_TREES = "grad_boost_trees"
    MLP = "mlp"


class DensityFamily(str, Enum):
    GMM = "gmm"
    KDE = "kde"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class RegressorSpec:
    family: RegressorFamily
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        _validate_common(self.params)


@dataclass(frozen=True)
class ClassifierSpec:
    family: ClassifierFamily
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        _validate_common(self.params)


@dataclass(frozen=True)
class DensitySpec:
    family: DensityFamily
    n_components: int = 1
    bandwidth: float | None = None
    cov_reg: float = COV_REG_DEFAULT

    def __post_init__(self) -> None:
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.cov_reg < 0:
            raise ValueError("cov_reg must be >= 0")


def _validate_common(params: dict) -> None:
    if params.get("degree", 1) < 1:
        raise ValueError("polynomial degree must be >= 1")
    if params.get("lam", 0.0) < 0:
        raise ValueError("regularization strength must be >= 0")
    if params.get("k", 1) < 1:
        raise ValueError("neighbour count k must be >= 1")
    depth = params.get("max_depth")
    if depth is not None and depth < 1:
        raise ValueError("tree depth must be >= 1")


def _tree_params(params: dict, d: int) -> TreeParams:
    return TreeParams(
        criterion=params.get("criterion", "gini"),
        max_depth=params.get("max_depth"),
        min_samples_split=params.get("min_samples_split", 2),
        min_samples_leaf=params.get("min_samples_leaf", 1),
        max_features=resolve_max_features(params.get("max_features"), d),
        max_leaf_nodes=params.get("max_leaf_nodes"),
        splitter=params.get("splitter", "best"),
    )


def fit_regressor(
    spec: RegressorSpec, X: np.ndarray, y: np.ndarray, rng: np.random.Generator
) -> FittedModel:
    X, y = check_training_inputs(X, y)
    if X.shape[0] < 2:
        raise ValueError("regressor fitting needs at least 2 rows")
    p = spec.params
    fam = spec.family
    if fam is RegressorFamily.LINEAR:
        return fit_linear(spec, X, y, degree=1)
    if fam is RegressorFamily.POLYNOMIAL_LINEAR:
        return fit_linear(spec, X, y, degree=p.get("degree", 2))
    if fam is RegressorFamily.RIDGE:
        return fit_ridge(spec, X, y, lam=p.get("lam", 1.0))
    if fam is RegressorFamily.LASSO:
        return fit_lasso(spec, X, y, lam=p.get("lam", 0.01))
    if fam is RegressorFamily.KNN:
        return fit_knn_regressor(spec, X, y, k=p.get("k", 5))
    if fam is RegressorFamily.DECISION_TREE:
        params = _tree_params({"criterion": "mse", **p}, X.shape[1])
        return fit_tree_regressor(spec, X, y, params, rng)
    if fam is RegressorFamily.RANDOM_FOREST:
        params = _tree_params({"criterion": "mse", **p}, X.shape[1])
        return fit_forest(
            spec, X, y, params, rng,
            n_estimators=p.get("n_estimators", 50),
            bootstrap=p.get("bootstrap", True),
            classification=False,
        )
    if fam is RegressorFamily.GRAD_BOOST_TREES:
        return fit_gradboost_regressor(
            spec, X, y, rng,
            n_estimators=p.get("n_estimators", 100),
            learning_rate=p.get("learning_rate", 0.1),
            max_depth=p.get("max_depth", 3),
            min_samples_leaf=p.get("min_samples_leaf", 1),
            max_leaf_nodes=p.get("max_leaf_nodes"),
            l2=p.get("l2_regularization", 0.0),
        )
    raise ValueError(f"unknown regressor family {fam}")


def fit_classifier(
    spec: ClassifierSpec, X: np.ndarray, y: np.ndarray, rng: np.random.Generator
) -> FittedModel:
    X, y = check_training_inputs(X, y)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("classifier fitting needs at least 2 classes")
    if X.shape[0] < classes.size:
        raise ValueError("need at least as many rows as classes")
    p = spec.params
    fam = spec.family
    if fam is ClassifierFamily.LOGISTIC:
        return fit_logistic(spec, X, y, degree=1, max_iter=p.get("max_iter", 1000))
    if fam is ClassifierFamily.POLYNOMIAL_LOGISTIC:
        return fit_logistic(spec, X, y, degree=p.get("degree", 2), max_iter=p.get("max_iter", 1000))
    if fam is ClassifierFamily.DECISION_TREE:
        return fit_tree_classifier(spec, X, y, _tree_params(p, X.shape[1]), rng)
    if fam is ClassifierFamily.RANDOM_FOREST:
        return fit_forest(
            spec, X, y, _tree_params(p, X.shape[1]), rng,
            n_estimators=p.get("n_estimators", 50),
            bootstrap=p.get("bootstrap", True),
            classification=True,
        )
    if fam is ClassifierFamily.KNN:
        return fit_knn_classifier(spec, X, y, k=p.get("k", 5))
    if fam is ClassifierFamily.GRAD_BOOST_TREES:
        return fit_gradboost_classifier(
            spec, X, y, rng,
            n_estimators=p.get("n_estimators", 100),
            learning_rate=p.get("learning_rate", 0.1),
            max_depth=p.get("max_depth", 3),
            min_samples_leaf=p.get("min_samples_leaf", 1),
            max_leaf_nodes=p.get("max_leaf_nodes"),
            l2=p.get("l2_regularization", 0.0),
        )
    if fam is ClassifierFamily.MLP:
        return fit_mlp_classifier(
            spec, X, y, rng,
            hidden_size=p.get("hidden_layer_sizes", 32),
            activation=p.get("activation", "relu"),
            alpha=p.get("alpha", 1e-4),
            learning_rate=p.get("learning_rate_init", 0.05),
            max_iter=p.get("max_iter", 300),
        )
    raise ValueError(f"unknown classifier family {fam}")


def fit_density(
    spec: DensitySpec,
    X: np.ndarray,
    rng: np.random.Generator,
    kinds=None,
) -> FittedModel:
    """Fit a density estimator; `kinds` (per-column) lets the uniform model and
    code snapping distinguish categorical columns."""
    X, _ = check_training_inputs(X)
    if spec.family is DensityFamily.GMM:
        return fit_gmm(spec, X, spec.n_components, rng, cov_reg=spec.cov_reg, kinds=kinds)
    if spec.family is DensityFamily.KDE:
        model = KDEDensity(spec, X, spec.bandwidth, kinds=kinds)
        model.diagnostics = FitDiagnostics()
        return model
    if spec.family is DensityFamily.UNIFORM:
        model = UniformDensity(spec, X, kinds=kinds)
        model.diagnostics = FitDiagnostics()
        return model
    raise ValueError(f"unknown density family {spec.family}")


def sample_density(model: FittedModel, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("sample count must be >= 1")
    return model.sample(n, rng)
