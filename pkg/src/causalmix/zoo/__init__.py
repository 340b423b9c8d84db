"""Self-contained statistical learners: regressors, classifiers, densities."""

from .specs import (
    ClassifierFamily,
    ClassifierSpec,
    DensityFamily,
    DensitySpec,
    FitDiagnostics,
    RegressorFamily,
    RegressorSpec,
    fit_classifier,
    fit_density,
    fit_regressor,
    sample_density,
)

__all__ = [
    "ClassifierFamily",
    "ClassifierSpec",
    "DensityFamily",
    "DensitySpec",
    "FitDiagnostics",
    "RegressorFamily",
    "RegressorSpec",
    "fit_classifier",
    "fit_density",
    "fit_regressor",
    "sample_density",
]
