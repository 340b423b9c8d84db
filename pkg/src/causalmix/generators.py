"""Synthetic data generator arms and the real/synthetic batch mixer.

Arms: identity baseline, feature/target re-augmentation, density+classifier
mixed model, and the SCM generator. The batch mixer produces source-tagged
batches with a fixed real fraction per batch for the weighted objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .discovery.ensemble import ProbAdjacency
from .errors import ConfigError, DataError
from .scm import QualityTier, fit_scm, force_target_sink, sample_dag, sample_scm
from .tables import ColumnKind, Schema, Table
from .zoo import (
    ClassifierFamily,
    ClassifierSpec,
    DensityFamily,
    DensitySpec,
    fit_classifier,
    fit_density,
    sample_density,
)

DEFAULT_N_SYNTHETIC = 20_000

#: arm names accepted in configs but intentionally not implemented
UNIMPLEMENTED_ARMS = ("tabebm", "ctgan")


def generate_default(train: Table) -> Table:
    """Baseline arm: the training table itself, unchanged."""
    return train


@dataclass(frozen=True)
class TableAugmentConfig:
    subsample_active: bool = True
    min_ratio: float = 0.5
    max_ratio: float = 1.0
    include_old_target_features: str = "always"  # always | never | random
    resample_target_active: bool = True
    include_old_target_candidates: str = "random"  # always | never | random
    use_dataset_num_classes: bool = True
    min_discrete_values: int = 2
    max_discrete_values: int = 10

    def __post_init__(self) -> None:
        if not (0.5 <= self.min_ratio <= self.max_ratio <= 1.0):
            raise ConfigError("feature ratios must satisfy 0.5 <= min <= max <= 1.0")
        for policy in (self.include_old_target_features, self.include_old_target_candidates):
            if policy not in ("always", "never", "random"):
                raise ConfigError(f"unknown old-target policy {policy!r}")
        if not 2 <= self.min_discrete_values <= self.max_discrete_values:
            raise ConfigError("discrete value range must satisfy 2 <= min <= max")


def discretize_column(values: np.ndarray, n_classes: int) -> tuple[np.ndarray, dict[float, int]]:
    """Map the n_classes-1 most frequent values to their own classes and pool
    the rest into the final class. Frequency ties break toward the smaller value.
    """
    uniq, counts = np.unique(values, return_counts=True)
    order = np.lexsort((uniq, -counts))  # count desc, value asc
    top = uniq[order][: n_classes - 1]
    mapping = {float(v): i for i, v in enumerate(top)}
    rest_class = min(len(mapping), n_classes - 1)
    out = np.array([mapping.get(float(v), rest_class) for v in values], dtype=float)
    return out, mapping


def generate_table_augment(
    generator_table: Table, cfg: TableAugmentConfig, rng: np.random.Generator
) -> Table:
    """Build an augmented view: subsample feature columns, optionally re-pick
    the target among them, and discretize it when numeric or high-cardinality.
    """
    table = generator_table
    if table.d < 2:
        raise DataError("table augmentation needs at least 2 columns")
    data = table.numeric_data()
    if np.isnan(data).any():
        raise DataError("table augmentation requires fully imputed data")
    old_target = table.schema.target_index
    features = list(table.schema.feature_indices())

    kept = list(features)
    include_old = True
    if cfg.subsample_active:
        ratio = float(rng.uniform(cfg.min_ratio, cfg.max_ratio))
        n_keep = max(1, int(np.ceil(ratio * len(features))))
        kept = sorted(int(i) for i in rng.choice(features, size=n_keep, replace=False))
        if cfg.include_old_target_features == "always":
            include_old = True
        elif cfg.include_old_target_features == "never":
            include_old = False
        else:
            include_old = bool(rng.random() < ratio)

    if not cfg.resample_target_active:
        if not include_old:
            raise DataError(
                "old target excluded from the kept columns but target resampling is disabled"
            )
        new_target = old_target
    else:
        pool = list(kept)
        policy = cfg.include_old_target_candidates
        old_in_pool = policy == "always" or (policy == "random" and bool(rng.random() < 0.5))
        if old_in_pool:
            pool.append(old_target)
        if not pool:
            raise DataError("no eligible target candidate under the configured policy")
        new_target = int(rng.choice(pool))

    columns = sorted(set(kept) | ({old_target} if include_old else set()) | {new_target})
    names = [table.schema.names[j] for j in columns]
    kinds = [table.schema.kind_of(j) for j in columns]
    out = data[:, columns].copy()
    target_pos = columns.index(new_target)

    target_values = out[:, target_pos]
    if cfg.use_dataset_num_classes:
        n_classes = int(np.unique(data[:, old_target]).size)
        n_classes = max(n_classes, 2)
    else:
        n_classes = int(rng.integers(cfg.min_discrete_values, cfg.max_discrete_values + 1))
    cardinality = int(np.unique(target_values).size)
    if kinds[target_pos] is ColumnKind.NUMERIC or cardinality > n_classes:
        out[:, target_pos], _ = discretize_column(target_values, n_classes)
        kinds[target_pos] = ColumnKind.CATEGORICAL

    schema = Schema(tuple(zip(names, kinds)), target_pos)
    return Table(schema, out)


def sample_mixed_model_classifier_spec(rng: np.random.Generator) -> ClassifierSpec:
    """Draw a classifier family and hyperparameters from the search spaces."""

    def log_uniform_int(lo: int, hi: int) -> int:
        return int(round(np.exp(rng.uniform(np.log(lo), np.log(hi)))))

    family = (
        ClassifierFamily.DECISION_TREE,
        ClassifierFamily.RANDOM_FOREST,
        ClassifierFamily.GRAD_BOOST_TREES,
        ClassifierFamily.MLP,
    )[int(rng.integers(0, 4))]
    if family is ClassifierFamily.RANDOM_FOREST:
        params = {
            "n_estimators": log_uniform_int(10, 500),
            "criterion": ["gini", "log_loss", "entropy"][int(rng.integers(0, 3))],
            "max_depth": log_uniform_int(10, 100),
            "min_samples_split": int(rng.integers(2, 21)),
            "min_samples_leaf": int(rng.integers(1, 11)),
            "max_leaf_nodes": int(rng.integers(10, 101)),
            "bootstrap": bool(rng.integers(0, 2)),
        }
    elif family is ClassifierFamily.DECISION_TREE:
        params = {
            "criterion": ["gini", "entropy", "log_loss"][int(rng.integers(0, 3))],
            "splitter": ["best", "random"][int(rng.integers(0, 2))],
            "max_depth": log_uniform_int(5, 100),
            "min_samples_split": int(rng.integers(2, 21)),
            "min_samples_leaf": int(rng.integers(1, 11)),
            "max_features": [0.1, 0.25, 0.5, 0.75, 1.0, "sqrt", "log2", None][
                int(rng.integers(0, 8))
            ],
        }
    elif family is ClassifierFamily.GRAD_BOOST_TREES:
        params = {
            "learning_rate": float(rng.uniform(0.01, 1.0)),
            "n_estimators": int(rng.integers(50, 1001)),
            "max_leaf_nodes": int(rng.integers(5, 101)),
            "max_depth": int(rng.integers(3, 16)),
            "min_samples_leaf": int(rng.integers(5, 101)),
            "l2_regularization": float(rng.uniform(0.0, 1.0)),
        }
    else:
        params = {
            "hidden_layer_sizes": int(rng.integers(1, 101)),
            "activation": ["relu", "logistic", "tanh"][int(rng.integers(0, 3))],
            "alpha": float(rng.uniform(0.0001, 0.1)),
            "learning_rate_init": float(rng.uniform(0.0001, 0.01)),
            "max_iter": int(rng.integers(100, 1001)),
        }
    return ClassifierSpec(family, params)


def sample_density_spec(rng: np.random.Generator, n_rows: int) -> DensitySpec:
    family = (DensityFamily.GMM, DensityFamily.KDE, DensityFamily.UNIFORM)[
        int(rng.integers(0, 3))
    ]
    if family is DensityFamily.GMM:
        return DensitySpec(family, n_components=int(rng.integers(1, min(10, n_rows) + 1)))
    return DensitySpec(family)


def generate_mixed_model(
    generator_table: Table,
    rng: np.random.Generator,
    n_synthetic: int = DEFAULT_N_SYNTHETIC,
    density_spec: DensitySpec | None = None,
    classifier_spec: ClassifierSpec | None = None,
    max_attempts: int = 10,
) -> Table:
    """Sample features from a fitted density estimator and label them with a
    classifier trained on the real feature-target pairs (hard labels)."""
    table = generator_table
    data = table.numeric_data()
    if np.isnan(data).any():
        raise DataError("mixed-model generation requires fully imputed data")
    feat_idx = list(table.schema.feature_indices())
    target_idx = table.schema.target_index
    X = data[:, feat_idx]
    y = data[:, target_idx]
    if np.unique(y).size < 2:
        raise DataError("mixed-model generation needs at least 2 target classes")
    kinds = [table.schema.kind_of(j) for j in feat_idx]

    last_error: Exception | None = None
    for _ in range(max_attempts):
        d_spec = density_spec or sample_density_spec(rng, table.n)
        c_spec = classifier_spec or sample_mixed_model_classifier_spec(rng)
        try:
            density = fit_density(d_spec, X, rng, kinds=kinds)
            classifier = fit_classifier(c_spec, X, y, rng)
        except (ValueError, np.linalg.LinAlgError) as exc:
            last_error = exc
            if density_spec is not None and classifier_spec is not None:
                break
            continue
        synthetic_X = sample_density(density, n_synthetic, rng)
        labels = classifier.predict(synthetic_X)
        out = np.empty((n_synthetic, table.d))
        out[:, feat_idx] = synthetic_X
        out[:, target_idx] = labels
        return Table(table.schema, out)
    raise DataError(f"mixed-model generator failed after {max_attempts} attempts: {last_error}")


def generate_scm(
    generator_table: Table,
    adjacency: ProbAdjacency,
    tier: QualityTier,
    rng: np.random.Generator,
    n_synthetic: int = DEFAULT_N_SYNTHETIC,
    target_as_child: bool = False,
) -> Table:
    """One SCM draw: sample a DAG from the edge frequencies, fit mechanisms,
    and propagate noise through the model.

    With target_as_child on, the sampled DAG is rewritten so the target is a
    sink (fitted last, always as a child).
    """
    if adjacency.d != generator_table.d:
        raise DataError(
            f"adjacency is {adjacency.d}x{adjacency.d} but table has {generator_table.d} columns"
        )
    dag = sample_dag(adjacency, rng)
    if target_as_child:
        dag = force_target_sink(dag, generator_table.schema.target_index)
    scm = fit_scm(dag, generator_table, tier, rng)
    return sample_scm(scm, n_synthetic, rng)


@dataclass
class MixPlan:
    """Fine-tuning data recipe: real table, synthetic pool, and the real-row
    weight alpha. `regenerate` rebuilds the pool (used with refresh_interval)."""

    real: Table
    synthetic: Table | None = None
    alpha: float = 0.5
    regenerate: Callable[[np.random.Generator], Table] | None = None
    refresh_interval: int | None = None
    sources: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.real is None or self.real.n == 0:
            raise DataError("mix plan needs a non-empty real source")
        if self.synthetic is not None and self.synthetic.schema != self.real.schema:
            raise DataError("synthetic pool schema differs from the real schema")

    def ensure_synthetic(self, rng: np.random.Generator) -> None:
        if self.synthetic is None and self.regenerate is not None:
            self.synthetic = self.regenerate(rng)

    def refresh(self, rng: np.random.Generator) -> None:
        if self.regenerate is not None:
            self.synthetic = self.regenerate(rng)


@dataclass(frozen=True)
class Batch:
    X: np.ndarray
    y: np.ndarray
    real_mask: np.ndarray  # True for rows drawn from the real source


def real_rows_per_batch(alpha: float, batch_size: int) -> int:
    """Half-up rounding of alpha * batch_size."""
    return int(np.floor(alpha * batch_size + 0.5))


def build_mix_batches(
    plan: MixPlan, batch_size: int, rng: np.random.Generator
) -> Iterator[Batch]:
    """Infinite stream of source-tagged batches.

    Each batch holds round(alpha * batch_size) real rows and the remainder
    synthetic rows, both sampled with replacement. Deterministic given rng.
    """
    if batch_size < 2:
        raise ConfigError("batch_size must be >= 2")
    n_real = real_rows_per_batch(plan.alpha, batch_size)
    n_syn = batch_size - n_real
    if n_syn > 0 and (plan.synthetic is None or plan.synthetic.n == 0):
        raise DataError("mix plan requires a synthetic pool for alpha < 1")

    real_X, real_y = plan.real.features_and_target()
    if n_syn > 0:
        syn_X, syn_y = plan.synthetic.features_and_target()

    while True:
        parts_X = []
        parts_y = []
        if n_real > 0:
            idx = rng.integers(0, real_X.shape[0], size=n_real)
            parts_X.append(real_X[idx])
            parts_y.append(real_y[idx])
        if n_syn > 0:
            idx = rng.integers(0, syn_X.shape[0], size=n_syn)
            parts_X.append(syn_X[idx])
            parts_y.append(syn_y[idx])
        mask = np.zeros(batch_size, dtype=bool)
        mask[:n_real] = True
        yield Batch(np.vstack(parts_X), np.concatenate(parts_y), mask)
