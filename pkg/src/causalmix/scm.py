"""Structural causal model engine: DAG sampling from edge frequencies,
additive-noise mechanism fitting, and synthetic table sampling.

Mechanisms follow the additive-noise form: numeric children are a fitted
regressor plus empirical residual resampling; categorical children sample
labels from a fitted classifier's predicted probabilities; roots resample
their observed marginals (numeric roots with Gaussian kernel jitter).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .discovery.ensemble import ProbAdjacency
from .errors import DataError
from .graphs import Dag
from .tables import ColumnKind, Table
from .zoo import (
    ClassifierFamily,
    ClassifierSpec,
    RegressorFamily,
    RegressorSpec,
    fit_classifier,
    fit_regressor,
)


class QualityTier(str, Enum):
    GOOD = "good"
    BETTER = "better"


_NUMERIC_POOLS = {
    QualityTier.GOOD: (
        RegressorFamily.LINEAR,
        RegressorFamily.POLYNOMIAL_LINEAR,
        RegressorFamily.GRAD_BOOST_TREES,
    ),
    QualityTier.BETTER: (
        RegressorFamily.LINEAR,
        RegressorFamily.POLYNOMIAL_LINEAR,
        RegressorFamily.GRAD_BOOST_TREES,
        RegressorFamily.RIDGE,
        RegressorFamily.LASSO,
        RegressorFamily.RANDOM_FOREST,
        RegressorFamily.KNN,
    ),
}

_CATEGORICAL_POOLS = {
    QualityTier.GOOD: (
        ClassifierFamily.LOGISTIC,
        ClassifierFamily.POLYNOMIAL_LOGISTIC,
        ClassifierFamily.GRAD_BOOST_TREES,
    ),
    QualityTier.BETTER: (
        ClassifierFamily.LOGISTIC,
        ClassifierFamily.POLYNOMIAL_LOGISTIC,
        ClassifierFamily.GRAD_BOOST_TREES,
        ClassifierFamily.RANDOM_FOREST,
        ClassifierFamily.KNN,
    ),
}


def numeric_pool(tier: QualityTier) -> tuple[RegressorFamily, ...]:
    return _NUMERIC_POOLS[tier]


def categorical_pool(tier: QualityTier) -> tuple[ClassifierFamily, ...]:
    return _CATEGORICAL_POOLS[tier]


def sample_dag(adjacency: ProbAdjacency | np.ndarray, rng: np.random.Generator) -> Dag:
    """Draw a DAG: each directed edge independently with its frequency, then
    resolve bidirectional pairs by dropping one side uniformly, then delete a
    uniformly chosen edge from each detected cycle until acyclic.

    Cycle detection is depth-first from the lowest node index with sorted
    neighbour order, so the procedure is deterministic given the generator.
    """
    c = adjacency.c if isinstance(adjacency, ProbAdjacency) else np.asarray(adjacency, dtype=float)
    d = c.shape[0]
    draws = rng.random((d, d))
    edge = draws < c
    np.fill_diagonal(edge, False)
    for i in range(d):
        for j in range(i + 1, d):
            if edge[i, j] and edge[j, i]:
                if rng.random() < 0.5:
                    edge[i, j] = False
                else:
                    edge[j, i] = False

    children: dict[int, list[int]] = {
        i: sorted(np.nonzero(edge[i])[0].tolist()) for i in range(d)
    }

    def find_cycle() -> list[tuple[int, int]] | None:
        color = [0] * d  # 0 unvisited, 1 on stack, 2 done
        for start in range(d):
            if color[start] != 0:
                continue
            stack: list[tuple[int, list[int]]] = [(start, list(children[start]))]
            color[start] = 1
            path = [start]
            while stack:
                node, todo = stack[-1]
                if todo:
                    nxt = todo.pop(0)
                    if not edge[node, nxt]:
                        continue
                    if color[nxt] == 1:
                        cycle_nodes = path[path.index(nxt):] + [nxt]
                        return list(zip(cycle_nodes[:-1], cycle_nodes[1:]))
                    if color[nxt] == 0:
                        color[nxt] = 1
                        path.append(nxt)
                        stack.append((nxt, list(children[nxt])))
                else:
                    stack.pop()
                    path.pop()
                    color[node] = 2
        return None

    while True:
        cycle = find_cycle()
        if cycle is None:
            break
        drop = cycle[int(rng.integers(0, len(cycle)))]
        edge[drop[0], drop[1]] = False
        children[drop[0]].remove(drop[1])

    edges = tuple(
        (i, j) for i in range(d) for j in range(d) if edge[i, j]
    )
    return Dag(d, edges)


def force_target_sink(dag: Dag, target: int) -> Dag:
    """Rewrite a DAG so the target node is always a child fitted last:
    its outgoing edges are dropped, and if it ends up parentless every
    other node becomes a parent."""
    edges = [(p, c) for p, c in dag.edges if p != target]
    if not any(c == target for _, c in edges):
        edges.extend((other, target) for other in range(dag.n_nodes) if other != target)
    return Dag(dag.n_nodes, tuple(edges))


@dataclass(frozen=True)
class RootNumeric:
    values: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class RootCategorical:
    codes: np.ndarray


@dataclass(frozen=True)
class NumericChild:
    parents: tuple[int, ...]
    model: object
    residuals: np.ndarray


@dataclass(frozen=True)
class CategoricalChild:
    parents: tuple[int, ...]
    model: object


@dataclass(frozen=True)
class ConstantCategorical:
    code: float


Mechanism = RootNumeric | RootCategorical | NumericChild | CategoricalChild | ConstantCategorical


@dataclass(frozen=True)
class ScmModel:
    dag: Dag
    mechanisms: tuple[Mechanism, ...]
    table: Table  # training table; carries the schema
    tier: QualityTier

    @property
    def schema(self):
        return self.table.schema


def _silverman_bandwidth(values: np.ndarray) -> float:
    n = values.size
    if n < 2:
        return 0.0
    sigma = float(values.std(ddof=1))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sigma, iqr / 1.34) if iqr > 0 else sigma
    if spread <= 0:
        return 0.0
    return 0.9 * spread * n ** (-0.2)


def fit_scm(
    dag: Dag,
    table: Table,
    tier: QualityTier,
    rng: np.random.Generator,
    numeric_families: tuple[RegressorFamily, ...] | None = None,
    categorical_families: tuple[ClassifierFamily, ...] | None = None,
) -> ScmModel:
    """Fit one mechanism per node in topological order.

    Families are drawn uniformly from the tier's pool per node; explicit
    family tuples override the pool (used to pin mechanisms in experiments).
    """
    data = table.numeric_data()
    if np.isnan(data).any():
        raise DataError("SCM fitting requires fully imputed data")
    if dag.n_nodes != table.d:
        raise DataError(f"DAG has {dag.n_nodes} nodes but table has {table.d} columns")
    num_pool = numeric_families or numeric_pool(tier)
    cat_pool = categorical_families or categorical_pool(tier)

    mechanisms: list[Mechanism | None] = [None] * dag.n_nodes
    for node in dag.topological_order():
        kind = table.schema.kind_of(node)
        parents = tuple(dag.parents(node))
        y = data[:, node]
        if not parents:
            if kind is ColumnKind.NUMERIC:
                mechanisms[node] = RootNumeric(y.copy(), _silverman_bandwidth(y))
            else:
                mechanisms[node] = RootCategorical(y.copy())
            continue
        X = data[:, list(parents)]
        if kind is ColumnKind.NUMERIC:
            family = num_pool[int(rng.integers(0, len(num_pool)))]
            model = fit_regressor(RegressorSpec(family), X, y, rng)
            residuals = y - model.predict(X)
            mechanisms[node] = NumericChild(parents, model, residuals)
        else:
            classes = np.unique(y)
            if classes.size < 2:
                mechanisms[node] = ConstantCategorical(float(classes[0]))
                continue
            family = cat_pool[int(rng.integers(0, len(cat_pool)))]
            model = fit_classifier(ClassifierSpec(family), X, y, rng)
            mechanisms[node] = CategoricalChild(parents, model)

    return ScmModel(dag, tuple(mechanisms), table, tier)


def sample_scm(scm: ScmModel, n: int, rng: np.random.Generator) -> Table:
    """Propagate n exogenous draws through the SCM in topological order."""
    if n < 1:
        raise DataError("sample count must be >= 1")
    d = scm.dag.n_nodes
    out = np.empty((n, d))
    for node in scm.dag.topological_order():
        mech = scm.mechanisms[node]
        if isinstance(mech, RootNumeric):
            values = rng.choice(mech.values, size=n)
            if mech.bandwidth > 0:
                values = values + rng.normal(0.0, mech.bandwidth, size=n)
            out[:, node] = values
        elif isinstance(mech, RootCategorical):
            out[:, node] = rng.choice(mech.codes, size=n)
        elif isinstance(mech, NumericChild):
            pred = mech.model.predict(out[:, list(mech.parents)])
            noise = mech.residuals[rng.integers(0, mech.residuals.size, size=n)]
            out[:, node] = pred + noise
        elif isinstance(mech, CategoricalChild):
            probs = mech.model.predict_proba(out[:, list(mech.parents)])
            cumulative = np.cumsum(probs, axis=1)
            u = rng.random(n)
            picks = (u[:, None] > cumulative).sum(axis=1)
            picks = np.minimum(picks, probs.shape[1] - 1)
            out[:, node] = mech.model.classes_[picks]
        elif isinstance(mech, ConstantCategorical):
            out[:, node] = mech.code
        else:  # pragma: no cover
            raise DataError(f"unknown mechanism for node {node}")
    return Table(scm.table.schema, out)
