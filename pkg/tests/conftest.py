"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from causalmix.graphs import Dag
from causalmix.tables import ColumnKind, Schema, Table

settings.register_profile("ci", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("ci")


def random_dag(d: int, p: float, rng: np.random.Generator) -> Dag:
    """Random DAG via a random topological order and independent edge coins."""
    order = rng.permutation(d)
    edges = []
    for i in range(d):
        for j in range(i + 1, d):
            if rng.random() < p:
                edges.append((int(order[i]), int(order[j])))
    return Dag(d, tuple(edges))


def v_structures(dag: Dag) -> set[tuple[int, int, int]]:
    adjacent = {(a, b) for a, b in dag.edges} | {(b, a) for a, b in dag.edges}
    result = set()
    for k in range(dag.n_nodes):
        for i, j in itertools.combinations(dag.parents(k), 2):
            if (i, j) not in adjacent:
                result.add((min(i, j), max(i, j), k))
    return result


def brute_force_cpdag(dag: Dag) -> np.ndarray:
    """CPDAG by enumeration: union of all acyclic orientations of the skeleton
    with the same v-structures (Markov equivalence by the Verma-Pearl
    characterization). Independent of the production orientation code."""
    skeleton = sorted({(min(a, b), max(a, b)) for a, b in dag.edges})
    target = v_structures(dag)
    d = dag.n_nodes
    directions: dict[tuple[int, int], set[tuple[int, int]]] = {e: set() for e in skeleton}
    n_members = 0
    for bits in itertools.product((0, 1), repeat=len(skeleton)):
        edges = tuple(
            (a, b) if bit == 0 else (b, a) for (a, b), bit in zip(skeleton, bits)
        )
        try:
            candidate = Dag(d, edges)
        except Exception:
            continue
        if v_structures(candidate) != target:
            continue
        n_members += 1
        for key, edge in zip(skeleton, edges):
            directions[key].add(edge)
    assert n_members >= 1
    cpdag = np.zeros((d, d), dtype=int)
    for key, dirs in directions.items():
        if len(dirs) == 2:
            a, b = key
            cpdag[a, b] = cpdag[b, a] = 2
        else:
            a, b = next(iter(dirs))
            cpdag[a, b] = 1
    return cpdag


def brute_force_d_separated(dag: Dag, i: int, j: int, cond: set[int]) -> bool:
    """Path-enumeration d-separation (second route, independent of the
    moralization-based production implementation)."""
    neighbours: dict[int, set[int]] = {n: set() for n in range(dag.n_nodes)}
    for a, b in dag.edges:
        neighbours[a].add(b)
        neighbours[b].add(a)
    edge_set = set(dag.edges)

    descendants: dict[int, set[int]] = {}
    for node in range(dag.n_nodes):
        seen = {node}
        stack = [node]
        while stack:
            cur = stack.pop()
            for child in dag.children(cur):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        descendants[node] = seen

    def blocked(path: list[int]) -> bool:
        for idx in range(1, len(path) - 1):
            prev, node, nxt = path[idx - 1], path[idx], path[idx + 1]
            collider = (prev, node) in edge_set and (nxt, node) in edge_set
            if collider:
                if not (descendants[node] & cond):
                    return True
            else:
                if node in cond:
                    return True
        return False

    stack = [[i]]
    while stack:
        path = stack.pop()
        tail = path[-1]
        if tail == j:
            if not blocked(path):
                return False
            continue
        for nxt in sorted(neighbours[tail]):
            if nxt not in path:
                stack.append(path + [nxt])
    return True


def make_numeric_table(data: np.ndarray, target_index: int | None = None) -> Table:
    """All-numeric table; target column (default last) marked categorical."""
    data = np.asarray(data, dtype=float)
    d = data.shape[1]
    target = d - 1 if target_index is None else target_index
    columns = tuple(
        (f"x{j}" if j != target else "y", ColumnKind.NUMERIC if j != target else ColumnKind.CATEGORICAL)
        for j in range(d)
    )
    return Table(Schema(columns, target), data)


def make_scm_dataset(path: Path, seed: int, flavour: str = "chain", n: int = 1000) -> Path:
    """Ground-truth-SCM classification dataset written as CSV."""
    rng = np.random.default_rng(seed)
    if flavour == "chain":
        x0 = rng.normal(0, 1, n)
        x1 = 1.2 * x0 + rng.normal(0, 0.6, n)
        x2 = -0.8 * x1 + rng.normal(0, 0.6, n)
        x3 = rng.normal(0, 1, n)
        logits = 1.4 * x2 + 0.9 * x3
        features = [x0, x1, x2, x3]
    elif flavour == "collider":
        x0 = rng.normal(0, 1, n)
        x1 = rng.normal(0, 1, n)
        x2 = x0 + x1 + rng.normal(0, 0.5, n)
        x3 = 0.7 * x2 + rng.normal(0, 0.8, n)
        x4 = rng.normal(0, 1, n)
        logits = x2 - x4
        features = [x0, x1, x2, x3, x4]
    else:  # mixed: one discrete feature influencing the rest
        g = rng.integers(0, 3, n).astype(float)
        x0 = g - 1.0 + rng.normal(0, 0.7, n)
        x1 = 0.9 * x0 + rng.normal(0, 0.5, n)
        x2 = rng.normal(0, 1, n)
        logits = 0.8 * x1 + 0.8 * x2 + 0.4 * (g - 1.0)
        features = [g, x0, x1, x2]
    prob = 1.0 / (1.0 + np.exp(-logits))
    y = (rng.random(n) < prob).astype(float)
    if np.unique(y).size < 2:  # pragma: no cover
        y[0] = 1.0 - y[0]
    names = [f"x{i}" for i in range(len(features))] + ["y"]
    data = np.column_stack(features + [y])
    with path.open("w") as fh:
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(format(v, ".10g") for v in row) + "\n")
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
