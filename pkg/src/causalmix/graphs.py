"""Directed acyclic graphs and d-separation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .errors import DataError


@dataclass(frozen=True)
class Dag:
    """DAG over nodes 0..n-1 with an ordered, duplicate-free edge tuple."""

    n_nodes: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        seen = set()
        for p, c in self.edges:
            if p == c:
                raise DataError(f"self-loop on node {p}")
            if not (0 <= p < self.n_nodes and 0 <= c < self.n_nodes):
                raise DataError(f"edge ({p},{c}) out of range")
            if (p, c) in seen:
                raise DataError(f"duplicate edge ({p},{c})")
            seen.add((p, c))
        self.topological_order()  # raises on cycles

    def parents(self, node: int) -> list[int]:
        return sorted(p for p, c in self.edges if c == node)

    def children(self, node: int) -> list[int]:
        return sorted(c for p, c in self.edges if p == node)

    def topological_order(self) -> list[int]:
        indegree = [0] * self.n_nodes
        out: dict[int, list[int]] = {i: [] for i in range(self.n_nodes)}
        for p, c in self.edges:
            indegree[c] += 1
            out[p].append(c)
        ready = sorted(i for i in range(self.n_nodes) if indegree[i] == 0)
        queue = deque(ready)
        order: list[int] = []
        while queue:
            node = queue.popleft()
            order.append(node)
            for child in sorted(out[node]):
                indegree[child] -= 1
                if indegree[child] == 0:
                    queue.append(child)
        if len(order) != self.n_nodes:
            raise DataError("graph contains a cycle")
        return order

    def ancestors(self, nodes: Iterable[int]) -> set[int]:
        """Nodes plus everything with a directed path into them."""
        parents_of: dict[int, list[int]] = {i: [] for i in range(self.n_nodes)}
        for p, c in self.edges:
            parents_of[c].append(p)
        result = set(nodes)
        queue = deque(result)
        while queue:
            node = queue.popleft()
            for p in parents_of[node]:
                if p not in result:
                    result.add(p)
                    queue.append(p)
        return result


def d_separated(dag: Dag, i: int, j: int, cond: Iterable[int]) -> bool:
    """Exact d-separation via the moralized ancestral graph.

    i and j are d-separated by Z iff they are disconnected in the moral graph
    of the subgraph induced on the ancestors of {i, j} union Z, after deleting Z.
    """
    z = set(cond)
    if i == j:
        return False
    relevant = dag.ancestors({i, j} | z)
    adjacency: dict[int, set[int]] = {node: set() for node in relevant}
    for p, c in dag.edges:
        if p in relevant and c in relevant:
            adjacency[p].add(c)
            adjacency[c].add(p)
    # marry co-parents of every retained node
    for node in relevant:
        parents = [p for p, c in dag.edges if c == node and p in relevant]
        for a_idx in range(len(parents)):
            for b_idx in range(a_idx + 1, len(parents)):
                adjacency[parents[a_idx]].add(parents[b_idx])
                adjacency[parents[b_idx]].add(parents[a_idx])
    # BFS avoiding conditioned nodes
    if i in z or j in z:
        return True
    seen = {i}
    queue = deque([i])
    while queue:
        node = queue.popleft()
        for nxt in adjacency[node]:
            if nxt in z or nxt in seen:
                continue
            if nxt == j:
                return False
            seen.add(nxt)
            queue.append(nxt)
    return True
