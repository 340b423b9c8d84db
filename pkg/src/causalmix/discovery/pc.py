"""PC skeleton search and CPDAG orientation (v-structures plus Meek rules).

The stable variant freezes each node's neighbour set at the start of every
conditioning level, which makes the skeleton independent of the order in
which edges are tested. The plain variant shuffles the edge visit order with
the caller's generator, matching the classic order-dependent behaviour.
"""

from __future__ import annotations

import time
from itertools import combinations

import numpy as np

from ..errors import DataError, DiscoveryTimeout
from .citests import CITest

DIRECTED = 1
UNDIRECTED = 2


def pc_skeleton(
    data: np.ndarray | None,
    test: CITest,
    rng: np.random.Generator,
    stable: bool = False,
    max_cond_size: int = 3,
    deadline: float | None = None,
) -> tuple[np.ndarray, dict[tuple[int, int], frozenset[int]]]:
    """Prune a complete graph by conditional-independence tests.

    Returns the boolean adjacency matrix of the learned skeleton and the
    separating set recorded for every removed edge. Raises DiscoveryTimeout
    when `deadline` (time.monotonic reference) passes mid-search.
    """
    if data is not None:
        d = int(np.asarray(data).shape[1])
    elif test.n_nodes is not None:
        d = test.n_nodes
    else:
        raise DataError("pc_skeleton needs a data matrix or an oracle that knows its size")
    if d < 2:
        raise DataError("need at least 2 columns")

    adj = ~np.eye(d, dtype=bool)
    sepsets: dict[tuple[int, int], frozenset[int]] = {}

    for level in range(max_cond_size + 1):
        base = {x: sorted(np.nonzero(adj[x])[0].tolist()) for x in range(d)}
        pairs = [
            (x, y)
            for x in range(d)
            for y in range(d)
            if x != y and adj[x, y] and len(base[x]) - 1 >= level
        ]
        if not pairs:
            break
        if not stable:
            rng.shuffle(pairs)
        for x, y in pairs:
            if not adj[x, y]:
                continue
            pool = [v for v in (base[x] if stable else sorted(np.nonzero(adj[x])[0].tolist())) if v != y]
            if len(pool) < level:
                continue
            for subset in combinations(pool, level):
                if deadline is not None and time.monotonic() > deadline:
                    raise DiscoveryTimeout(f"conditioning level {level} exceeded the time cap")
                if test.independent(data, x, y, subset):
                    adj[x, y] = adj[y, x] = False
                    sepsets[(min(x, y), max(x, y))] = frozenset(subset)
                    break
    return adj, sepsets


def _orient_v_structures(
    adj: np.ndarray, sepsets: dict[tuple[int, int], frozenset[int]]
) -> tuple[np.ndarray, np.ndarray]:
    """Collect collider orientations by votes; conflicting votes cancel out,
    which keeps the result independent of triple enumeration order."""
    d = adj.shape[0]
    votes: set[tuple[int, int]] = set()
    for k in range(d):
        nbrs = sorted(np.nonzero(adj[k])[0].tolist())
        for i, j in combinations(nbrs, 2):
            if adj[i, j]:
                continue
            sep = sepsets.get((min(i, j), max(i, j)))
            if sep is not None and k not in sep:
                votes.add((i, k))
                votes.add((j, k))
    directed = np.zeros((d, d), dtype=bool)
    undirected = adj.copy()
    for a, b in votes:
        if (b, a) in votes:
            continue
        if undirected[a, b]:
            undirected[a, b] = undirected[b, a] = False
            directed[a, b] = True
    return directed, undirected


def _meek_closure(directed: np.ndarray, undirected: np.ndarray) -> None:
    """Apply Meek rules 1-4 until no undirected edge can be forced."""
    d = directed.shape[0]

    def adjacent(a: int, b: int) -> bool:
        return bool(directed[a, b] or directed[b, a] or undirected[a, b])

    def orient(a: int, b: int) -> bool:
        if undirected[a, b]:
            undirected[a, b] = undirected[b, a] = False
            directed[a, b] = True
            return True
        return False

    changed = True
    while changed:
        changed = False
        for a in range(d):
            for b in range(d):
                if not undirected[a, b]:
                    continue
                # R1: c -> a, a - b, c not adjacent to b  =>  a -> b
                if any(directed[c, a] and not adjacent(c, b) for c in range(d)):
                    changed |= orient(a, b)
                    continue
                # R2: a -> c -> b and a - b  =>  a -> b
                if any(directed[a, c] and directed[c, b] for c in range(d)):
                    changed |= orient(a, b)
                    continue
                # R3: a - c, a - e, c -> b, e -> b, c and e not adjacent  =>  a -> b
                spokes = [c for c in range(d) if undirected[a, c] and directed[c, b]]
                if any(
                    not adjacent(c, e)
                    for idx, c in enumerate(spokes)
                    for e in spokes[idx + 1 :]
                ):
                    changed |= orient(a, b)
                    continue
                # R4: a - c, c -> e, e -> b, c not adjacent to b  =>  a -> b
                if any(
                    undirected[a, c]
                    and not adjacent(c, b)
                    and any(directed[c, e] and directed[e, b] for e in range(d))
                    for c in range(d)
                ):
                    changed |= orient(a, b)


def pc_orient(
    adj: np.ndarray, sepsets: dict[tuple[int, int], frozenset[int]]
) -> np.ndarray:
    """Orient a skeleton into a CPDAG matrix: 1 = directed i->j, 2 = undirected
    (written to both cells), 0 = no edge."""
    directed, undirected = _orient_v_structures(adj, sepsets)
    _meek_closure(directed, undirected)
    d = adj.shape[0]
    cpdag = np.zeros((d, d), dtype=int)
    cpdag[directed] = DIRECTED
    cpdag[undirected] = UNDIRECTED
    return cpdag
