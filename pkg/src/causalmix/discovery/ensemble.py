"""Multi-run discovery ensemble aggregated into an edge-frequency matrix.

Each run draws its own significance level and algorithm variant, subsamples
rows/columns when the input exceeds the caps, and is bounded by a wall-clock
cap. Completed runs contribute edges; every run counts in the denominator
(the frequency convention), unless the endpoint-present denominator is
switched on.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import DataError, DiscoveryTimeout
from ..seeds import child_rng
from ..tables import Table
from .citests import CITest, FisherZTest
from .pc import pc_orient, pc_skeleton


@dataclass(frozen=True)
class EnsembleConfig:
    n_runs: int = 100
    alpha_min: float = 0.005
    alpha_max: float = 0.1
    max_rows: int = 1000
    max_cols: int = 50
    time_cap_seconds: float = 1200.0
    max_cond_size: int = 3
    endpoint_present_denominator: bool = False

    def __post_init__(self) -> None:
        if self.n_runs < 1 or self.max_rows < 1 or self.max_cols < 2:
            raise DataError("ensemble caps must be positive")
        if not 0 < self.alpha_min <= self.alpha_max < 1:
            raise DataError("alpha range must satisfy 0 < min <= max < 1")


@dataclass(frozen=True)
class DiscoveryRunStats:
    index: int
    variant: str
    alpha: float
    completed: bool
    duration_seconds: float
    n_rows: int
    columns_present: tuple[int, ...]


@dataclass(frozen=True)
class ProbAdjacency:
    """Directed-edge discovery frequencies; zero diagonal, entries in [0, 1]."""

    c: np.ndarray
    total_runs: int
    column_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DataError("adjacency frequencies must be square")
        if np.any(np.diag(c) != 0.0):
            raise DataError("adjacency diagonal must be zero")
        if np.any((c < 0) | (c > 1)):
            raise DataError("adjacency frequencies must lie in [0, 1]")
        c.setflags(write=False)

    @property
    def d(self) -> int:
        return int(self.c.shape[0])


@dataclass(frozen=True)
class DiscoveryResult:
    adjacency: ProbAdjacency
    runs: tuple[DiscoveryRunStats, ...] = field(default_factory=tuple)


def write_adjacency_csv(adjacency: ProbAdjacency, path) -> None:
    """d x d frequency matrix as CSV; the header row carries the column names."""
    names = adjacency.column_names or tuple(f"x{i}" for i in range(adjacency.d))
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in adjacency.c:
            writer.writerow([format(v, ".17g") for v in row])


def read_adjacency_csv(path, total_runs: int = 0) -> ProbAdjacency:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty adjacency file")
    names = tuple(rows[0])
    matrix = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    if matrix.shape != (len(names), len(names)):
        raise DataError(f"{path}: adjacency must be square with one row per column")
    return ProbAdjacency(matrix, total_runs=total_runs, column_names=names)


def run_discovery_ensemble(
    table: Table,
    n_runs: int = 100,
    base_seed: int = 0,
    config: EnsembleConfig | None = None,
    test_factory: Callable[[float], CITest] | None = None,
    deadline: float | None = None,
) -> DiscoveryResult:
    """Run `n_runs` independent discovery runs and aggregate edge frequencies.

    Even run indices use plain PC, odd indices the stable variant, so both
    algorithms get exactly half of the runs. Per-run seeds derive from
    (base_seed, run index); the aggregation is a deterministic reduction.
    """
    cfg = config or EnsembleConfig()
    if cfg.n_runs != n_runs:
        cfg = EnsembleConfig(**{**cfg.__dict__, "n_runs": n_runs})
    data = table.numeric_data()
    if np.isnan(data).any():
        raise DataError("discovery requires fully imputed data")
    n, d = data.shape
    factory = test_factory or FisherZTest

    counts = np.zeros((d, d), dtype=float)
    present = np.zeros((d, d), dtype=float)
    runs: list[DiscoveryRunStats] = []
    n_completed = 0
    for idx in range(cfg.n_runs):
        rng = child_rng(base_seed, idx)
        log_alpha = rng.uniform(math.log(cfg.alpha_min), math.log(cfg.alpha_max))
        alpha = float(math.exp(log_alpha))
        stable = idx % 2 == 1
        variant = "pc_stable" if stable else "pc"

        row_idx = np.arange(n)
        if n > cfg.max_rows:
            row_idx = np.sort(rng.choice(n, size=cfg.max_rows, replace=False))
        col_idx = np.arange(d)
        if d > cfg.max_cols:
            col_idx = np.sort(rng.choice(d, size=cfg.max_cols, replace=False))
        sub = data[np.ix_(row_idx, col_idx)]

        present[np.ix_(col_idx, col_idx)] += 1.0
        run_deadline = time.monotonic() + cfg.time_cap_seconds
        if deadline is not None:
            run_deadline = min(run_deadline, deadline)
        start = time.monotonic()
        completed = True
        try:
            adj, sepsets = pc_skeleton(
                sub,
                factory(alpha),
                rng,
                stable=stable,
                max_cond_size=cfg.max_cond_size,
                deadline=run_deadline,
            )
            cpdag = pc_orient(adj, sepsets)
        except DiscoveryTimeout:
            completed = False
        duration = time.monotonic() - start
        if completed:
            n_completed += 1
            # a directed edge occupies one cell, an undirected edge both cells
            counts[np.ix_(col_idx, col_idx)] += (cpdag != 0).astype(float)
        runs.append(
            DiscoveryRunStats(
                index=idx,
                variant=variant,
                alpha=alpha,
                completed=completed,
                duration_seconds=duration,
                n_rows=int(row_idx.size),
                columns_present=tuple(int(c) for c in col_idx),
            )
        )

    if n_completed == 0:
        raise DataError("no discovery run completed within the time cap")

    if cfg.endpoint_present_denominator:
        with np.errstate(divide="ignore", invalid="ignore"):
            freq = np.where(present > 0, counts / present, 0.0)
    else:
        freq = counts / float(cfg.n_runs)
    np.fill_diagonal(freq, 0.0)
    adjacency = ProbAdjacency(freq, total_runs=cfg.n_runs, column_names=table.schema.names)
    return DiscoveryResult(adjacency=adjacency, runs=tuple(runs))
