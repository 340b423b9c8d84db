"""Conditional-independence tests: Fisher-z on data, d-separation on a known DAG."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.stats import norm

from ..errors import DataError
from ..graphs import Dag, d_separated

_R_CLAMP = 1.0 - 1e-12


def fisher_z(
    data: np.ndarray,
    i: int,
    j: int,
    cond: Sequence[int],
    alpha: float,
) -> tuple[float, bool]:
    """Fisher-z partial-correlation test of columns i and j given `cond`.

    The partial correlation is the Pearson correlation of the residuals after
    regressing both columns on the conditioning set (with intercept). Returns
    (two-sided p-value, independent flag) with independence meaning p > alpha.
    """
    data = np.asarray(data, dtype=float)
    cond = tuple(cond)
    n = data.shape[0]
    if n <= len(cond) + 3:
        raise DataError(f"fisher_z needs more than |cond|+3 = {len(cond) + 3} rows, got {n}")
    x = data[:, i]
    y = data[:, j]
    if cond:
        A = np.hstack([np.ones((n, 1)), data[:, list(cond)]])
        rx = x - A @ np.linalg.lstsq(A, x, rcond=None)[0]
        ry = y - A @ np.linalg.lstsq(A, y, rcond=None)[0]
    else:
        rx = x - x.mean()
        ry = y - y.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    r = float(rx @ ry) / denom if denom > 0 else 0.0
    r = max(-_R_CLAMP, min(_R_CLAMP, r))
    z = 0.5 * math.log((1.0 + r) / (1.0 - r))
    stat = abs(z) * math.sqrt(n - len(cond) - 3)
    p = float(2.0 * norm.sf(stat))
    return p, p > alpha


class CITest:
    """Callable conditional-independence decision used by the PC algorithm."""

    #: node count when the test does not need a data matrix (oracle); else None
    n_nodes: int | None = None

    def independent(self, data: np.ndarray | None, i: int, j: int, cond: Sequence[int]) -> bool:
        raise NotImplementedError


class FisherZTest(CITest):
    def __init__(self, alpha: float):
        if not 0.0 < alpha < 1.0:
            raise DataError(f"alpha must be in (0, 1), got {alpha}")
        self.alpha = alpha

    def independent(self, data, i, j, cond):
        if data is None:
            raise DataError("FisherZTest requires a data matrix")
        return fisher_z(data, i, j, cond, self.alpha)[1]


class DSeparationOracle(CITest):
    """Exact test against a reference DAG; ignores the data matrix."""

    def __init__(self, dag: Dag):
        self.dag = dag
        self.alpha = None
        self.n_nodes = dag.n_nodes

    def independent(self, data, i, j, cond):
        return d_separated(self.dag, i, j, set(cond))
