"""Tabular dataset container: CSV ingestion, ordinal encoding, imputation,
z-score normalization, and capped stratified train/val/test splitting.

A :class:`Table` is immutable after construction. Cells are floats with NaN
marking missing values; categorical columns hold non-negative integer codes
(as floats). Freshly loaded CSVs may still carry raw category strings, in
which case the backing array has ``object`` dtype until
:func:`encode_categoricals` is applied.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError

MISSING_TOKENS = ("", "NA")


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Schema:
    """Ordered column names/kinds plus the designated target column."""

    columns: tuple[tuple[str, ColumnKind], ...]
    target_index: int

    def __post_init__(self) -> None:
        names = [name for name, _ in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DataError(f"duplicate column names: {dupes}")
        if not 0 <= self.target_index < len(self.columns):
            raise DataError(
                f"target_index {self.target_index} out of range for {len(self.columns)} columns"
            )

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    @property
    def kinds(self) -> tuple[ColumnKind, ...]:
        return tuple(kind for _, kind in self.columns)

    @property
    def target_name(self) -> str:
        return self.columns[self.target_index][0]

    @property
    def target_kind(self) -> ColumnKind:
        return self.columns[self.target_index][1]

    def kind_of(self, index: int) -> ColumnKind:
        return self.columns[index][1]

    def feature_indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.columns)) if i != self.target_index)

    def index_of(self, name: str) -> int:
        for i, (n, _) in enumerate(self.columns):
            if n == name:
                return i
        raise DataError(f"unknown column {name!r}")


@dataclass(frozen=True)
class Table:
    """n x d cell matrix plus its schema. Immutable; safe to share across threads."""

    schema: Schema
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim != 2:
            raise DataError("table data must be 2-dimensional")
        if self.data.shape[1] != len(self.schema.columns):
            raise DataError(
                f"data width {self.data.shape[1]} != schema width {len(self.schema.columns)}"
            )
        self.data.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def d(self) -> int:
        return int(self.data.shape[1])

    @property
    def is_encoded(self) -> bool:
        """True once no raw category strings remain (float backing array)."""
        return self.data.dtype.kind == "f"

    def numeric_data(self) -> np.ndarray:
        if not self.is_encoded:
            raise DataError("table still contains unencoded categorical cells")
        return self.data

    def column(self, index: int) -> np.ndarray:
        return self.data[:, index]

    def missing_mask(self) -> np.ndarray:
        if self.is_encoded:
            return np.isnan(self.data)
        mask = np.zeros(self.data.shape, dtype=bool)
        for i in range(self.data.shape[0]):
            for j in range(self.data.shape[1]):
                cell = self.data[i, j]
                if cell is None or (isinstance(cell, float) and math.isnan(cell)):
                    mask[i, j] = True
        return mask

    def features_and_target(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (X, y): feature matrix and target vector as float arrays."""
        arr = self.numeric_data()
        idx = list(self.schema.feature_indices())
        return arr[:, idx], arr[:, self.schema.target_index]

    def take_rows(self, indices: Sequence[int] | np.ndarray) -> "Table":
        return Table(self.schema, self.data[np.asarray(indices, dtype=int)].copy())

    def with_data(self, data: np.ndarray) -> "Table":
        return Table(self.schema, data)


@dataclass(frozen=True)
class CodeBook:
    """Invertible value->code maps for the columns encoded by :func:`encode_categoricals`."""

    per_column: dict[str, dict[object, int]] = field(default_factory=dict)

    def decode(self, column: str, code: int) -> object:
        inverse = {v: k for k, v in self.per_column[column].items()}
        return inverse[int(code)]

    def is_empty(self) -> bool:
        return not self.per_column


@dataclass(frozen=True)
class PreprocessStats:
    """Fitted per-column statistics; computed from the fitting table only."""

    means: dict[str, float] = field(default_factory=dict)
    stds: dict[str, float] | None = None
    modes: dict[str, float] = field(default_factory=dict)
    zscore_applied: bool = False


@dataclass(frozen=True)
class SplitBundle:
    train: Table
    val: Table
    test: Table
    fold_seed: int


def _parse_numeric(cell: str) -> float:
    return float(cell)


def _is_missing(cell: str) -> bool:
    return cell in MISSING_TOKENS


def load_csv(path: str | Path, schema_hint: Schema | None = None) -> Table:
    """Load an RFC 4180 CSV with a header row into a Table.

    Empty cells and the literal ``NA`` are missing. Column kinds come from the
    hint when given; otherwise a column is numeric iff every non-missing cell
    parses as a float. Categorical cells whose values all parse as non-negative
    integers are taken as pre-assigned codes (so round-tripping written tables
    preserves codes); anything else stays raw until :func:`encode_categoricals`.
    Without a hint the last column is the target.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows[0]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataError(f"{path}: duplicate header names {dupes}")
    d = len(header)
    body = rows[1:]
    for r, row in enumerate(body, start=1):
        if len(row) != d:
            raise DataError(f"{path}: row {r} has {len(row)} cells, expected {d}")

    if schema_hint is not None:
        if list(schema_hint.names) != header:
            raise DataError(
                f"{path}: header {header} does not match schema columns {list(schema_hint.names)}"
            )
        kinds = list(schema_hint.kinds)
        target_index = schema_hint.target_index
    else:
        kinds = []
        for j in range(d):
            numeric = True
            for row in body:
                cell = row[j]
                if _is_missing(cell):
                    continue
                try:
                    _parse_numeric(cell)
                except ValueError:
                    numeric = False
                    break
            kinds.append(ColumnKind.NUMERIC if numeric else ColumnKind.CATEGORICAL)
        target_index = d - 1

    columns: list[list[object]] = []
    any_raw = False
    for j in range(d):
        cells = [row[j] for row in body]
        if kinds[j] is ColumnKind.NUMERIC:
            parsed: list[object] = []
            for r, cell in enumerate(cells, start=1):
                if _is_missing(cell):
                    parsed.append(float("nan"))
                    continue
                try:
                    parsed.append(_parse_numeric(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: column {header[j]!r} hinted numeric but row {r} has {cell!r}"
                    ) from None
            columns.append(parsed)
        else:
            codes_ok = True
            coded: list[object] = []
            for cell in cells:
                if _is_missing(cell):
                    coded.append(float("nan"))
                    continue
                try:
                    value = _parse_numeric(cell)
                except ValueError:
                    codes_ok = False
                    break
                if not (value >= 0 and float(value).is_integer()):
                    codes_ok = False
                    break
                coded.append(value)
            if codes_ok:
                columns.append(coded)
            else:
                any_raw = True
                columns.append([None if _is_missing(c) else c for c in cells])

    n = len(body)
    if any_raw:
        data = np.empty((n, d), dtype=object)
        for j, col in enumerate(columns):
            for i, cell in enumerate(col):
                data[i, j] = cell
    else:
        data = np.empty((n, d), dtype=float)
        for j, col in enumerate(columns):
            data[:, j] = np.asarray(col, dtype=float)

    schema = Schema(tuple(zip(header, kinds)), target_index)
    return Table(schema, data)


def load_dataset(
    path: str | Path,
    target: str | None = None,
    column_kinds: dict[str, str] | None = None,
) -> Table:
    """Load a CSV applying an optional schema sidecar.

    `column_kinds` maps every column name to "numeric"/"categorical"; `target`
    names the target column. With only a target given, kinds are inferred and
    the target column is coerced to categorical (classification pipeline).
    """
    path = Path(path)
    if column_kinds is not None:
        if target is None:
            raise DataError("schema sidecar with column kinds also needs a target")
        with path.open(newline="") as fh:
            header = next(csv.reader(fh), None)
        if header is None:
            raise DataError(f"{path}: empty file")
        missing = [h for h in header if h not in column_kinds]
        if missing:
            raise DataError(f"{path}: schema sidecar missing columns {missing}")
        if target not in header:
            raise DataError(f"{path}: target column {target!r} not in header")
        kinds = tuple(ColumnKind(column_kinds[h].lower()) for h in header)
        schema = Schema(tuple(zip(header, kinds)), header.index(target))
        return load_csv(path, schema)
    table = load_csv(path)
    if target is None:
        return table
    idx = table.schema.index_of(target)
    columns = list(table.schema.columns)
    columns[idx] = (target, ColumnKind.CATEGORICAL)
    return load_csv(path, Schema(tuple(columns), idx))


def encode_categoricals(table: Table) -> tuple[Table, CodeBook]:
    """Map raw categorical values to codes 0..k-1 in first-appearance order.

    Columns that already hold numeric codes pass through untouched, which makes
    the operation idempotent. Missing cells stay missing.
    """
    if table.is_encoded:
        return table, CodeBook()

    data = np.empty(table.data.shape, dtype=float)
    books: dict[str, dict[object, int]] = {}
    for j, (name, kind) in enumerate(table.schema.columns):
        col = table.data[:, j]
        raw_present = any(isinstance(c, str) for c in col)
        if kind is ColumnKind.NUMERIC or not raw_present:
            for i, cell in enumerate(col):
                data[i, j] = float("nan") if cell is None else float(cell)
            continue
        mapping: dict[object, int] = {}
        for i, cell in enumerate(col):
            if cell is None or (isinstance(cell, float) and math.isnan(cell)):
                data[i, j] = float("nan")
                continue
            if cell not in mapping:
                mapping[cell] = len(mapping)
            data[i, j] = float(mapping[cell])
        books[name] = mapping
    return Table(table.schema, data), CodeBook(books)


def split_sizes(n: int) -> tuple[int, int, int]:
    """Capped split sizes (train, val, test): min(0.6N, 600) / min(0.2N, 200) / rest."""
    n_train = min(int(math.floor(0.6 * n)), 600)
    n_val = min(int(math.floor(0.2 * n)), 200)
    n_test = n - n_train - n_val
    return n_train, n_val, n_test


def _round_allocation(sizes: Sequence[int], class_counts: Sequence[int]) -> np.ndarray:
    """Integer S x C allocation with exact margins and every cell within +-1
    of its proportional value ``sizes[s] * counts[c] / N``.

    Uses exact integer arithmetic for the floors/remainders and resolves the
    round-up pattern as a small transportation problem (greedy seeding plus
    BFS augmentation), which is always feasible.
    """
    sizes = list(sizes)
    counts = list(class_counts)
    total = sum(counts)
    if sum(sizes) != total:
        raise DataError("allocation sizes do not sum to the row count")
    s_n, c_n = len(sizes), len(counts)
    floor = np.zeros((s_n, c_n), dtype=int)
    rem = np.zeros((s_n, c_n), dtype=int)  # remainder numerators over `total`
    for s in range(s_n):
        for c in range(c_n):
            prod = sizes[s] * counts[c]
            floor[s, c] = prod // total
            rem[s, c] = prod % total
    row_need = [sizes[s] - int(floor[s].sum()) for s in range(s_n)]
    col_need = [counts[c] - int(floor[:, c].sum()) for c in range(c_n)]
    up = np.zeros((s_n, c_n), dtype=bool)

    # Greedy: largest fractional remainders first.
    order = sorted(
        ((s, c) for s in range(s_n) for c in range(c_n) if rem[s, c] > 0),
        key=lambda sc: (-rem[sc[0], sc[1]], sc[0], sc[1]),
    )
    for s, c in order:
        if row_need[s] > 0 and col_need[c] > 0:
            up[s, c] = True
            row_need[s] -= 1
            col_need[c] -= 1

    # Augment any column still short: alternate unused/used cells until a row
    # with spare need is reached, then flip the path.
    for c in range(c_n):
        while col_need[c] > 0:
            parent: dict[tuple[str, int], tuple[str, int] | None] = {("c", c): None}
            queue: deque[tuple[str, int]] = deque([("c", c)])
            goal: tuple[str, int] | None = None
            while queue and goal is None:
                kind, idx = queue.popleft()
                if kind == "c":
                    for s in range(s_n):
                        if rem[s, idx] > 0 and not up[s, idx] and ("r", s) not in parent:
                            parent[("r", s)] = ("c", idx)
                            if row_need[s] > 0:
                                goal = ("r", s)
                                break
                            queue.append(("r", s))
                else:
                    for c2 in range(c_n):
                        if up[idx, c2] and ("c", c2) not in parent:
                            parent[("c", c2)] = ("r", idx)
                            queue.append(("c", c2))
            if goal is None:
                raise DataError("stratified allocation infeasible")  # pragma: no cover
            row_need[goal[1]] -= 1
            node: tuple[str, int] | None = goal
            while parent[node] is not None:
                prev = parent[node]
                if node[0] == "r":  # column -> row edge becomes a round-up
                    up[node[1], prev[1]] = True
                else:  # row -> column edge releases a round-up
                    up[prev[1], node[1]] = False
                node = prev
            col_need[c] -= 1

    return floor + up.astype(int)


def stratified_split(table: Table, fold_seed: int) -> SplitBundle:
    """Deterministic stratified split into train/val/test.

    Sizes follow :func:`split_sizes`. Rows are assigned in two stages (test
    drawn first, then val from the remainder) with per-class counts within
    +-1 of exact proportionality in every split.
    """
    if table.schema.target_kind is not ColumnKind.CATEGORICAL:
        raise DataError("stratified_split requires a categorical target")
    y = np.asarray(table.numeric_data()[:, table.schema.target_index])
    if np.isnan(y).any():
        raise DataError("target column contains missing values")
    classes, counts = np.unique(y, return_counts=True)
    for cls, cnt in zip(classes, counts):
        if cnt < 3:
            raise DataError(f"class {cls:g} has only {int(cnt)} members; need at least 3")

    n = table.n
    n_train, n_val, n_test = split_sizes(n)
    alloc = _round_allocation([n_test, n_val, n_train], counts.tolist())

    rng = np.random.default_rng(np.random.SeedSequence(int(fold_seed) & 0xFFFFFFFFFFFFFFFF))
    test_idx: list[int] = []
    val_idx: list[int] = []
    train_idx: list[int] = []
    for c, cls in enumerate(classes):
        members = np.nonzero(y == cls)[0]
        stage1 = rng.permutation(members)
        t = int(alloc[0, c])
        test_idx.extend(stage1[:t].tolist())
        remainder = rng.permutation(stage1[t:])
        v = int(alloc[1, c])
        val_idx.extend(remainder[:v].tolist())
        train_idx.extend(remainder[v:].tolist())

    bundle = SplitBundle(
        train=table.take_rows(sorted(train_idx)),
        val=table.take_rows(sorted(val_idx)),
        test=table.take_rows(sorted(test_idx)),
        fold_seed=int(fold_seed),
    )
    assert bundle.train.n == n_train and bundle.val.n == n_val and bundle.test.n == n_test
    return bundle


def impute(table: Table, stats: PreprocessStats | None = None) -> tuple[Table, PreprocessStats]:
    """Fill missing cells: numeric -> column mean, categorical -> column mode
    (ties -> smallest code). Supplied stats switch to transform mode.
    """
    data = table.numeric_data().copy()
    fit = stats is None
    means = {} if fit else dict(stats.means)
    modes = {} if fit else dict(stats.modes)
    for j, (name, kind) in enumerate(table.schema.columns):
        col = data[:, j]
        missing = np.isnan(col)
        if kind is ColumnKind.NUMERIC:
            if fit:
                present = col[~missing]
                if present.size == 0:
                    raise DataError(f"column {name!r} is entirely missing and no stats supplied")
                means[name] = float(present.mean())
            if missing.any():
                if name not in means:
                    raise DataError(f"no imputation mean for column {name!r}")
                col[missing] = means[name]
        else:
            if fit:
                present = col[~missing]
                if present.size == 0:
                    raise DataError(f"column {name!r} is entirely missing and no stats supplied")
                values, freq = np.unique(present, return_counts=True)
                modes[name] = float(values[np.argmax(freq)])  # ties: unique() sorts ascending
            if missing.any():
                if name not in modes:
                    raise DataError(f"no imputation mode for column {name!r}")
                col[missing] = modes[name]
    out_stats = PreprocessStats(
        means=means,
        stds=None if stats is None else stats.stds,
        modes=modes,
        zscore_applied=False if stats is None else stats.zscore_applied,
    )
    return table.with_data(data), out_stats


def zscore(table: Table, stats: PreprocessStats | None = None) -> tuple[Table, PreprocessStats]:
    """Standardize numeric columns to zero mean / unit population std.

    Constant columns map to all-zeros (std treated as 1). Categorical columns
    are untouched. Supplied stats (with stds) switch to transform mode.
    """
    data = table.numeric_data().copy()
    fit = stats is None or stats.stds is None
    means = {} if stats is None else dict(stats.means)
    stds: dict[str, float] = {} if fit else dict(stats.stds or {})
    for j, (name, kind) in enumerate(table.schema.columns):
        if kind is not ColumnKind.NUMERIC:
            continue
        col = data[:, j]
        if np.isnan(col).any():
            raise DataError(f"zscore requires imputed data; column {name!r} has missing cells")
        if fit:
            means[name] = float(col.mean())
            stds[name] = float(col.std())
        mu = means.get(name)
        sigma = stds.get(name)
        if mu is None or sigma is None:
            raise DataError(f"no z-score stats for column {name!r}")
        data[:, j] = (col - mu) / (sigma if sigma > 0 else 1.0)
    out_stats = PreprocessStats(
        means=means,
        stds=stds,
        modes={} if stats is None else dict(stats.modes),
        zscore_applied=True,
    )
    return table.with_data(data), out_stats


def write_csv(table: Table, path: str | Path) -> None:
    """Write an encoded table as CSV; missing cells become empty strings.

    Floats use repr-precision formatting, so written tables round-trip through
    :func:`load_csv` exactly.
    """
    data = table.numeric_data()
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.schema.names)
        for row in data:
            writer.writerow(["" if math.isnan(v) else format(v, ".17g") for v in row])


def encode_jointly(tables: Sequence[Table]) -> tuple[list[Table], CodeBook]:
    """Encode several tables with a shared codebook (same schema required)."""
    if not tables:
        return [], CodeBook()
    schema = tables[0].schema
    for t in tables[1:]:
        if t.schema != schema:
            raise DataError("joint encoding requires identical schemas")
    if all(t.is_encoded for t in tables):
        return list(tables), CodeBook()
    stacked = np.concatenate([t.data.astype(object, copy=False) for t in tables], axis=0)
    combined, book = encode_categoricals(Table(schema, stacked))
    out = []
    offset = 0
    for t in tables:
        out.append(Table(schema, combined.data[offset : offset + t.n].copy()))
        offset += t.n
    return out, book


def table_from_columns(
    names: Sequence[str],
    kinds: Sequence[ColumnKind],
    columns: Sequence[np.ndarray],
    target_index: int,
) -> Table:
    """Assemble an encoded Table from per-column float arrays."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    return Table(Schema(tuple(zip(names, kinds)), target_index), data)
