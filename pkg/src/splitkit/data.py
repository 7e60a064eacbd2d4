"""Tabular datasets: CSV ingestion/emission and column standardization."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
ORDINAL = "ordinal"


class DataError(ValueError):
    """Raised for malformed input data or violated input contracts."""


class ConstantColumnWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: str = CONTINUOUS
    levels: tuple = ()
    scores: tuple = ()

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, CATEGORICAL, ORDINAL):
            raise DataError(f"unknown column kind {self.kind!r}")
        if self.kind == CONTINUOUS:
            return
        if not self.levels:
            raise DataError(f"column {self.name!r}: no levels")
        if len(set(self.levels)) != len(self.levels):
            raise DataError(f"column {self.name!r}: duplicate levels")
        if any(lv == "" for lv in self.levels):
            raise DataError(f"column {self.name!r}: empty level label")
        if self.kind == ORDINAL:
            if len(self.scores) != len(self.levels):
                raise DataError(f"column {self.name!r}: need one score per level")
            if any(b <= a for a, b in zip(self.scores, self.scores[1:])):
                raise DataError(f"column {self.name!r}: scores must be strictly increasing")

    @property
    def m(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class Dataset:
    """A complete table. Continuous columns are float arrays, others hold labels.

    ``columns[k]`` is the k-th column as a 1-D numpy array, in schema order.
    """

    schema: tuple
    columns: tuple

    def __post_init__(self):
        if not self.schema:
            raise DataError("dataset has no columns")
        if len(self.schema) != len(self.columns):
            raise DataError("schema/column count mismatch")
        lengths = {len(c) for c in self.columns}
        if len(lengths) != 1:
            raise DataError("columns have different lengths")
        if lengths.pop() < 2:
            raise DataError("dataset needs at least 2 rows")
        for col, values in zip(self.schema, self.columns):
            if col.kind == CONTINUOUS:
                if not np.all(np.isfinite(values)):
                    raise DataError(f"column {col.name!r}: non-finite value")
            else:
                bad = set(values.tolist()) - set(col.levels)
                if bad:
                    raise DataError(f"column {col.name!r}: labels {sorted(bad)} not in levels")

    @property
    def n_rows(self) -> int:
        return len(self.columns[0])

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.schema]

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.names.index(name)]

    def schema_of(self, name: str) -> ColumnSchema:
        return self.schema[self.names.index(name)]

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.schema, tuple(c[rows] for c in self.columns))

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, Sequence], kinds: Mapping[str, str] | None = None) -> "Dataset":
        """Build a dataset from named columns.

        Numeric columns default to continuous; anything else is categorical
        with levels in first-appearance order. ``kinds`` accepts the same
        values as the ``schema_spec`` of :func:`load_csv`.
        """
        kinds = dict(kinds or {})
        schema, cols = [], []
        for name, values in arrays.items():
            values = np.asarray(values)
            kind = kinds.get(name)
            if kind is None:
                kind = CONTINUOUS if np.issubdtype(values.dtype, np.number) else CATEGORICAL
            if kind == CONTINUOUS:
                schema.append(ColumnSchema(name))
                cols.append(values.astype(np.float64))
                continue
            labels = np.array([str(v) for v in values.tolist()], dtype=object)
            if kind == CATEGORICAL:
                schema.append(ColumnSchema(name, CATEGORICAL, _first_appearance(labels)))
            elif kind == ORDINAL or not isinstance(kind, str):
                schema.append(_ordinal_schema(name, labels, kind))
            else:
                raise DataError(f"column {name!r}: unknown kind {kind!r}")
            cols.append(labels)
        return cls(tuple(schema), tuple(cols))

    def numeric(self) -> np.ndarray:
        """N x p matrix of the continuous columns only."""
        cont = [c for s, c in zip(self.schema, self.columns) if s.kind == CONTINUOUS]
        if not cont:
            return np.empty((self.n_rows, 0))
        return np.column_stack(cont)


def _first_appearance(labels) -> tuple:
    seen = {}
    for lab in labels:
        seen.setdefault(lab, None)
    return tuple(seen)


def _parse_float(cell: str):
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, schema_spec: Mapping[str, object] | None = None) -> Dataset:
    """Read a headed, comma-separated file into a :class:`Dataset`.

    Parameters
    ----------
    path : path-like
    schema_spec : mapping, optional
        Column name -> ``"continuous"``, ``"categorical"``, ``"ordinal"``
        (scores 1..m), a sequence of ordinal scores, or a full
        :class:`ColumnSchema`. Ordinal levels are ordered numerically when
        every label is a number, else by first appearance; scores attach to
        levels in that order. Undeclared columns are continuous when every
        cell parses as a number, categorical otherwise.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        body = [r for r in reader if r]
    header = [h.strip() for h in header]
    if not body:
        raise DataError(f"{path}: empty body")
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names")
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: ragged row ({len(row)} cells, expected {len(header)})")
    spec = dict(schema_spec or {})
    unknown = set(spec) - set(header)
    if unknown:
        raise DataError(f"declared columns not in header: {sorted(unknown)}")

    schema, cols = [], []
    for k, name in enumerate(header):
        cells = [row[k].strip() for row in body]
        for lineno, cell in enumerate(cells, start=2):
            if cell == "":
                raise DataError(f"{path}:{lineno}: missing cell in column {name!r}")
        decl = spec.get(name)
        if isinstance(decl, ColumnSchema):
            col_schema = decl
        elif decl is None:
            parsed = [_parse_float(c) for c in cells]
            if all(v is not None for v in parsed):
                col_schema = ColumnSchema(name)
            else:
                col_schema = ColumnSchema(name, CATEGORICAL, _first_appearance(cells))
        elif decl == CONTINUOUS:
            col_schema = ColumnSchema(name)
        elif decl == CATEGORICAL:
            col_schema = ColumnSchema(name, CATEGORICAL, _first_appearance(cells))
        else:
            col_schema = _ordinal_schema(name, cells, decl)

        if col_schema.kind == CONTINUOUS:
            values = np.empty(len(cells))
            for i, cell in enumerate(cells):
                v = _parse_float(cell)
                if v is None:
                    raise DataError(f"{path}:{i + 2}: non-numeric cell {cell!r} in continuous column {name!r}")
                values[i] = v
        else:
            values = np.array(cells, dtype=object)
        schema.append(col_schema)
        cols.append(values)
    return Dataset(tuple(schema), tuple(cols))


def _ordinal_schema(name, cells, scores) -> ColumnSchema:
    levels = _first_appearance(cells)
    if scores == ORDINAL:
        scores = range(1, len(levels) + 1)
    scores = tuple(float(s) for s in scores)
    if len(scores) != len(levels):
        raise DataError(f"column {name!r}: {len(levels)} levels but {len(scores)} scores")
    # Ordinal levels whose labels are numbers are ordered numerically, else kept
    # in first-appearance order.
    numeric = [_parse_float(lv) for lv in levels]
    if all(v is not None for v in numeric):
        levels = tuple(lv for _, lv in sorted(zip(numeric, levels)))
    return ColumnSchema(name, ORDINAL, levels, scores)


@dataclass(frozen=True)
class StandardizedMatrix:
    """Encoded, standardized design matrix.

    ``mean``/``scale`` hold the per-column affine transform
    (``values = (raw - mean) / scale``); ``column_map`` maps each source
    column name to its ``slice`` of encoded columns.
    """

    values: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    column_map: dict = field(default_factory=dict)
    constant: np.ndarray | None = None
    contrasts: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.values.shape

    def inverse(self, values=None) -> np.ndarray:
        values = self.values if values is None else np.asarray(values, dtype=float)
        return values * self.scale + self.mean


def standardize(data) -> StandardizedMatrix:
    """Center each column and divide by its sample standard deviation (N-1).

    Constant columns are centered, given scale 1, and reported with a
    :class:`ConstantColumnWarning`.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise DataError("standardize needs at least 2 rows")
    mean = x.mean(axis=0)
    centered = x - mean
    sd = np.sqrt((centered ** 2).sum(axis=0) / (x.shape[0] - 1))
    # Relative threshold: a column whose spread is at rounding level is constant.
    constant = sd <= 1e-14 * np.maximum(1.0, np.abs(mean))
    if constant.any():
        warnings.warn(f"constant column(s) at positions {np.flatnonzero(constant).tolist()}",
                      ConstantColumnWarning, stacklevel=2)
    scale = np.where(constant, 1.0, sd)
    values = centered / scale
    values[:, constant] = 0.0
    return StandardizedMatrix(values, mean, scale, {}, constant)


def format_cell(value, kind: str) -> str:
    if kind == CONTINUOUS:
        return format(float(value), ".17g")
    return str(value)


def write_csv(data: Dataset, rows, path) -> None:
    rows = np.sort(np.asarray(rows, dtype=np.int64))
    path = Path(path)
    try:
        fh = path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh)
        writer.writerow(data.names)
        for r in rows:
            writer.writerow([format_cell(c[r], s.kind) for s, c in zip(data.schema, data.columns)])


def write_split(data: Dataset, result, test_path, train_path) -> None:
    """Emit the original rows of each side of ``result`` to CSV files.

    Rows keep the dataset's original order within each file.
    """
    test = np.asarray(result.test_indices)
    train = np.asarray(result.train_indices)
    if len(test) == 0 or len(train) == 0:
        raise DataError("degenerate split: one side is empty")
    allrows = np.concatenate([test, train])
    if len(allrows) != data.n_rows or not np.array_equal(np.sort(allrows), np.arange(data.n_rows)):
        raise DataError("split indices do not partition the dataset")
    write_csv(data, test, test_path)
    write_csv(data, train, train_path)
