"""Contrast codings for categorical columns and coding-quality metrics.

Raw contrasts are kept as exact integer matrices so that orthogonality
(and hence zero correlation) is exact; the float matrix used for distances
is standardized over the m levels with the m-1 denominator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .data import (CATEGORICAL, CONTINUOUS, ORDINAL, DataError, Dataset,
                   StandardizedMatrix, standardize)

SCHEMES = ("helmert", "treatment", "sum", "polynomial")


@dataclass(frozen=True)
class ContrastMatrix:
    scheme: str
    raw: tuple  # m rows of m-1 python ints
    columns: np.ndarray  # m x (m-1) float, level-standardized when `standardized`
    standardized: bool = True

    @property
    def m(self) -> int:
        return len(self.raw)

    def row_of(self, level: int) -> np.ndarray:
        return self.columns[level]

    def decode(self, points) -> np.ndarray:
        """Index of the nearest level row for each encoded point."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d2 = ((pts[:, None, :] - self.columns[None]) ** 2).sum(axis=2)
        return d2.argmin(axis=1)


def _check_m(m):
    if int(m) != m or m < 2:
        raise DataError(f"a contrast needs at least 2 levels, got m={m}")
    return int(m)


def _level_standardize(raw) -> np.ndarray:
    x = np.array(raw, dtype=np.float64)
    x = x - x.mean(axis=0)
    sd = np.sqrt((x ** 2).sum(axis=0) / (x.shape[0] - 1))
    return x / sd


def _finish(scheme, raw, standardized):
    raw = tuple(tuple(int(v) for v in row) for row in raw)
    cols = _level_standardize(raw) if standardized else np.array(raw, dtype=np.float64)
    return ContrastMatrix(scheme, raw, cols, standardized)


def treatment_coding(m, standardized=True) -> ContrastMatrix:
    m = _check_m(m)
    raw = [[1 if i == j + 1 else 0 for j in range(m - 1)] for i in range(m)]
    return _finish("treatment", raw, standardized)


def sum_coding(m, standardized=True) -> ContrastMatrix:
    m = _check_m(m)
    raw = [[1 if i == j else (-1 if i == m - 1 else 0) for j in range(m - 1)] for i in range(m)]
    return _finish("sum", raw, standardized)


def helmert_coding(m, standardized=True) -> ContrastMatrix:
    m = _check_m(m)
    raw = [[-1 if i <= j else (j + 1 if i == j + 1 else 0) for j in range(m - 1)] for i in range(m)]
    return _finish("helmert", raw, standardized)


def orthogonal_polynomial_coding(m, standardized=True) -> ContrastMatrix:
    """Gram-Schmidt on the powers of 1..m, done in exact rational arithmetic.

    Each column is rescaled to coprime integers with a positive last entry,
    e.g. (-1, 0, 1) and (1, -2, 1) for m=3.
    """
    m = _check_m(m)
    x = [Fraction(i + 1) for i in range(m)]
    basis = [[Fraction(1)] * m]
    for k in range(1, m):
        v = [xi ** k for xi in x]
        for b in basis:
            coef = sum(vi * bi for vi, bi in zip(v, b)) / sum(bi * bi for bi in b)
            v = [vi - coef * bi for vi, bi in zip(v, b)]
        basis.append(v)
    cols = []
    for v in basis[1:]:
        denom = math.lcm(*(f.denominator for f in v))
        ints = [int(f * denom) for f in v]
        g = math.gcd(*ints)
        ints = [i // g for i in ints]
        if ints[-1] < 0:
            ints = [-i for i in ints]
        cols.append(ints)
    raw = [[cols[j][i] for j in range(m - 1)] for i in range(m)]
    return _finish("polynomial", raw, standardized)


_BUILDERS = {
    "helmert": helmert_coding,
    "treatment": treatment_coding,
    "sum": sum_coding,
    "polynomial": orthogonal_polynomial_coding,
    "orthogonal_polynomial": orthogonal_polynomial_coding,
}


def contrast(scheme: str, m: int, standardized=True) -> ContrastMatrix:
    try:
        builder = _BUILDERS[scheme]
    except KeyError:
        raise DataError(f"unknown coding scheme {scheme!r}; choose from {SCHEMES}") from None
    return builder(m, standardized)


def encode(data: Dataset, scheme: str = "helmert") -> StandardizedMatrix:
    """Numeric design matrix for a mixed dataset.

    Continuous and ordinal columns are standardized over rows; each
    categorical column becomes its m-1 level-standardized contrast columns,
    which are not re-standardized over rows.
    """
    blocks, means, scales, consts = [], [], [], []
    column_map, contrasts = {}, {}
    numeric_idx = []
    pos = 0
    for col, values in zip(data.schema, data.columns):
        if col.kind == CATEGORICAL:
            if col.m < 2:
                raise DataError(f"categorical column {col.name!r} has a single level")
            cm = contrast(scheme, col.m)
            lookup = {lv: i for i, lv in enumerate(col.levels)}
            codes = np.fromiter((lookup[v] for v in values), dtype=np.int64, count=len(values))
            blocks.append(cm.columns[codes])
            means.append(np.zeros(col.m - 1))
            scales.append(np.ones(col.m - 1))
            consts.append(np.zeros(col.m - 1, dtype=bool))
            column_map[col.name] = slice(pos, pos + col.m - 1)
            contrasts[col.name] = cm
            pos += col.m - 1
        else:
            if col.kind == ORDINAL:
                lookup = dict(zip(col.levels, col.scores))
                raw = np.array([lookup[v] for v in values], dtype=np.float64)
            else:
                raw = np.asarray(values, dtype=np.float64)
            blocks.append(raw[:, None])
            numeric_idx.append(len(blocks) - 1)
            means.append(None)
            scales.append(None)
            consts.append(None)
            column_map[col.name] = slice(pos, pos + 1)
            pos += 1
    if numeric_idx:
        num = np.column_stack([blocks[i] for i in numeric_idx])
        st = standardize(num)
        for k, i in enumerate(numeric_idx):
            blocks[i] = st.values[:, k:k + 1]
            means[i] = st.mean[k:k + 1]
            scales[i] = st.scale[k:k + 1]
            consts[i] = st.constant[k:k + 1]
    values = np.ascontiguousarray(np.hstack(blocks))
    return StandardizedMatrix(values, np.concatenate(means), np.concatenate(scales),
                              column_map, np.concatenate(consts), contrasts)


def decode_levels(encoded: StandardizedMatrix, data: Dataset, name: str, points=None) -> np.ndarray:
    """Recover level labels of a categorical column from encoded rows."""
    cm = encoded.contrasts[name]
    block = (encoded.values if points is None else np.atleast_2d(points))[:, encoded.column_map[name]]
    levels = np.array(data.schema_of(name).levels, dtype=object)
    return levels[cm.decode(block)]


def _exact_abs_corr(a, b) -> float:
    # Integer covariance numerator first: exact zero when the contrasts are orthogonal.
    m = len(a)
    cov = m * sum(x * y for x, y in zip(a, b)) - sum(a) * sum(b)
    if cov == 0:
        return 0.0
    va = m * sum(x * x for x in a) - sum(a) ** 2
    vb = m * sum(y * y for y in b) - sum(b) ** 2
    return abs(cov) / math.sqrt(va * vb)


def mean_abs_correlation(c: ContrastMatrix) -> float:
    """Average |correlation| over ordered pairs of distinct contrast columns."""
    m = c.m
    if m < 3:
        raise DataError("mean absolute correlation needs m >= 3")
    cols = list(zip(*c.raw))
    total = 0.0
    for i in range(m - 1):
        for j in range(i + 1, m - 1):
            total += 2.0 * _exact_abs_corr(cols[i], cols[j])
    return total / ((m - 1) * (m - 2))


def separation_distance(c: ContrastMatrix) -> float:
    rows = c.columns
    d = np.sqrt(((rows[:, None, :] - rows[None]) ** 2).sum(axis=2))
    iu = np.triu_indices(c.m, k=1)
    return float(d[iu].min())


def within_rmse(points, centers) -> float:
    """Root mean squared distance from each point to its nearest center."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise DataError("within_rmse of an empty point set")
    ctr = np.atleast_2d(np.asarray(centers, dtype=float))
    d2 = ((pts[:, None, :] - ctr[None]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.min(axis=1).mean()))
