"""Train/test splitters: support-point splitting plus random, stratified,
CADEX (Kennard-Stone) and DUPLEX baselines.

Row indices are 0-based throughout.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _accel
from ._accel import njit
from .data import CATEGORICAL, DataError, Dataset
from .encoding import encode
from .energy import sp_objective, two_sample_energy
from .nn_index import NNIndex, sq_dists
from .solver import SolverConfig, fit_support_points, init_points, make_rng


@dataclass
class SplitResult:
    test_indices: np.ndarray
    train_indices: np.ndarray
    gamma: float
    method: str
    seed: int | None = None
    valid_indices: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.test_indices = np.sort(np.asarray(self.test_indices, dtype=np.int64))
        self.train_indices = np.sort(np.asarray(self.train_indices, dtype=np.int64))
        self.valid_indices = np.sort(np.asarray(self.valid_indices, dtype=np.int64))

    @property
    def n_rows(self) -> int:
        return len(self.test_indices) + len(self.train_indices) + len(self.valid_indices)

    def check_partition(self, n_rows: int) -> None:
        allrows = np.concatenate([self.test_indices, self.train_indices, self.valid_indices])
        if len(allrows) != n_rows or not np.array_equal(np.sort(allrows), np.arange(n_rows)):
            raise DataError("index sets do not partition the dataset")

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "gamma": self.gamma,
            "seed": self.seed,
            "test_indices": self.test_indices.tolist(),
            "train_indices": self.train_indices.tolist(),
            "diagnostics": self.diagnostics,
        }
        if len(self.valid_indices):
            out["valid_indices"] = self.valid_indices.tolist()
        return out

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "SplitResult":
        try:
            return cls(np.array(d["test_indices"], dtype=np.int64),
                       np.array(d["train_indices"], dtype=np.int64),
                       float(d["gamma"]), str(d["method"]), d.get("seed"),
                       np.array(d.get("valid_indices", []), dtype=np.int64),
                       dict(d.get("diagnostics", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed split record: {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "SplitResult":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read split file {path}: {exc}") from exc


@dataclass
class FoldAssignment:
    folds: list

    @property
    def k(self) -> int:
        return len(self.folds)

    def to_dict(self) -> dict:
        return {"k": self.k, "folds": [np.asarray(f).tolist() for f in self.folds]}


def n_test_for(n_rows: int, gamma: float) -> int:
    """round(gamma * N), halves rounded away from zero."""
    if not 0.0 < gamma < 1.0:
        raise DataError(f"ratio must lie in (0, 1), got {gamma}")
    return int(math.floor(gamma * n_rows + 0.5))


def _checked_n_test(n_rows, gamma, minimum=1):
    n_test = n_test_for(n_rows, gamma)
    if n_test < minimum or n_test > n_rows - 1:
        raise DataError(f"degenerate split: ratio {gamma} gives {n_test} of {n_rows} test rows")
    return n_test


def as_dataset(data) -> Dataset:
    if isinstance(data, Dataset):
        return data
    x = np.asarray(data, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return Dataset.from_arrays({f"x{k}": x[:, k] for k in range(x.shape[1])})


def _design(ds: Dataset, scheme) -> np.ndarray:
    """Encoded matrix with single-level categorical columns dropped.

    Such columns are constant and add nothing to any distance; a dataset
    made only of them maps to one all-zero column.
    """
    keep = [i for i, c in enumerate(ds.schema) if not (c.kind == CATEGORICAL and c.m < 2)]
    if not keep:
        return np.zeros((ds.n_rows, 1))
    if len(keep) < len(ds.schema):
        ds = Dataset(tuple(ds.schema[i] for i in keep), tuple(ds.columns[i] for i in keep))
    return encode(ds, scheme).values


def _solver_cfg(cfg, n, **overrides):
    cfg = cfg if cfg is not None else SolverConfig(n=max(n, 1))
    return dataclasses.replace(cfg, n=n, **overrides)


def sequential_nn_subsample(points, data, rows=None) -> np.ndarray:
    """Assign each point, in order, to its nearest still-unused data row.

    ``rows`` restricts the candidates to a subset of data rows; returned
    indices always refer to rows of ``data``.
    """
    x = np.asarray(getattr(data, "values", data), dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    cand = np.arange(x.shape[0]) if rows is None else np.asarray(rows, dtype=np.int64)
    if pts.shape[0] > len(cand):
        raise DataError("more points than candidate rows")
    ix = NNIndex(x[cand])
    out = np.empty(pts.shape[0], dtype=np.int64)
    for i, z in enumerate(pts):
        r, _ = ix.nearest(z)
        ix.remove(r)
        out[i] = cand[r]
    return out


def split(data, gamma, cfg: SolverConfig | None = None, scheme="helmert") -> SplitResult:
    """Support-point split of ``data`` with test ratio ``gamma``.

    Support points are computed for the smaller side only; whichever side
    that is (recorded as ``diagnostics["d1_role"]``) takes the rows nearest
    to them.
    """
    ds = as_dataset(data)
    N = ds.n_rows
    n_test = _checked_n_test(N, gamma)
    n = min(n_test, N - n_test)
    x = _design(ds, scheme)
    cfg = _solver_cfg(cfg, n, fixed=None)
    rep = fit_support_points(x, cfg)
    d1 = sequential_nn_subsample(rep.points, x)
    rest = np.setdiff1d(np.arange(N), d1)
    role = "test" if n_test <= N / 2 else "train"
    test, train = (d1, rest) if role == "test" else (rest, d1)
    diag = {
        "d1_role": role,
        "objective": sp_objective(x[d1], x),
        "iterations": rep.iterations,
        "converged": rep.converged,
        "support_objective": rep.objective,
        "energy": two_sample_energy(x[test], x),
    }
    return SplitResult(test, train, gamma, "split", cfg.seed, diagnostics=diag)


def _conditional_extract(x, free_rows, fixed_rows, n_free, cfg):
    """Solve with ``fixed_rows`` held fixed; subsample ``n_free`` of ``free_rows``."""
    seed = cfg.seed if cfg is not None else 0
    c = _solver_cfg(cfg, n_free, fixed=x[fixed_rows] if len(fixed_rows) else None)
    init = init_points(x[free_rows], n_free, seed)
    rep = fit_support_points(x, c, init=init)
    picked = sequential_nn_subsample(rep.points, x, rows=free_rows)
    return picked, rep


def validation_split(data, existing: SplitResult, n_valid, cfg: SolverConfig | None = None,
                     scheme="helmert") -> SplitResult:
    """Carve ``n_valid`` validation rows out of the training side of ``existing``.

    The test rows stay fixed in the criterion, so the validation points are
    pushed away from them; both sets together represent the full data.
    """
    ds = as_dataset(data)
    existing.check_partition(ds.n_rows)
    train = existing.train_indices
    if not 1 <= n_valid <= len(train) - 1:
        raise DataError(f"n_valid must be in [1, {len(train) - 1}], got {n_valid}")
    x = _design(ds, scheme)
    valid, rep = _conditional_extract(x, train, existing.test_indices, n_valid, cfg)
    remaining = np.setdiff1d(train, valid)
    diag = dict(existing.diagnostics)
    diag.update({
        "valid_iterations": rep.iterations,
        "valid_converged": rep.converged,
        "valid_objective": rep.objective,
    })
    return SplitResult(existing.test_indices, remaining, existing.gamma, existing.method,
                       existing.seed if cfg is None else cfg.seed, valid, diag)


def kfold(data, train, k, cfg: SolverConfig | None = None, scheme="helmert") -> FoldAssignment:
    """Split the training rows into ``k`` folds by repeated conditional extraction.

    Rows outside ``train`` are treated as the test set and stay fixed
    throughout; each round also fixes every fold already extracted. The last
    fold is whatever remains.
    """
    ds = as_dataset(data)
    train = np.sort(np.asarray(train, dtype=np.int64))
    if len(np.unique(train)) != len(train) or (len(train) and (train[0] < 0 or train[-1] >= ds.n_rows)):
        raise DataError("training indices must be distinct rows of the dataset")
    if not 2 <= k <= len(train):
        raise DataError(f"k must be in [2, {len(train)}], got {k}")
    sizes = [len(train) // k + (1 if i < len(train) % k else 0) for i in range(k)]
    x = _design(ds, scheme)
    fixed = np.setdiff1d(np.arange(ds.n_rows), train)
    remaining = train
    folds = []
    for size in sizes[:-1]:
        fold, _ = _conditional_extract(x, remaining, fixed, size, cfg)
        folds.append(np.sort(fold))
        fixed = np.concatenate([fixed, fold])
        remaining = np.setdiff1d(remaining, fold)
    folds.append(remaining)
    return FoldAssignment(folds)


def random_split(data, gamma, seed=0, scheme="helmert") -> SplitResult:
    ds = as_dataset(data)
    N = ds.n_rows
    n_test = _checked_n_test(N, gamma)
    perm = make_rng(seed).permutation(N)
    return _with_energy(SplitResult(perm[:n_test], perm[n_test:], gamma, "random", seed), ds, scheme)


def _with_energy(result: SplitResult, ds: Dataset, scheme) -> SplitResult:
    x = _design(ds, scheme)
    result.diagnostics["energy"] = two_sample_energy(x[result.test_indices], x)
    return result


def largest_remainder(counts, n) -> np.ndarray:
    """Integer apportionment of ``n`` proportional to ``counts``.

    Floors of the quotas first, then one extra unit to the largest
    remainders (ties to the earlier level). Never exceeds a level's count.
    """
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if not 0 <= n <= total:
        raise DataError("cannot apportion more units than rows")
    # exact rational quotas: n * c / total
    base = (n * counts) // total
    rem = (n * counts) % total
    short = n - int(base.sum())
    order = sorted(range(len(counts)), key=lambda i: (-rem[i], i))
    for i in order[:short]:
        base[i] += 1
    return base


def stratified_split(data, gamma, label_column, seed=0, scheme="helmert") -> SplitResult:
    """Random sampling within each level, level sizes apportioned proportionally."""
    ds = as_dataset(data)
    col = ds.schema_of(label_column)
    if col.kind == "continuous":
        raise DataError(f"label column {label_column!r} is not categorical")
    N = ds.n_rows
    n_test = _checked_n_test(N, gamma)
    labels = ds.column(label_column)
    members = [np.flatnonzero(labels == lv) for lv in col.levels]
    quota = largest_remainder([len(m) for m in members], n_test)
    rng = make_rng(seed)
    test = np.concatenate([rng.permutation(m)[:q] for m, q in zip(members, quota)])
    train = np.setdiff1d(np.arange(N), test)
    res = SplitResult(test, train, gamma, "stratified", seed,
                      diagnostics={"level_counts": [int(q) for q in quota]})
    return _with_energy(res, ds, scheme)


@njit
def _farthest_pair_numba(x, rows):
    best = -1.0
    bi, bj = -1, -1
    d = x.shape[1]
    for a in range(rows.shape[0]):
        i = rows[a]
        for b in range(a + 1, rows.shape[0]):
            j = rows[b]
            acc = 0.0
            for k in range(d):
                t = x[j, k] - x[i, k]
                acc += t * t
            if acc > best:
                best = acc
                bi, bj = i, j
    return bi, bj


def _farthest_pair_numpy(x, rows):
    best, pair = -1.0, (-1, -1)
    for a in range(len(rows) - 1):
        d2 = sq_dists(x[rows[a + 1:]], x[rows[a]])
        j = int(np.argmax(d2))
        if d2[j] > best:
            best, pair = float(d2[j]), (int(rows[a]), int(rows[a + 1 + j]))
    return pair


def farthest_pair(x, rows=None):
    """Mutually farthest pair among ``rows`` (earliest pair in row order on ties)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    rows = np.arange(x.shape[0]) if rows is None else np.ascontiguousarray(np.sort(rows), dtype=np.int64)
    if len(rows) < 2:
        raise DataError("need two rows for a farthest pair")
    if _accel.USE_NUMBA:
        i, j = _farthest_pair_numba(x, rows)
        return int(i), int(j)
    return _farthest_pair_numpy(x, rows)


class _MaxMinSet:
    """Growing set that tracks every row's squared distance to its nearest member."""

    def __init__(self, x, available):
        self.x = x
        self.available = available  # shared mask of unassigned rows
        self.min_d2 = np.full(x.shape[0], np.inf)
        self.members = []

    def add(self, row):
        self.members.append(int(row))
        self.available[row] = False
        self.min_d2 = np.minimum(self.min_d2, sq_dists(self.x, self.x[row]))

    def next_row(self):
        score = np.where(self.available, self.min_d2, -np.inf)
        return int(np.argmax(score))


def _kennard_stone(x, n_select):
    available = np.ones(x.shape[0], dtype=bool)
    chosen = _MaxMinSet(x, available)
    for r in farthest_pair(x):
        chosen.add(r)
    while len(chosen.members) < n_select:
        chosen.add(chosen.next_row())
    return np.array(chosen.members[:n_select], dtype=np.int64)


def cadex_split(data, gamma, scheme="helmert") -> SplitResult:
    """Kennard-Stone selection of the test set in encoded space (deterministic)."""
    ds = as_dataset(data)
    N = ds.n_rows
    n_test = _checked_n_test(N, gamma, minimum=2)
    x = _design(ds, scheme)
    test = _kennard_stone(x, n_test)
    res = SplitResult(test, np.setdiff1d(np.arange(N), test), gamma, "cadex")
    res.diagnostics["energy"] = two_sample_energy(x[res.test_indices], x)
    return res


def duplex_split(data, gamma, scheme="helmert") -> SplitResult:
    """DUPLEX: test and train alternately grow by max-min selection.

    The farthest pair seeds the test set, the farthest remaining pair seeds
    the training set; each side stops once it reaches its target size and
    any leftover rows go to training.
    """
    ds = as_dataset(data)
    N = ds.n_rows
    n_test = _checked_n_test(N, gamma, minimum=2)
    n_train = N - n_test
    x = _design(ds, scheme)
    available = np.ones(N, dtype=bool)
    test = _MaxMinSet(x, available)
    train = _MaxMinSet(x, available)
    for r in farthest_pair(x):
        test.add(r)
    if n_train >= 2 and available.sum() >= 2:
        for r in farthest_pair(x, np.flatnonzero(available)):
            train.add(r)
    while len(test.members) < n_test and available.any():
        test.add(test.next_row())
        if len(train.members) < n_train and available.any():
            if train.members:
                train.add(train.next_row())
            else:
                train.add(int(np.flatnonzero(available)[0]))
    test_rows = np.array(test.members, dtype=np.int64)
    res = SplitResult(test_rows, np.setdiff1d(np.arange(N), test_rows), gamma, "duplex")
    res.diagnostics["energy"] = two_sample_energy(x[res.test_indices], x)
    return res


SPLITTERS = {
    "split": split,
    "random": random_split,
    "stratified": stratified_split,
    "cadex": cadex_split,
    "duplex": duplex_split,
}


