"""Exact nearest-neighbour k-d tree with tombstone deletion.

Removed rows are only flagged dead; per-node live counts let queries skip
dead subtrees. Once more than half the rows present at the last build have
been removed, the tree is rebuilt over the survivors.
"""
from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit

LEAF_SIZE = 8


class EmptyIndexError(LookupError):
    pass


def sq_dists(x, q):
    """Squared distances accumulated coordinate by coordinate.

    Same summation order as the compiled kernel, so exact ties and
    near-ties resolve identically on every path.
    """
    acc = np.zeros(x.shape[0])
    for k in range(x.shape[1]):
        t = x[:, k] - q[k]
        acc += t * t
    return acc


def _build(data, rows, leaf_size):
    """Median split on the widest coordinate; returns flat node arrays.

    Plain Python/numpy; tree construction is not the hot path.
    """
    n, d = len(rows), data.shape[1]
    max_nodes = 2 * n + 1
    start = np.zeros(max_nodes, np.int64)
    end = np.zeros(max_nodes, np.int64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    parent = np.full(max_nodes, -1, np.int64)
    dim = np.zeros(max_nodes, np.int64)
    split = np.zeros(max_nodes)
    lo = np.zeros((max_nodes, d))
    hi = np.zeros((max_nodes, d))
    order = np.array(rows, dtype=np.int64)
    count = 1
    start[0], end[0] = 0, n
    stack = [0]
    while stack:
        node = stack.pop()
        s, e = start[node], end[node]
        pts = data[order[s:e]]
        lo[node] = pts.min(axis=0)
        hi[node] = pts.max(axis=0)
        spread = hi[node] - lo[node]
        k = int(np.argmax(spread))
        if e - s <= leaf_size or spread[k] == 0.0:
            continue
        # stable sort keeps equal coordinates in row order: deterministic trees
        perm = np.argsort(pts[:, k], kind="stable")
        order[s:e] = order[s:e][perm]
        mid = s + (e - s) // 2
        dim[node] = k
        split[node] = data[order[mid], k]
        for child, (cs, ce) in ((count, (s, mid)), (count + 1, (mid, e))):
            if child >= max_nodes:
                raise RuntimeError("k-d tree node budget exceeded")
            start[child], end[child], parent[child] = cs, ce, node
            stack.append(child)
        left[node], right[node] = count, count + 1
        count += 2
    sl = slice(0, count)
    return (order, start[sl].copy(), end[sl].copy(), left[sl].copy(), right[sl].copy(),
            parent[sl].copy(), dim[sl].copy(), split[sl].copy(), lo[sl].copy(), hi[sl].copy())


@njit
def _query_numba(data, alive, order, start, end, left, right, dim, split, lo, hi, live, q):
    d = data.shape[1]
    best = np.inf
    best_row = -1
    stack = np.empty(128, np.int64)
    top = 0
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        if live[node] == 0:
            continue
        bd = 0.0
        for k in range(d):
            if q[k] < lo[node, k]:
                t = lo[node, k] - q[k]
                bd += t * t
            elif q[k] > hi[node, k]:
                t = q[k] - hi[node, k]
                bd += t * t
        # strict: equal bounds may still hold a smaller-index tie
        if bd > best:
            continue
        if left[node] < 0:
            for p in range(start[node], end[node]):
                r = order[p]
                if not alive[r]:
                    continue
                acc = 0.0
                for k in range(d):
                    t = data[r, k] - q[k]
                    acc += t * t
                if acc < best or (acc == best and r < best_row):
                    best = acc
                    best_row = r
        else:
            if top + 2 > stack.shape[0]:
                grown = np.empty(stack.shape[0] * 2, np.int64)
                grown[:top] = stack[:top]
                stack = grown
            if q[dim[node]] < split[node]:
                near, far = left[node], right[node]
            else:
                near, far = right[node], left[node]
            stack[top] = far
            stack[top + 1] = near
            top += 2
    return best_row, best


def _query_numpy(data, alive, order, start, end, left, right, dim, split, lo, hi, live, q):
    best, best_row = np.inf, -1
    stack = [0]
    while stack:
        node = stack.pop()
        if live[node] == 0:
            continue
        gap = np.maximum(lo[node] - q, 0.0) + np.maximum(q - hi[node], 0.0)
        if float(np.sum(gap * gap)) > best:
            continue
        if left[node] < 0:
            rows = order[start[node]:end[node]]
            rows = rows[alive[rows]]
            d2 = sq_dists(data[rows], q)
            j = np.lexsort((rows, d2))[0]
            if d2[j] < best or (d2[j] == best and rows[j] < best_row):
                best, best_row = float(d2[j]), int(rows[j])
        else:
            if q[dim[node]] < split[node]:
                stack += [right[node], left[node]]
            else:
                stack += [left[node], right[node]]
    return best_row, best


class NNIndex:
    """Exact Euclidean nearest-neighbour index over the rows of ``data``.

    >>> ix = NNIndex([[0.0], [1.0], [1.0]])
    >>> ix.nearest([0.9])
    (1, 0.09999999999999998)
    >>> ix.remove(1); ix.nearest([0.9])[0]
    2
    """

    def __init__(self, data, leaf_size=LEAF_SIZE):
        x = np.ascontiguousarray(getattr(data, "values", data), dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape[0] < 1:
            raise ValueError("cannot index an empty point set")
        self.data = x
        self.leaf_size = leaf_size
        self.alive = np.ones(x.shape[0], dtype=np.bool_)
        self.live_count = x.shape[0]
        self.removals = 0
        self.rebuilds = 0
        self._rebuild(np.arange(x.shape[0]))

    def __len__(self):
        return self.live_count

    def _rebuild(self, rows):
        (self._order, self._start, self._end, self._left, self._right, self._parent,
         self._dim, self._split, self._lo, self._hi) = _build(self.data, rows, self.leaf_size)
        self._live = (self._end - self._start).astype(np.int64)
        self._leaf_of = np.full(self.data.shape[0], -1, np.int64)
        for node in np.flatnonzero(self._left < 0):
            self._leaf_of[self._order[self._start[node]:self._end[node]]] = node
        self._built_size = len(rows)
        self._removed_since_build = 0

    def nearest(self, q):
        """``(row, distance)`` of the closest live row; ties go to the smaller row."""
        if self.live_count == 0:
            raise EmptyIndexError("empty index")
        q = np.ascontiguousarray(q, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.data.shape[1]:
            raise ValueError("query has the wrong dimension")
        fn = _query_numba if _accel.USE_NUMBA else _query_numpy
        row, d2 = fn(self.data, self.alive, self._order, self._start, self._end, self._left,
                     self._right, self._dim, self._split, self._lo, self._hi, self._live, q)
        return int(row), math.sqrt(d2)

    def remove(self, row):
        row = int(row)
        if not 0 <= row < self.data.shape[0]:
            raise IndexError(f"row {row} out of range")
        if not self.alive[row]:
            raise KeyError(f"row {row} already removed")
        self.alive[row] = False
        node = self._leaf_of[row]
        while node >= 0:
            self._live[node] -= 1
            node = self._parent[node]
        self.live_count -= 1
        self.removals += 1
        self._removed_since_build += 1
        if self.live_count and self._removed_since_build * 2 > self._built_size:
            self._rebuild(np.flatnonzero(self.alive))
            self.rebuilds += 1


def brute_force_nearest(data, alive, q):
    """Linear-scan reference: smallest squared distance, then smallest row."""
    x = np.asarray(data, dtype=float)
    rows = np.flatnonzero(alive)
    if rows.size == 0:
        raise EmptyIndexError("empty index")
    d2 = sq_dists(x[rows], np.asarray(q, dtype=float))
    j = np.lexsort((rows, d2))[0]
    return int(rows[j]), math.sqrt(d2[j])
