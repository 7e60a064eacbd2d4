"""Energy-distance quantities and marginal goodness-of-fit diagnostics."""
from __future__ import annotations

import math

import numpy as np
from scipy.spatial.distance import cdist

from . import _accel
from ._accel import njit

_BLOCK = 256


@njit
def _dist_sums_numba(a, b, w):
    n, d = a.shape
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(b.shape[0]):
            acc = 0.0
            for k in range(d):
                diff = a[i, k] - b[j, k]
                acc += diff * diff
            s += w[j] * math.sqrt(acc)
        out[i] = s
    return out


def _dist_sums_numpy(a, b, w):
    out = np.empty(a.shape[0])
    for lo in range(0, a.shape[0], _BLOCK):
        out[lo:lo + _BLOCK] = cdist(a[lo:lo + _BLOCK], b) @ w
    return out


def dist_sums(a, b, weights=None) -> np.ndarray:
    """Per-row weighted sums ``sum_j w_j ||a_i - b_j||``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    w = np.ones(b.shape[0]) if weights is None else np.ascontiguousarray(weights, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _dist_sums_numba(a, b, w)
    return _dist_sums_numpy(a, b, w)


def _as_points(x, name):
    x = getattr(x, "values", x)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"{name}: expected an n x d matrix")
    if x.shape[0] == 0:
        raise ValueError(f"{name}: empty point set")
    return x


def mean_pairwise(a, b, weights_b=None) -> float:
    """Weighted mean of ``||a_i - b_j||`` over all pairs (pairwise-summed)."""
    s = dist_sums(a, b, weights_b)
    wb = b.shape[0] if weights_b is None else float(np.sum(weights_b))
    return float(np.sum(s)) / (a.shape[0] * wb)


def sp_objective(points, data, weights=None) -> float:
    """Support-point criterion of ``points`` against the rows of ``data``.

    ``2/(nN) sum_ij ||z_i - Z_j|| - 1/n^2 sum_ik ||z_i - z_k||``; the
    constant data-data term is left out. ``weights`` are optional row
    multiplicities for ``data``.
    """
    z = _as_points(points, "points")
    x = _as_points(data, "data")
    if z.shape[1] != x.shape[1]:
        raise ValueError(f"dimension mismatch: points have d={z.shape[1]}, data d={x.shape[1]}")
    return 2.0 * mean_pairwise(z, x, weights) - mean_pairwise(z, z)


def two_sample_energy(a, b) -> float:
    """Empirical energy distance ``2E|A-B| - E|A-A'| - E|B-B'|`` (V-statistic form)."""
    a = _as_points(a, "a")
    b = _as_points(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError("dimension mismatch")
    return 2.0 * mean_pairwise(a, b) - mean_pairwise(a, a) - mean_pairwise(b, b)


def ks_statistic(sample, reference) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (sup distance between ECDFs)."""
    s = np.sort(np.asarray(sample, dtype=float).ravel())
    r = np.sort(np.asarray(reference, dtype=float).ravel())
    if s.size == 0 or r.size == 0:
        raise ValueError("ks_statistic needs two nonempty samples")
    grid = np.concatenate([s, r])
    fs = np.searchsorted(s, grid, side="right") / s.size
    fr = np.searchsorted(r, grid, side="right") / r.size
    return float(np.max(np.abs(fs - fr)))
