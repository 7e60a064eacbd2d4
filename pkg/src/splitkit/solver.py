"""Support points of a dataset by majorization-minimization.

The criterion is a difference of convex functions in the free points. Each
sweep majorizes every attraction term ``||z_i - Z_j||`` by a quadratic and
linearizes the repulsion term, which gives a closed-form simultaneous update
for all free points. Fixed points repel but never move.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import _accel
from ._accel import njit
from .data import DataError
from .energy import dist_sums

BLOCK = 64
JITTER = 1e-6


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator used everywhere randomness is needed."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass
class SolverConfig:
    n: int
    seed: int = 0
    max_iter: int = 500
    tol: float = 1e-8
    delta: float = 1e-10
    fixed: np.ndarray | None = None
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise DataError("solver needs n >= 1")
        if not self.tol > 0 or not self.delta > 0:
            raise DataError("tol and delta must be positive")
        if self.max_iter < 0:
            raise DataError("max_iter must be >= 0")
        if self.workers < 1:
            raise DataError("workers must be >= 1")


@dataclass
class SolverReport:
    points: np.ndarray
    iterations: int
    objective_trace: list = field(default_factory=list)
    converged: bool = False

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def _matrix(data):
    x = getattr(data, "values", data)
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def init_points(data, n, seed, return_rows=False):
    """``n`` distinct data rows drawn without replacement, plus tiny Gaussian jitter."""
    x = _matrix(data)
    if n > x.shape[0]:
        raise DataError(f"cannot draw n={n} points from N={x.shape[0]} rows")
    rng = make_rng(seed)
    rows = rng.permutation(x.shape[0])[:n]
    pts = x[rows] + JITTER * rng.standard_normal((n, x.shape[1]))
    return (pts, rows) if return_rows else pts


@njit
def _sweep_numba(points, fixed, data, counts, scale, lo, hi, delta, out, attr, rfree, rfix):
    n, d = points.shape
    num = np.empty(d)
    rep = np.empty(d)
    for i in range(lo, hi):
        wsum = 0.0
        a = 0.0
        for k in range(d):
            num[k] = 0.0
            rep[k] = 0.0
        for j in range(data.shape[0]):
            acc = 0.0
            for k in range(d):
                diff = points[i, k] - data[j, k]
                acc += diff * diff
            dist = math.sqrt(acc)
            a += counts[j] * dist
            w = counts[j] / max(dist, delta)
            wsum += w
            for k in range(d):
                num[k] += w * data[j, k]
        rf = 0.0
        for l in range(n):
            if l == i:
                continue
            acc = 0.0
            for k in range(d):
                diff = points[i, k] - points[l, k]
                acc += diff * diff
            dist = math.sqrt(acc)
            rf += dist
            inv = 1.0 / max(dist, delta)
            for k in range(d):
                rep[k] += (points[i, k] - points[l, k]) * inv
        rx = 0.0
        for l in range(fixed.shape[0]):
            acc = 0.0
            for k in range(d):
                diff = points[i, k] - fixed[l, k]
                acc += diff * diff
            dist = math.sqrt(acc)
            rx += dist
            inv = 1.0 / max(dist, delta)
            for k in range(d):
                rep[k] += (points[i, k] - fixed[l, k]) * inv
        for k in range(d):
            out[i, k] = (scale * rep[k] + num[k]) / wsum
        attr[i] = a
        rfree[i] = rf
        rfix[i] = rx


def _sweep_numpy(points, fixed, data, counts, scale, lo, hi, delta, out, attr, rfree, rfix):
    z = points[lo:hi]
    dist = cdist(z, data)
    attr[lo:hi] = dist @ counts
    w = counts / np.maximum(dist, delta)
    num = w @ data
    dz = cdist(z, points)
    rfree[lo:hi] = dz.sum(axis=1)
    inv = 1.0 / np.maximum(dz, delta)
    inv[np.arange(hi - lo), np.arange(lo, hi)] = 0.0
    rep = z * inv.sum(axis=1)[:, None] - inv @ points
    if fixed.shape[0]:
        df = cdist(z, fixed)
        rfix[lo:hi] = df.sum(axis=1)
        invf = 1.0 / np.maximum(df, delta)
        rep += z * invf.sum(axis=1)[:, None] - invf @ fixed
    else:
        rfix[lo:hi] = 0.0
    out[lo:hi] = (scale * rep + num) / w.sum(axis=1)[:, None]


class _Problem:
    """Deduplicated data plus constants shared by every sweep."""

    def __init__(self, data, fixed, delta, weights=None):
        x = _matrix(data)
        if weights is None:
            uniq, counts = np.unique(x, axis=0, return_counts=True)
            self.data = np.ascontiguousarray(uniq)
            self.counts = counts.astype(np.float64)
        else:
            self.data = x
            self.counts = np.ascontiguousarray(weights, dtype=np.float64)
        self.n_data = float(np.sum(self.counts))
        d = x.shape[1]
        self.fixed = np.empty((0, d)) if fixed is None else np.ascontiguousarray(_matrix(fixed))
        if self.fixed.shape[1] != d:
            raise DataError("fixed points have the wrong dimension")
        self.delta = float(delta)
        if self.fixed.shape[0]:
            self.fixed_attr = float(np.sum(dist_sums(self.fixed, self.data, self.counts)))
            self.fixed_rep = float(np.sum(dist_sums(self.fixed, self.fixed)))
        else:
            self.fixed_attr = self.fixed_rep = 0.0

    def sweep(self, points, workers=1):
        n = points.shape[0]
        n_tot = n + self.fixed.shape[0]
        scale = self.n_data / n_tot
        out = np.empty_like(points)
        attr, rfree, rfix = np.empty(n), np.empty(n), np.empty(n)
        kernel = _sweep_numba if _accel.USE_NUMBA else _sweep_numpy

        def run(lo):
            kernel(points, self.fixed, self.data, self.counts, scale, lo, min(lo + BLOCK, n),
                   self.delta, out, attr, rfree, rfix)

        starts = range(0, n, BLOCK)
        if workers > 1 and n > BLOCK:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(run, starts))
        else:
            for lo in starts:
                run(lo)
        obj = self._objective(n_tot, np.sum(attr), np.sum(rfree) + 2.0 * np.sum(rfix))
        return out, obj

    def _objective(self, n_tot, attr, rep):
        attr = attr + self.fixed_attr
        rep = rep + self.fixed_rep
        return float(2.0 * attr / (n_tot * self.n_data) - rep / (n_tot * n_tot))

    def objective(self, points):
        n_tot = points.shape[0] + self.fixed.shape[0]
        attr = np.sum(dist_sums(points, self.data, self.counts))
        rep = np.sum(dist_sums(points, points))
        if self.fixed.shape[0]:
            rep += 2.0 * np.sum(dist_sums(points, self.fixed))
        return self._objective(n_tot, attr, rep)


def ccp_sweep(points, data, fixed=None, delta=1e-10, weights=None, workers=1) -> np.ndarray:
    """One simultaneous majorization-minimization update of every free point."""
    pts = np.ascontiguousarray(_matrix(points))
    prob = _Problem(data, fixed, delta, weights)
    if pts.shape[1] != prob.data.shape[1]:
        raise DataError("points and data have different dimensions")
    return prob.sweep(pts, workers)[0]


def combined_objective(points, data, fixed=None) -> float:
    """Criterion of the union of free and fixed points against ``data``."""
    return _Problem(data, fixed, 1e-10).objective(np.ascontiguousarray(_matrix(points)))


def fit_support_points(data, cfg: SolverConfig, init=None, weights=None) -> SolverReport:
    """Iterate MM sweeps until the largest coordinate move drops below ``cfg.tol``.

    Non-convergence within ``cfg.max_iter`` is reported, not raised.
    ``init`` overrides the seeded initialization.
    """
    x = _matrix(data)
    if x.shape[0] < 2:
        raise DataError("support points need N >= 2 data rows")
    prob = _Problem(x, cfg.fixed, cfg.delta, weights)
    if init is None:
        pts = init_points(x, cfg.n, cfg.seed)
    else:
        pts = np.array(_matrix(init), dtype=np.float64, order="C")
        if pts.shape != (cfg.n, x.shape[1]):
            raise DataError(f"init has shape {pts.shape}, expected {(cfg.n, x.shape[1])}")
    trace = []
    converged = False
    it = 0
    while it < cfg.max_iter:
        new, obj = prob.sweep(pts, cfg.workers)
        trace.append(obj)
        it += 1
        move = float(np.max(np.abs(new - pts)))
        pts = new
        if move < cfg.tol:
            converged = True
            break
    trace.append(prob.objective(pts))
    return SolverReport(pts, it, trace, converged)
