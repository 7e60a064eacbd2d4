"""Synthetic data generators and the simulation studies.

All randomness goes through Philox generators seeded from
``derive_seed(seed, *keys)``, so every study is reproducible from its
top-level seed and configuration.
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import CATEGORICAL, ColumnSchema, DataError, Dataset
from .encoding import (SCHEMES, contrast, mean_abs_correlation,
                       separation_distance, within_rmse)
from .energy import ks_statistic, two_sample_energy
from .solver import SolverConfig, fit_support_points, init_points, make_rng
from .splitter import cadex_split, duplex_split, random_split, split

BIAS_METHODS = ("split", "random", "cadex", "duplex")
MARGINAL_METHODS = ("split", "random", "cadex", "duplex")
MIN_REPS = 10


def derive_seed(seed, *keys) -> int:
    words = [int(seed) & 0xFFFFFFFF, (int(seed) >> 32) & 0xFFFFFFFF]
    words += [int(k) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


# -- generators ---------------------------------------------------------------

def gen_bivariate_normal(N, seed, rho=0.5) -> Dataset:
    """N draws from a centered bivariate normal with unit variances and correlation ``rho``."""
    if N < 2:
        raise DataError("N must be >= 2")
    chol = np.linalg.cholesky(np.array([[1.0, rho], [rho, 1.0]]))
    z = make_rng(seed).standard_normal((N, 2)) @ chol.T
    return Dataset.from_arrays({"x1": z[:, 0], "x2": z[:, 1]})


def gen_quadratic(N, seed) -> Dataset:
    """X ~ N(0, 1), Y = X^2 + e with e ~ N(0, 1)."""
    if N < 2:
        raise DataError("N must be >= 2")
    rng = make_rng(seed)
    x = rng.standard_normal(N)
    y = x ** 2 + rng.standard_normal(N)
    return Dataset.from_arrays({"x": x, "y": y})


def gen_three_class(N, seed) -> Dataset:
    """Two standardized continuous predictors and a Red/Green/Blue label.

    X1 ~ N(0, 1), X2 | X1 ~ N(X1^2, 1), both scaled to mean 0 and unit
    sample variance; Red where 6 X1 + X2 + 6 < 0, Blue where
    -6 X1 + X2 + 6 < 0, Green elsewhere.
    """
    if N < 3:
        raise DataError("N must be >= 3")
    rng = make_rng(seed)
    x1 = rng.standard_normal(N)
    x2 = x1 ** 2 + rng.standard_normal(N)
    x1 = (x1 - x1.mean()) / x1.std(ddof=1)
    x2 = (x2 - x2.mean()) / x2.std(ddof=1)
    label = np.where(6 * x1 + x2 + 6 < 0, "Red", np.where(-6 * x1 + x2 + 6 < 0, "Blue", "Green"))
    ds = Dataset.from_arrays({"x1": x1, "x2": x2, "label": label.astype(object)})
    # Level order fixed regardless of which label happens to appear first.
    schema = ds.schema[:2] + (ColumnSchema("label", CATEGORICAL, ("Red", "Green", "Blue")),)
    return Dataset(schema, ds.columns)


# -- polynomial models ---------------------------------------------------------

@dataclass(frozen=True)
class PolyModel:
    coef: np.ndarray  # theta_0 .. theta_r

    @property
    def degree(self) -> int:
        return len(self.coef) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coef)


def fit_polynomial(x, y, r) -> PolyModel:
    """Least-squares polynomial of degree ``r`` via a QR factorization."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if r < 0:
        raise DataError("degree must be >= 0")
    if len(np.unique(x)) < r + 1:
        raise DataError(f"rank deficient: {len(np.unique(x))} distinct x for degree {r}")
    V = np.vander(x, r + 1, increasing=True)
    q, rr = np.linalg.qr(V)
    coef = np.linalg.solve(rr, q.T @ y)
    return PolyModel(coef)


def gaussian_moment(k: int) -> float:
    """E[X^k] for X ~ N(0, 1): 0 for odd k, (k-1)!! for even k."""
    if k % 2:
        return 0.0
    out = 1.0
    for j in range(k - 1, 0, -2):
        out *= j
    return out


def true_generalization_error(model: PolyModel) -> float:
    """E_X[(X^2 - g(X))^2] + 1 for X ~ N(0, 1), via exact Gaussian moments."""
    h = -np.asarray(model.coef, dtype=float)
    h = np.pad(h, (0, max(0, 3 - len(h))))
    h[2] += 1.0
    sq = np.polynomial.polynomial.polymul(h, h)
    return float(sum(c * gaussian_moment(k) for k, c in enumerate(sq))) + 1.0


def estimate_generalization_error(model: PolyModel, x, y) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise DataError("empty test set")
    return float(np.mean((np.asarray(y, dtype=float) - model(x)) ** 2))


# -- reports -------------------------------------------------------------------

@dataclass
class StudyReport:
    study: str
    config: dict
    rows: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    summary: list = field(default_factory=list)

    def columns(self) -> list:
        cols = []
        for row in self.rows:
            for k in row:
                if k not in cols:
                    cols.append(k)
        return cols

    def to_dict(self) -> dict:
        return {"study": self.study, "config": self.config, "rows": self.rows,
                "seeds": self.seeds, "summary": self.summary}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            Path(path).write_text(text + "\n", encoding="utf-8")
        return text

    @classmethod
    def from_json(cls, text_or_path) -> "StudyReport":
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            text = Path(text).read_text(encoding="utf-8")
        d = json.loads(text)
        return cls(d["study"], d["config"], d["rows"], d.get("seeds", {}), d.get("summary", []))

    def to_csv(self, path=None) -> str:
        """Rows as CSV; floats written with ``repr`` so they parse back exactly."""
        buf = io.StringIO()
        cols = self.columns()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.rows:
            w.writerow([_cell(row.get(c)) for c in cols])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
            meta = {"study": self.study, "config": self.config, "seeds": self.seeds,
                    "summary": self.summary}
            Path(str(path) + ".json").write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, path) -> "StudyReport":
        path = Path(path)
        meta = json.loads(Path(str(path) + ".json").read_text(encoding="utf-8"))
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            rows = [{k: _uncell(v) for k, v in r.items() if v != ""} for r in reader]
        return cls(meta["study"], meta["config"], rows, meta.get("seeds", {}), meta.get("summary", []))


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _uncell(s):
    if s in ("true", "false"):
        return s == "true"
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def _quantiles(values):
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"mean": float(v.mean()), "median": float(med), "iqr": float(q3 - q1),
            "sd": float(v.std(ddof=1)) if v.size > 1 else 0.0, "count": int(v.size)}


def summarize(rows, keys, value):
    groups = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row[value])
    return [dict(zip(keys, key), **_quantiles(vals)) for key, vals in groups.items()]


def _solver(seed, max_iter, tol):
    return SolverConfig(n=1, seed=seed, max_iter=max_iter, tol=tol)


# -- studies -------------------------------------------------------------------

def run_bias_study(N=1000, ratios=(0.1, 0.5), degrees=range(2, 7), reps=100, seed=0,
                   fixed_data=False, methods=BIAS_METHODS, max_iter=500, tol=1e-8) -> StudyReport:
    """Estimation error of the test-set generalization error, per splitter.

    For each replicate, each ratio and each method the quadratic data are
    split once; polynomials of every degree are fitted on the training rows
    and ``E_hat - E`` recorded. ``fixed_data`` reuses one dataset for every
    replicate (deterministic splitters then give identical rows).
    """
    if reps < MIN_REPS:
        raise DataError(f"reps must be >= {MIN_REPS}")
    degrees = list(degrees)
    ratios = list(ratios)
    cfg = {"N": N, "ratios": ratios, "degrees": degrees, "reps": reps, "seed": seed,
           "fixed_data": fixed_data, "methods": list(methods), "max_iter": max_iter, "tol": tol}
    report = StudyReport("bias", cfg)
    cache = {}
    for rep in range(reps):
        data_seed = derive_seed(seed, 1, 0 if fixed_data else rep)
        report.seeds[f"data/{rep}"] = data_seed
        ds = gen_quadratic(N, data_seed)
        x, y = ds.column("x"), ds.column("y")
        for gi, gamma in enumerate(ratios):
            for method in methods:
                split_seed = derive_seed(seed, 2, rep, gi, BIAS_METHODS.index(method) if method in BIAS_METHODS else 9)
                t0 = time.perf_counter()
                if method == "split":
                    res = split(ds, gamma, _solver(split_seed, max_iter, tol))
                    report.seeds[f"split/{rep}/{gamma}"] = split_seed
                elif method == "random":
                    res = random_split(ds, gamma, split_seed)
                    report.seeds[f"random/{rep}/{gamma}"] = split_seed
                else:
                    key = (method, gamma, data_seed)
                    if key not in cache:
                        cache[key] = (cadex_split if method == "cadex" else duplex_split)(ds, gamma)
                    res = cache[key]
                elapsed = time.perf_counter() - t0
                tr, te = res.train_indices, res.test_indices
                for r in degrees:
                    model = fit_polynomial(x[tr], y[tr], r)
                    E = true_generalization_error(model)
                    E_hat = estimate_generalization_error(model, x[te], y[te])
                    report.rows.append({"rep": rep, "gamma": gamma, "method": method, "degree": r,
                                        "E": E, "E_hat": E_hat, "error": E_hat - E,
                                        "seconds": elapsed})
    report.summary = summarize(report.rows, ("gamma", "degree", "method"), "error")
    return report


def coding_support_points(scheme, m, replicates_per_level=1000, points_per_level=100,
                          seed=0, max_iter=500, tol=1e-8):
    """Support points of one m-level categorical variable replicated evenly.

    Returns ``(points, contrast_matrix)``. The data has only m distinct rows,
    so the solver works on the level rows weighted by their replicate count.
    """
    cm = contrast(scheme, m)
    weights = np.full(m, float(replicates_per_level))
    n = points_per_level * m
    data = np.repeat(cm.columns, replicates_per_level, axis=0)
    rng_cfg = SolverConfig(n=n, seed=seed, max_iter=max_iter, tol=tol)
    init = init_points(data, n, seed)
    rep = fit_support_points(cm.columns, rng_cfg, init=init, weights=weights)
    return rep.points, cm


def run_coding_study(m_range=range(2, 11), replicates_per_level=1000, points_per_level=100,
                     seed=0, schemes=SCHEMES, max_iter=500, tol=1e-8) -> StudyReport:
    """Within-cluster RMSE, mean |correlation| and separation per coding and m."""
    m_range = list(m_range)
    cfg = {"m_range": m_range, "replicates_per_level": replicates_per_level,
           "points_per_level": points_per_level, "seed": seed, "schemes": list(schemes),
           "max_iter": max_iter, "tol": tol}
    report = StudyReport("coding", cfg)
    for m in m_range:
        # Same seed for every coding at a given m: initial rows coincide across codings.
        s = derive_seed(seed, 3, m)
        report.seeds[f"m/{m}"] = s
        for scheme in schemes:
            t0 = time.perf_counter()
            pts, cm = coding_support_points(scheme, m, replicates_per_level, points_per_level,
                                            s, max_iter, tol)
            report.rows.append({
                "m": m, "scheme": scheme,
                "within_rmse": within_rmse(pts, cm.columns),
                "mean_abs_correlation": mean_abs_correlation(cm) if m >= 3 else None,
                "separation": separation_distance(cm),
                "seconds": time.perf_counter() - t0,
            })
    return report


def run_marginal_study(N=1000, gamma=0.1, reps=20, random_reps=100, seed=0,
                       max_iter=500, tol=1e-8) -> StudyReport:
    """Per-marginal KS and energy distance of each method's test set vs the full data."""
    if reps < MIN_REPS:
        raise DataError(f"reps must be >= {MIN_REPS}")
    cfg = {"N": N, "gamma": gamma, "reps": reps, "random_reps": random_reps, "seed": seed,
           "max_iter": max_iter, "tol": tol}
    report = StudyReport("marginal", cfg)
    data_seed = derive_seed(seed, 4)
    report.seeds["data"] = data_seed
    ds = gen_bivariate_normal(N, data_seed)
    x = ds.numeric()

    def record(method, rep, res, s):
        te = x[res.test_indices]
        report.rows.append({"method": method, "rep": rep,
                            "ks_x1": ks_statistic(te[:, 0], x[:, 0]),
                            "ks_x2": ks_statistic(te[:, 1], x[:, 1]),
                            "energy": two_sample_energy(te, x), "seconds": s})

    for rep in range(reps):
        s = derive_seed(seed, 5, rep)
        report.seeds[f"split/{rep}"] = s
        t0 = time.perf_counter()
        res = split(ds, gamma, _solver(s, max_iter, tol))
        record("split", rep, res, time.perf_counter() - t0)
    for rep in range(random_reps):
        s = derive_seed(seed, 6, rep)
        report.seeds[f"random/{rep}"] = s
        t0 = time.perf_counter()
        res = random_split(ds, gamma, s)
        record("random", rep, res, time.perf_counter() - t0)
    for method, fn in (("cadex", cadex_split), ("duplex", duplex_split)):
        t0 = time.perf_counter()
        res = fn(ds, gamma)
        record(method, 0, res, time.perf_counter() - t0)
    summary = []
    for stat in ("ks_x1", "ks_x2", "energy"):
        for row in summarize(report.rows, ("method",), stat):
            summary.append(dict(row, statistic=stat))
    report.summary = summary
    return report


STUDIES = {"bias": run_bias_study, "coding": run_coding_study, "marginal": run_marginal_study}
