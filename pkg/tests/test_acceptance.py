"""Acceptance criteria, each run at its stated scale and tolerance.

Every test prints one ``[PASS]``/``[FAIL]`` line (also repeated in the
pytest terminal summary) before asserting.
"""
import itertools
import os
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from splitkit.bench import (gen_bivariate_normal, gen_quadratic, gen_three_class,
                            run_bias_study, run_coding_study, run_marginal_study)
from splitkit.data import ConstantColumnWarning, Dataset
from splitkit.encoding import encode, helmert_coding, orthogonal_polynomial_coding
from splitkit.energy import sp_objective
from splitkit.nn_index import NNIndex, brute_force_nearest
from splitkit.solver import (SolverConfig, _Problem, ccp_sweep, fit_support_points,
                             init_points, make_rng)
from splitkit.splitter import (n_test_for, random_split, split, stratified_split,
                               validation_split)

pytestmark = pytest.mark.slow


def _summary(report, stat=None):
    out = {}
    for row in report.summary:
        if stat is None or row.get("statistic") == stat:
            out[tuple(v for k, v in row.items() if k in ("gamma", "degree", "method"))] = row
    return out


def test_criterion_1_marginal_matching(acceptance):
    t0 = time.perf_counter()
    rep = run_marginal_study(N=1000, gamma=0.1, reps=20, random_reps=100, seed=0)
    elapsed = time.perf_counter() - t0
    mean = {}
    for stat in ("ks_x1", "ks_x2", "energy"):
        for (method,), row in _summary(rep, stat).items():
            mean[method, stat] = row["mean"]
    ks_ok = all(mean["split", s] < mean[m, s] for m in ("cadex", "duplex") for s in ("ks_x1", "ks_x2"))
    energy_ok = mean["split", "energy"] < mean["random", "energy"]
    ok = ks_ok and energy_ok and elapsed < 60
    acceptance(1, ok, (
        f"KS split {mean['split', 'ks_x1']:.4f}/{mean['split', 'ks_x2']:.4f} vs "
        f"cadex {mean['cadex', 'ks_x1']:.4f}/{mean['cadex', 'ks_x2']:.4f}, "
        f"duplex {mean['duplex', 'ks_x1']:.4f}/{mean['duplex', 'ks_x2']:.4f}; energy split "
        f"{mean['split', 'energy']:.5f} vs random {mean['random', 'energy']:.5f}; {elapsed:.1f}s"))
    assert ok


def test_criterion_2_bias_study(acceptance):
    rep = run_bias_study(N=1000, ratios=(0.1, 0.5), degrees=range(2, 7), reps=50, seed=0)
    cells = _summary(rep)
    bias_wins = iqr_wins = 0
    for gamma in (0.1, 0.5):
        for r in range(2, 7):
            sp = cells[gamma, r, "split"]
            if all(abs(sp["mean"]) <= abs(cells[gamma, r, m]["mean"]) for m in ("cadex", "duplex")):
                bias_wins += 1
            if sp["iqr"] <= cells[gamma, r, "random"]["iqr"]:
                iqr_wins += 1
    ok = bias_wins >= 8 and iqr_wins >= 8
    acceptance(2, ok, f"|bias| split <= cadex,duplex in {bias_wins}/10 cells; "
                      f"IQR split <= random in {iqr_wins}/10 cells (need 8 each)")
    assert ok


def test_criterion_3_coding_study(acceptance):
    rep = run_coding_study(m_range=range(2, 11), replicates_per_level=1000, points_per_level=100, seed=0)
    cell = {(r["m"], r["scheme"]): r for r in rep.rows}
    bad_rmse = [m for m in range(2, 11)
                if not (cell[m, "helmert"]["within_rmse"] <= cell[m, "treatment"]["within_rmse"]
                        and cell[m, "helmert"]["within_rmse"] <= cell[m, "sum"]["within_rmse"])]
    corr_ok = all(cell[m, s]["mean_abs_correlation"] == 0.0
                  for m in range(3, 11) for s in ("helmert", "polynomial"))
    corr_ok = corr_ok and cell[3, "treatment"]["mean_abs_correlation"] > 0.3
    sep_ok = (abs(cell[3, "helmert"]["separation"] - 2.0) <= 1e-9
              and abs(cell[3, "treatment"]["separation"] - np.sqrt(3.0)) <= 1e-9)
    ok = not bad_rmse and corr_ok and sep_ok
    rmse = ", ".join(f"m={m}: h={cell[m, 'helmert']['within_rmse']:.4f} "
                     f"t={cell[m, 'treatment']['within_rmse']:.4f} s={cell[m, 'sum']['within_rmse']:.4f}"
                     for m in bad_rmse)
    acceptance(3, ok, f"correlation {'ok' if corr_ok else 'BAD'}, separation {'ok' if sep_ok else 'BAD'}, "
                      f"within-RMSE ordering violated at m in {bad_rmse} ({rmse})")
    assert ok


def test_criterion_4_solver_properties(acceptance):
    rng = make_rng(4)
    worst = -np.inf
    for _ in range(100):
        d, N = int(rng.integers(1, 4)), int(rng.integers(3, 60))
        n = int(rng.integers(1, min(N, 10) + 1))
        x = rng.standard_normal((N, d))
        z = init_points(x, n, int(rng.integers(1 << 30)))
        for _ in range(10):
            new = ccp_sweep(z, x)
            before, after = sp_objective(z, x), sp_objective(new, x)
            worst = max(worst, (after - before) / abs(before))
            z = new
    monotone = worst <= 1e-9
    data = np.array([[-1.0], [0.0], [1.0]])
    grid = np.arange(-10000, 10001) * 1e-4
    oracle = grid[int(np.argmin([sp_objective([[g]], data) for g in grid]))]
    z1 = fit_support_points(data, SolverConfig(n=1)).points[0, 0]
    oned = abs(z1 - oracle) <= 1e-6 and abs(z1) <= 1e-6
    x = make_rng(5).standard_normal((1000, 3))
    outs = [fit_support_points(x, SolverConfig(n=300, seed=11, max_iter=40, workers=w)).points
            for w in (1, 2, 8)]
    identical = all(np.array_equal(outs[0], o) for o in outs[1:])
    ok = monotone and oned and identical
    acceptance(4, ok, f"worst relative increase {worst:.2e}; 1-D point {z1:.2e} (grid {oracle:.1e}); "
                      f"workers 1/2/8 bit-identical: {identical}")
    assert ok


def test_criterion_5_discrete_oracle(acceptance):
    rng = make_rng(55)
    le_median = le_q1 = 0
    for t in range(50):
        N, d, n = int(rng.integers(4, 13)), int(rng.integers(1, 3)), int(rng.integers(1, 4))
        n = min(n, N // 2)
        x = rng.standard_normal((N, d))
        res = split(x, n / N, SolverConfig(n=1, seed=t))
        xe = encode(Dataset.from_arrays({f"x{k}": x[:, k] for k in range(d)})).values
        d1 = res.test_indices if res.diagnostics["d1_role"] == "test" else res.train_indices
        assert len(d1) == n
        got = sp_objective(xe[d1], xe)
        allv = np.array([sp_objective(xe[list(c)], xe) for c in itertools.combinations(range(N), n)])
        # subsets that tie exactly in real arithmetic can differ in the last ulp
        slack = 1e-12 * np.abs(allv).max()
        le_median += got <= np.median(allv) + slack
        le_q1 += got <= np.percentile(allv, 25) + slack
    ok = le_median == 50 and le_q1 >= 45
    acceptance(5, ok, f"<= median in {le_median}/50, <= 25th percentile in {le_q1}/50")
    assert ok


def _random_mixed(rng, trial):
    N = int(rng.integers(4, 40))
    cols, kinds = {}, {}
    for k in range(int(rng.integers(1, 4))):
        cols[f"c{k}"] = rng.standard_normal(N) if trial % 3 else rng.integers(0, 3, N).astype(float)
    if trial % 4 == 0:
        cols["const"] = np.full(N, 7.0)
    if trial % 2 == 0:
        m = int(rng.integers(2, 5))
        cols["g"] = np.array([f"L{v}" for v in rng.integers(0, m, N)], dtype=object)
        kinds["g"] = "categorical"
    dup = rng.integers(0, N, int(rng.integers(0, N // 2 + 1)))
    keep = N - len(dup)
    cols = {k: np.concatenate([v[:keep], v[dup]]) for k, v in cols.items()}
    return Dataset.from_arrays(cols, kinds)


def test_criterion_6_algorithm_contract(acceptance):
    rng = make_rng(66)
    bad = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConstantColumnWarning)
        for trial in range(500):
            ds = _random_mixed(rng, trial)
            N = ds.n_rows
            k = int(rng.integers(1, N))
            gamma = (k + 0.25) / N
            res = split(ds, gamma, SolverConfig(n=1, seed=trial))
            t, r = res.test_indices, res.train_indices
            ok = (len(t) == n_test_for(N, gamma) and len(np.intersect1d(t, r)) == 0
                  and np.array_equal(np.sort(np.concatenate([t, r])), np.arange(N)))
            bad += not ok
    x = rng.standard_normal((3000, 3))
    x[1500:] = np.round(x[1500:], 1)
    ix = NNIndex(x)
    alive = np.ones(len(x), bool)
    mismatches = 0
    for op in range(10_000):
        if op % 2 and alive.sum() > 1:
            row = int(rng.choice(np.flatnonzero(alive)))
            ix.remove(row)
            alive[row] = False
        else:
            q = np.round(rng.standard_normal(3), 1)
            mismatches += ix.nearest(q) != brute_force_nearest(x, alive, q)
    ok = bad == 0 and mismatches == 0
    acceptance(6, ok, f"{500 - bad}/500 split trials satisfy the partition invariants; "
                      f"{mismatches} nn mismatches over 10^4 interleaved ops ({ix.rebuilds} rebuilds)")
    assert ok


def test_criterion_7_categorical_balance(acceptance):
    in_range = 0
    for seed in range(20):
        ds = gen_three_class(100, seed)
        res = split(ds, 0.2, SolverConfig(n=1, seed=seed))
        lab = ds.column("label")[res.test_indices]
        in_range += all(2 <= int((lab == lv).sum()) <= 5 for lv in ("Red", "Blue"))
    labels = np.array(["Red"] * 16 + ["Green"] * 68 + ["Blue"] * 16, dtype=object)
    ds = Dataset.from_arrays({"x": np.arange(100.0), "label": labels}, {"label": "categorical"})
    strat = stratified_split(ds, 0.2, "label", seed=0)
    got = tuple(int((labels[strat.test_indices] == lv).sum()) for lv in ("Red", "Green", "Blue"))
    ok = in_range >= 18 and got == (3, 14, 3)
    acceptance(7, ok, f"minority counts in [2,5] for {in_range}/20 seeds; stratified counts {got}")
    assert ok


def _sweep_seconds(n, N, d, reps=5):
    rng = make_rng(n * 7919 + N)
    x = rng.standard_normal((N, d))
    prob = _Problem(x, None, 1e-10)
    z = init_points(x, n, 1)
    prob.sweep(z)
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        prob.sweep(z)
        best = min(best, time.perf_counter() - t0)
    return best


def test_criterion_8_performance(acceptance, tmp_path):
    x = make_rng(8).standard_normal((1030, 9)) * np.arange(1, 10) + np.arange(9)
    path = tmp_path / "concrete.csv"
    path.write_text("\n".join([",".join(f"v{k}" for k in range(9))]
                              + [",".join(repr(float(v)) for v in row) for row in x]) + "\n")
    env = dict(os.environ, NUMBA_NUM_THREADS="1", OMP_NUM_THREADS="1")
    cmd = [sys.executable, "-m", "splitkit.cli", "split", "--data", str(path), "--ratio", "0.2",
           "--test-out", str(tmp_path / "te.csv"), "--train-out", str(tmp_path / "tr.csv")]
    subprocess.run(cmd, env=env, check=True)  # warm the compiled-kernel cache
    t0 = time.perf_counter()
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    unit = {(n, N): _sweep_seconds(n, N, 4) / (n * N * 4) for n in (100, 200) for N in (2000, 4000)}
    spread = max(unit.values()) / min(unit.values())
    ok = proc.returncode == 0 and elapsed < 10 and spread <= 2.0
    acceptance(8, ok, f"CLI split of 1030x9 at ratio 0.2 took {elapsed:.2f}s; "
                      f"per-(n*N*d) sweep cost spread {spread:.2f}x over n in (100,200), N in (2000,4000)")
    assert ok


def test_criterion_9_validation_split(acceptance):
    wins = 0
    unchanged = True
    for seed in range(50):
        ds = gen_quadratic(100, seed)
        x = encode(ds).values
        base = split(ds, 0.2, SolverConfig(n=1, seed=seed))
        test_before = base.test_indices.copy()
        res = validation_split(ds, base, 20, SolverConfig(n=1, seed=seed))
        unchanged &= np.array_equal(res.test_indices, test_before)
        te = x[res.test_indices]

        def min_dist(rows):
            return np.sqrt(((x[rows][:, None, :] - te[None]) ** 2).sum(-1)).min()

        rnd = make_rng(1000 + seed).choice(base.train_indices, 20, replace=False)
        wins += min_dist(res.valid_indices) >= min_dist(rnd)
    ok = wins >= 40 and unchanged
    acceptance(9, ok, f"validation min distance >= random in {wins}/50 seeds; test rows unchanged: {unchanged}")
    assert ok
