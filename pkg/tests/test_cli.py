import json
import subprocess
import sys

import numpy as np
import pytest

from splitkit.cli import main
from splitkit.data import load_csv


@pytest.fixture
def csv_path(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((60, 2))
    g = rng.choice(["a", "b", "c"], 60)
    lines = ["x,y,g"] + [f"{a!r},{b!r},{c}" for (a, b), c in zip(x.tolist(), g)]
    p = tmp_path / "d.csv"
    p.write_text("\n".join(lines) + "\n")
    return p


def test_split_writes_partition(tmp_path, csv_path):
    te, tr, js = tmp_path / "te.csv", tmp_path / "tr.csv", tmp_path / "s.json"
    rc = main(["split", "--data", str(csv_path), "--ratio", "0.25", "--test-out", str(te),
               "--train-out", str(tr), "--json", str(js), "--max-iter", "50"])
    assert rc == 0
    assert load_csv(te).n_rows == 15 and load_csv(tr).n_rows == 45
    rec = json.loads(js.read_text())
    assert rec["method"] == "split" and len(rec["test_indices"]) == 15


@pytest.mark.parametrize("method", ["random", "cadex", "duplex", "stratified"])
def test_split_methods(tmp_path, csv_path, method):
    args = ["split", "--data", str(csv_path), "--ratio", "0.2", "--test-out", str(tmp_path / "a.csv"),
            "--train-out", str(tmp_path / "b.csv"), "--method", method]
    if method == "stratified":
        args += ["--label", "g"]
    assert main(args) == 0
    assert load_csv(tmp_path / "a.csv").n_rows == 12


def test_validate_and_kfold(tmp_path, csv_path, capsys):
    js = tmp_path / "s.json"
    main(["split", "--data", str(csv_path), "--ratio", "0.2", "--test-out", str(tmp_path / "a.csv"),
          "--train-out", str(tmp_path / "b.csv"), "--json", str(js), "--max-iter", "30"])
    assert main(["validate", "--data", str(csv_path), "--split", str(js), "--n-valid", "10",
                 "--valid-out", str(tmp_path / "v.csv"), "--max-iter", "30"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert len(rec["valid_indices"]) == 10
    assert load_csv(tmp_path / "v.csv").n_rows == 10
    assert main(["kfold", "--data", str(csv_path), "--split", str(js), "--k", "4", "--max-iter", "20"]) == 0
    folds = json.loads(capsys.readouterr().out)["folds"]
    assert sorted(map(len, folds)) == [12, 12, 12, 12]


def test_input_errors_exit_2(tmp_path, csv_path, capsys):
    out = ["--test-out", str(tmp_path / "a.csv"), "--train-out", str(tmp_path / "b.csv")]
    assert main(["split", "--data", str(tmp_path / "missing.csv"), "--ratio", "0.2"] + out) == 2
    assert main(["split", "--data", str(csv_path), "--ratio", "0.001"] + out) == 2
    assert main(["split", "--data", str(csv_path), "--ratio", "0.2", "--method", "stratified"] + out) == 2
    assert "error" in capsys.readouterr().err


def test_strict_nonconvergence_exit_3(tmp_path, csv_path):
    rc = main(["split", "--data", str(csv_path), "--ratio", "0.3", "--test-out", str(tmp_path / "a.csv"),
               "--train-out", str(tmp_path / "b.csv"), "--max-iter", "1", "--strict"])
    assert rc == 3


def test_bench_subcommand(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["bench", "coding", "--reps", "100", "--max-iter", "2", "--out", str(out)]) == 0
    assert out.exists() and (tmp_path / "c.csv.json").exists()


def test_console_entry_point(csv_path, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "splitkit.cli", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "splitkit" in proc.stdout
