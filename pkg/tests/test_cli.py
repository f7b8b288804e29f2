import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from itl import experiments as E
from itl import model as M
from itl.cli import main

SINE_CFG = """\
[task]
family = qr
lam = 1e-2
lam_nc = 10
lam_b = 1e-2
kappa = 1e-2
m = 20

[kernels]
gamma_x = 2
gamma_theta = 10
gamma_b = 10

[data]
source = sine
n = 40

[solver]
max_iters = 5000
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "sine.ini").write_text(SINE_CFG)
    return tmp_path


@pytest.fixture
def trained(workdir):
    assert main(["train", "--config", "sine.ini"]) == 0
    return workdir


def _read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def test_train_writes_model_and_report(trained):
    rep = json.loads((trained / "report.json").read_text())
    assert rep["termination"] in ("GradTol", "FTol")
    assert rep["wall_time_s"] > 0 and rep["iterations"] > 0
    assert M.load(trained / "model.json").m == 20


def test_rerun_is_byte_identical(trained):
    first = (trained / "model.json").read_bytes()
    assert main(["train", "--config", "sine.ini"]) == 0
    assert (trained / "model.json").read_bytes() == first


def test_invalid_sampler_exits_2(workdir, capsys):
    assert main(["train", "--config", "sine.ini", "--set", "task.sampler=halton"]) == 2
    assert "task.sampler" in capsys.readouterr().err
    assert not (workdir / "model.json").exists()


@pytest.mark.parametrize("override", ["task.bogus=1", "nosuch.key=1", "task.lam=abc", "task.lam=-1", "broken"])
def test_bad_overrides_exit_2(workdir, override):
    assert main(["train", "--config", "sine.ini", "--set", override]) == 2


def test_missing_config_exits_2(workdir):
    assert main(["train", "--config", "absent.ini"]) == 2


def test_synth_then_train_from_csv(workdir):
    assert main(["synth", "two-moons", "--n", "60", "--out", "moons.csv"]) == 0
    header, M_ = _read(workdir / "moons.csv")
    assert header == ["x0", "x1", "y"] and M_.shape == (60, 3)
    args = ["train", "--config", "sine.ini", "--set", "data.source=csv", "--set", "data.path=moons.csv",
            "--set", "data.target_column=y", "--set", "task.family=csc", "--set", "task.lam_nc=0",
            "--set", "output.model=csc.json"]
    assert main(args) == 0
    assert M.load(workdir / "csc.json").task == "csc"


def test_predict_at_anchors_matches_in_process(trained):
    mdl = M.load(trained / "model.json")
    X = mdl.standardizer.inverse(mdl.x_anchors)
    np.savetxt(trained / "x.csv", X, delimiter=",", header="x0", comments="")
    thetas = ",".join(repr(float(t)) for t in mdl.theta_anchors)
    assert main(["predict", "--model", "model.json", "--input", "x.csv", "--thetas", thetas, "--out", "p.csv"]) == 0
    header, P = _read(trained / "p.csv")
    assert len(header) == mdl.m and P.shape == (mdl.n, mdl.m)
    assert np.array_equal(P, M.predict_matrix(mdl, X, mdl.theta_anchors))


def test_predict_is_continuous_off_anchor(trained):
    np.savetxt(trained / "x.csv", [[0.3], [1.1]], delimiter=",", header="x0", comments="")
    deltas = []
    for d in (1e-2, 1e-3, 1e-4):
        thetas = f"0.4321,{0.4321 + d!r}"
        assert main(["predict", "--model", "model.json", "--input", "x.csv", "--thetas", thetas,
                     "--out", "p.csv"]) == 0
        P = _read(trained / "p.csv")[1]
        assert np.isfinite(P).all()
        deltas.append(np.abs(P[:, 1] - P[:, 0]).max())
    assert deltas[0] > deltas[1] > deltas[2]


def test_predict_errors(trained):
    np.savetxt(trained / "x2.csv", np.ones((3, 2)), delimiter=",", header="a,b", comments="")
    np.savetxt(trained / "x.csv", np.ones((3, 1)), delimiter=",", header="a", comments="")
    assert main(["predict", "--model", "model.json", "--input", "x2.csv", "--thetas", "0.5", "--out", "p.csv"]) != 0
    assert main(["predict", "--model", "model.json", "--input", "x.csv", "--thetas", "1.2", "--out", "p.csv"]) != 0
    assert main(["predict", "--model", "absent.json", "--input", "x.csv", "--thetas", "0.5", "--out", "p.csv"]) == 1


def test_predict_empty_input(trained):
    (trained / "empty.csv").write_text("x0\n")
    assert main(["predict", "--model", "model.json", "--input", "empty.csv", "--thetas", "0.1,0.9",
                 "--out", "p.csv"]) == 0
    assert (trained / "p.csv").read_text().strip() == "theta=0.1,theta=0.9"


def test_eval_writes_metrics(trained):
    assert main(["synth", "sine", "--n", "300", "--seed", "4", "--out", "test.csv"]) == 0
    assert main(["eval", "--model", "model.json", "--input", "test.csv", "--target-column", "y",
                 "--out", "metrics.json"]) == 0
    met = json.loads((trained / "metrics.json").read_text())
    assert met["theta_grid"] == [0.1, 0.3, 0.5, 0.7, 0.9]
    assert met["pinball_loss"] > 0 and met["n"] == 300


def test_cv_search(workdir, capsys):
    args = ["cv-search", "--config", "sine.ini", "--set", "task.lam_nc=0", "--set", "task.m=5",
            "--lams", "1e-3,1", "--folds", "2", "--out", "cv.csv"]
    assert main(args) == 0
    header, rows = _read(workdir / "cv.csv")
    assert header == ["lam", "gamma_x", "gamma_theta", "score"] and rows.shape == (2, 4)
    assert "best lam=" in capsys.readouterr().out


def test_unknown_benchmark(workdir):
    assert main(["bench", "nope", "--out", "b"]) == 2


def test_bench_sine_crossing_emits_both_settings(workdir):
    assert main(["bench", "sine-crossing", "--out", "bc"]) == 0
    summary = json.loads((workdir / "bc" / "summary.json").read_text())
    assert {"crossing_loss_nc10", "crossing_loss_nc0"} <= set(summary)
    header, C = _read(workdir / "bc" / "curves.csv")
    assert header == ["lam_nc", "x", "theta", "prediction"]
    assert set(C[:, 0]) == {0.0, 10.0}


@pytest.mark.slow
def test_bench_dlse_theta_schema(workdir):
    assert main(["bench", "dlse-theta", "--out", "b1"]) == 0
    header, T = _read(workdir / "b1" / "theta.csv")
    assert header == ["theta", "inlier_train", "inlier_test", "target"]
    assert len(np.unique(T[:, 0])) == T.shape[0]
    assert np.all((T[:, 1:3] >= 0) & (T[:, 1:3] <= 1))


def test_msweep_grid():
    assert E.MSWEEP_MS == (5, 10, 20, 34, 50, 100)


def test_log_level_env(workdir):
    env = dict(os.environ, ITL_LOG_LEVEL="INFO")
    out = subprocess.run([sys.executable, "-m", "itl", "train", "--config", "sine.ini"],
                         env=env, capture_output=True, text=True, cwd=workdir)
    assert out.returncode == 0
    assert "INFO" in out.stderr
