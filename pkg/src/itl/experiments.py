"""Benchmark recipes: generate -> fit -> evaluate -> tabular output.

Each recipe returns a dict of named tables (lists of row dicts) plus a
summary dict, and ``write_tables`` dumps them as CSV for external plotting.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import replace

import numpy as np

from . import data as D
from . import kernels as K
from . import tasks as T
from .model import predict_matrix
from .sampling import sample_gauss_legendre
from .solver import SolverConfig

CROSSING_THETAS = np.linspace(0.01, 0.99, 100)
MSWEEP_MS = (5, 10, 20, 34, 50, 100)
MSWEEP_THETAS = (0.05, 0.25, 0.5, 0.75, 0.95)
DLSE_CHECK_THETAS = (0.2, 0.4, 0.6, 0.8)


def sine_task(**kw) -> T.TaskSpec:
    base = dict(family="qr", lam=1e-4, lam_nc=1.0, lam_b=1e-4, kappa=1e-2, m=32,
                kx=K.gaussian(2.0), ktheta=K.gaussian(10.0), kb=K.gaussian(10.0))
    base.update(kw)
    return T.TaskSpec(**base)


def sine_data(n_train: int, n_test: int, seed: int):
    train = D.gen_sine(n_train, seed)
    test = D.gen_sine(n_test, seed + 1000)
    return train, replace(test, standardizer=train.standardizer)


def sine_crossing(seed: int = 0, solver: SolverConfig = SolverConfig(max_iters=5000)):
    """Quantile curves with strong (10) and no (0) non-crossing penalty, n=40, m=20."""
    train = D.gen_sine(40, seed)
    xs = np.linspace(0.0, D.SINE_X_MAX, 300)[:, None]
    curves, summary = [], {}
    for lam_nc in (10.0, 0.0):
        task = sine_task(lam=1e-2, lam_b=1e-2, lam_nc=lam_nc, m=20)
        model, rep = T.fit(task, train, solver, seed)
        P = predict_matrix(model, xs, CROSSING_THETAS)
        summary[f"crossing_loss_nc{lam_nc:g}"] = T.crossing_loss(P)
        summary[f"termination_nc{lam_nc:g}"] = rep.termination.value
        for i, x in enumerate(xs[:, 0]):
            for j, th in enumerate(CROSSING_THETAS):
                curves.append({"lam_nc": lam_nc, "x": x, "theta": th, "prediction": P[i, j]})
    train_rows = [{"x": x, "y": y} for x, y in zip(train.X[:, 0], train.y)]
    return {"curves": curves, "train": train_rows}, summary


def sine_msweep(seed: int = 0, ms=MSWEEP_MS, solver: SolverConfig = SolverConfig(max_iters=2000)):
    """Test pinball loss as a function of the number of anchors, n=1000."""
    train, test = sine_data(1000, 2000, seed)
    rows = []
    for m in ms:
        model, rep = T.fit(sine_task(m=m), train, solver, seed)
        ev = T.eval_qr(model, test, MSWEEP_THETAS)
        rows.append({"m": m, "pinball_loss": ev.pinball_loss, "crossing_loss": ev.crossing_loss,
                     "iterations": rep.iterations, "termination": rep.termination.value})
    return {"msweep": rows}, {r["m"]: r["pinball_loss"] for r in rows}


def dlse_task(m: int = 100, domain=(0.05, 0.95)) -> T.TaskSpec:
    gt = T.quantile_distance_gamma(sample_gauss_legendre(m, domain).anchors, 0.2)
    return T.TaskSpec("dlse", lam=1e-3, kappa=1e-4, sampler="gauss-legendre", m=m, domain=domain,
                      kx=K.gaussian(0.5), ktheta=K.gaussian(gt), kb=K.gaussian(gt), use_bias=False)


def dlse_theta(seed: int = 0, solver: SolverConfig = SolverConfig(max_iters=5000)):
    """Inlier fraction versus theta on a 2-D Gaussian blob, n=500."""
    train = D.gen_blobs(500, seed)
    test = replace(D.gen_blobs(500, seed + 1000), standardizer=train.standardizer)
    task = dlse_task()
    model, rep = T.fit(task, train, solver, seed)
    grid = np.round(np.arange(0.05, 0.951, 0.05), 10)
    tr = T.eval_dlse(model, train, grid).inlier_fractions
    te = T.eval_dlse(model, test, grid).inlier_fractions
    rows = [{"theta": th, "inlier_train": a, "inlier_test": b, "target": 1 - th}
            for (th, a), (_, b) in zip(tr, te)]
    check = dict(T.eval_dlse(model, test, DLSE_CHECK_THETAS).inlier_fractions)
    return {"theta": rows}, {"termination": rep.termination.value, "inlier_test": check}


def csc_grid(seed: int = 0, solver: SolverConfig = SolverConfig(max_iters=3000)):
    """Sensitivity/specificity across theta on Two-Moons, continuum vs independent."""
    ds = D.gen_two_moons(1000, 0.4, seed)
    train, test = D.split(ds, 0.5, seed)
    gx = T.median_gamma(train.Z)
    task = T.TaskSpec("csc", lam=1e-3, lam_b=1e-3, kappa=1e-2, m=20,
                      kx=K.gaussian(gx), ktheta=K.gaussian(5.0), kb=K.gaussian(5.0))
    model, rep = T.fit(task, train, solver, seed)
    grid = np.round(np.linspace(-0.9, 0.9, 19), 10)
    ev = T.eval_csc(model, test, grid)
    rows = [{"theta": th, "sensitivity": se, "specificity": sp}
            for th, se, sp in zip(ev.theta_grid, ev.sensitivity, ev.specificity)]
    ind = T.fit_independent(task, train, T.CSC_GRID, solver)
    S = T.sign_pm1(T.predictions_on_grid(ind, test.X, T.CSC_GRID))
    pos, neg = test.y == 1, test.y == -1
    ind_rows = [{"theta": th, "sensitivity": float(np.mean(S[pos, j] == 1)),
                 "specificity": float(np.mean(S[neg, j] == -1))} for j, th in enumerate(T.CSC_GRID)]
    main = T.eval_csc(model, test, T.CSC_GRID)
    summary = {"termination": rep.termination.value, "gamma_x": gx,
               "sensitivity": dict(zip(T.CSC_GRID, main.sensitivity)),
               "specificity": dict(zip(T.CSC_GRID, main.specificity))}
    return {"continuum": rows, "independent": ind_rows}, summary


BENCHMARKS = {
    "sine-crossing": sine_crossing,
    "sine-msweep": sine_msweep,
    "dlse-theta": dlse_theta,
    "csc-grid": csc_grid,
}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_tables(outdir, tables: dict, summary: dict) -> list:
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for name, rows in tables.items():
        path = os.path.join(outdir, f"{name}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if rows:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                w.writeheader()
                w.writerows({k: _fmt(v) for k, v in r.items()} for r in rows)
        paths.append(path)
    path = os.path.join(outdir, "summary.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True, default=str)
        fh.write("\n")
    paths.append(path)
    return paths


def run_benchmark(name: str, outdir, seed: int = 0):
    if name not in BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; expected one of {sorted(BENCHMARKS)}")
    tables, summary = BENCHMARKS[name](seed=seed)
    write_tables(outdir, tables, summary)
    return summary
