"""Command-line entry point.

Subcommands: ``synth``, ``train``, ``predict``, ``eval``, ``bench`` and
``cv-search``. Runs are described by an INI file (see ``CONFIG_SCHEMA``)
whose values can be overridden with ``--set section.key=value``.
Exit codes: 0 ok, 1 runtime failure, 2 config error. Log verbosity comes
from the ``ITL_LOG_LEVEL`` environment variable.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import data as D
from . import experiments
from . import kernels as K
from . import model as M
from . import tasks as T
from .sampling import SAMPLERS
from .solver import SolverConfig

log = logging.getLogger("itl")

LOG_ENV = "ITL_LOG_LEVEL"

# section -> key -> (type, default)
CONFIG_SCHEMA = {
    "task": {
        "family": (str, "qr"),
        "lam": (float, 1e-3),
        "lam_nc": (float, 0.0),
        "lam_b": (float, 0.0),
        "kappa": (float, 1e-4),
        "sampler": (str, "sobol"),
        "m": (int, 20),
        "domain": (str, ""),
        "use_bias": (bool, True),
        "precondition": (bool, True),
    },
    "kernels": {
        "x_family": (str, "gaussian"),
        "gamma_x": (float, 1.0),
        "gamma_theta": (float, 10.0),
        "gamma_b": (float, 10.0),
    },
    "data": {
        "source": (str, "sine"),
        "path": (str, ""),
        "target_column": (str, ""),
        "has_header": (bool, True),
        "n": (int, 1000),
        "noise": (float, 0.4),
        "standardize": (bool, True),
    },
    "solver": {
        "max_iters": (int, 500),
        "memory": (int, 10),
        "grad_tol": (float, 1e-6),
        "f_tol": (float, 1e-10),
    },
    "run": {"seed": (int, 0)},
    "output": {"model": (str, "model.json"), "report": (str, "report.json")},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    task: T.TaskSpec
    source: str
    path: str = ""
    target_column: Optional[str] = None
    has_header: bool = True
    n: int = 1000
    noise: float = 0.4
    standardize: bool = True
    solver: SolverConfig = SolverConfig()
    seed: int = 0
    model_path: str = "model.json"
    report_path: str = "report.json"
    raw: dict = field(default_factory=dict, compare=False)


def _parse_bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _convert(section: str, key: str, text: str):
    kind = CONFIG_SCHEMA[section][key][0]
    try:
        return _parse_bool(text) if kind is bool else kind(text.strip())
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from None


def read_config(path: Optional[str], overrides=()) -> dict:
    """Merge defaults, an INI file and ``section.key=value`` overrides."""
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in CONFIG_SCHEMA.items()}
    entries = []
    if path:
        cp = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for s in cp.sections():
            entries += [(s, k, v) for k, v in cp.items(s)]
    for ov in overrides:
        lhs, sep, v = ov.partition("=")
        s, dot, k = lhs.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {ov!r} must look like section.key=value")
        entries.append((s, k, v))
    for s, k, v in entries:
        if s not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section {s!r}")
        if k not in CONFIG_SCHEMA[s]:
            raise ConfigError(f"unknown config key {s}.{k}")
        values[s][k] = _convert(s, k, v)
    return values


def _floats(text: str, field_name: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{field_name}: expected comma-separated numbers, got {text!r}") from None


def build_run_config(values: dict) -> RunConfig:
    """Validate merged config values before any computation."""
    t, k, d, s = values["task"], values["kernels"], values["data"], values["solver"]
    if t["sampler"] not in SAMPLERS:
        raise ConfigError(f"task.sampler: unknown sampler {t['sampler']!r}; expected one of {list(SAMPLERS)}")
    if t["family"] not in T.FAMILIES:
        raise ConfigError(f"task.family: unknown family {t['family']!r}; expected one of {list(T.FAMILIES)}")
    if d["source"] != "csv" and d["source"] not in D.GENERATORS:
        raise ConfigError(f"data.source: expected 'csv' or one of {sorted(D.GENERATORS)}")
    if d["source"] == "csv" and not d["path"]:
        raise ConfigError("data.path: required when data.source = csv")
    domain = None
    if t["domain"]:
        domain = _floats(t["domain"], "task.domain")
        if len(domain) != 2:
            raise ConfigError("task.domain: expected two comma-separated endpoints")
    try:
        kx = K.KernelSpec(K.KernelFamily(k["x_family"]), k["gamma_x"])
    except ValueError as exc:
        raise ConfigError(f"kernels.x_family/gamma_x: {exc}") from None
    try:
        task = T.TaskSpec(
            t["family"], lam=t["lam"], lam_nc=t["lam_nc"], lam_b=t["lam_b"], kappa=t["kappa"],
            sampler=t["sampler"], m=t["m"], domain=domain, kx=kx,
            ktheta=K.gaussian(k["gamma_theta"]), kb=K.gaussian(k["gamma_b"]),
            use_bias=t["use_bias"], precondition=t["precondition"],
        )
        solver = SolverConfig(max_iters=s["max_iters"], memory=s["memory"],
                              grad_tol=s["grad_tol"], f_tol=s["f_tol"])
    except ValueError as exc:
        raise ConfigError(f"task: {exc}") from None
    if t["m"] < 1:
        raise ConfigError("task.m: must be >= 1")
    if d["n"] < 2:
        raise ConfigError("data.n: must be >= 2")
    return RunConfig(
        task, d["source"], d["path"], d["target_column"] or None, d["has_header"], d["n"], d["noise"],
        d["standardize"], solver, values["run"]["seed"], values["output"]["model"],
        values["output"]["report"], raw=values,
    )


def load_dataset(rc: RunConfig) -> D.Dataset:
    fam = rc.task.family
    if rc.source == "csv":
        target = None if fam == "dlse" else rc.target_column
        if fam != "dlse" and target is None:
            raise ConfigError("data.target_column: required for supervised tasks")
        return D.load_csv(rc.path, target, rc.has_header, fam, rc.standardize)
    if rc.source == "two-moons":
        ds = D.gen_two_moons(rc.n, rc.noise, rc.seed, rc.standardize)
    else:
        ds = D.GENERATORS[rc.source](rc.n, rc.seed, rc.standardize)
    if fam == "dlse":
        return D.Dataset(ds.X, None, ds.standardizer, ds.feature_names)
    if ds.y is None:
        raise ConfigError(f"data.source: {rc.source} has no targets for task {fam}")
    return ds


# ------------------------------------------------------------------ outputs

def _fmt(v: float) -> str:
    return repr(float(v))


def write_matrix_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _parse_thetas(text: str, model: M.ItlModel) -> np.ndarray:
    th = np.asarray(_floats(text, "--thetas"))
    if th.size == 0:
        raise ConfigError("--thetas: empty list")
    lo, hi = model.domain
    bad = th[(th < lo) | (th > hi)]
    if bad.size:
        raise ConfigError(f"--thetas: {bad.tolist()} outside the model domain [{lo}, {hi}]")
    return th


# ----------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    if args.generator not in D.GENERATORS:
        raise ConfigError(f"--generator: expected one of {sorted(D.GENERATORS)}")
    if args.generator == "two-moons":
        ds = D.gen_two_moons(args.n, args.noise, args.seed, standardize=False)
    else:
        ds = D.GENERATORS[args.generator](args.n, args.seed, standardize=False)
    header = [f"x{j}" for j in range(ds.d)]
    rows = ds.X
    if ds.y is not None:
        header.append("y")
        rows = np.column_stack([ds.X, ds.y])
    write_matrix_csv(args.out, header, rows)
    return 0


def cmd_train(args) -> int:
    rc = build_run_config(read_config(args.config, args.set))
    ds = load_dataset(rc)
    t0 = time.perf_counter()
    model, rep = T.fit(rc.task, ds, rc.solver, rc.seed)
    wall = time.perf_counter() - t0
    M.save(model, rc.model_path)
    report = rep.to_dict()
    report.update(wall_time_s=wall, n=ds.n, m=model.m, family=rc.task.family, config=rc.raw)
    write_json(rc.report_path, report)
    log.info("wrote %s and %s (%s)", rc.model_path, rc.report_path, rep.termination.value)
    return 0


def _read_inputs(path, has_header: bool, d: int):
    header, X = D.read_csv_matrix(path, has_header)
    if X.shape[0] == 0:
        return np.empty((0, d))
    if X.shape[1] != d:
        raise D.DataError(f"{path}: model expects {d} features, input has {X.shape[1]}")
    return X


def cmd_predict(args) -> int:
    model = M.load(args.model)
    th = _parse_thetas(args.thetas, model)
    X = _read_inputs(args.input, not args.no_header, model.d)
    P = M.predict_matrix(model, X, th) if X.shape[0] else np.empty((0, th.size))
    write_matrix_csv(args.out, [f"theta={_fmt(v)}" for v in th], P)
    return 0


def cmd_eval(args) -> int:
    model = M.load(args.model)
    th = _parse_thetas(args.thetas, model) if args.thetas else None
    target = None if model.task == "dlse" else args.target_column
    if model.task != "dlse" and target is None:
        raise ConfigError("--target-column: required for supervised models")
    ds = D.load_csv(args.input, target, not args.no_header, model.task, standardize=False)
    if ds.d != model.d:
        raise D.DataError(f"{args.input}: model expects {model.d} features, input has {ds.d}")
    if model.task == "qr":
        rep = T.eval_qr(model, ds, T.QR_GRID if th is None else th)
    elif model.task == "csc":
        rep = T.eval_csc(model, ds, T.CSC_GRID if th is None else th)
    else:
        grid = np.linspace(*model.domain, 11) if th is None else th
        rep = T.eval_dlse(model, ds, grid)
    out = rep.to_dict()
    out.update(task=model.task, n=ds.n)
    write_json(args.out, out)
    return 0


def cmd_bench(args) -> int:
    if args.name not in experiments.BENCHMARKS:
        raise ConfigError(f"unknown benchmark {args.name!r}; expected one of {sorted(experiments.BENCHMARKS)}")
    summary = experiments.run_benchmark(args.name, args.out, args.seed)
    log.info("%s: %s", args.name, summary)
    return 0


def cmd_cv_search(args) -> int:
    rc = build_run_config(read_config(args.config, args.set))
    ds = load_dataset(rc)
    lams = _floats(args.lams, "--lams") or [rc.task.lam]
    gx = _floats(args.gammas_x, "--gammas-x") or [rc.task.kx.gamma]
    gt = _floats(args.gammas_theta, "--gammas-theta") or [rc.task.ktheta.gamma]
    best, rows = T.cv_search(rc.task, ds, lams, gx, gt, args.folds, rc.solver, rc.seed)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=["lam", "gamma_x", "gamma_theta", "score"])
        w.writeheader()
        w.writerows({k: _fmt(v) for k, v in r.items()} for r in rows)
    print(f"best lam={best.lam!r} gamma_x={best.kx.gamma!r} gamma_theta={best.ktheta.gamma!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="itl", description="Learn one model over a continuum of tasks.")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="INI run configuration")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")

    sp = sub.add_parser("synth", help="write a synthetic dataset to CSV")
    sp.add_argument("generator", help=f"one of {sorted(D.GENERATORS)}")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--noise", type=float, default=0.4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("train", help="fit a model and write model + report files")
    with_config(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="predict at a list of theta values")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True, help="CSV of raw features")
    sp.add_argument("--thetas", required=True, help="comma-separated theta values")
    sp.add_argument("--no-header", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("eval", help="evaluate a model on a labelled CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--target-column", help="header name or 0-based index")
    sp.add_argument("--thetas", default="", help="comma-separated evaluation grid")
    sp.add_argument("--no-header", action="store_true")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("bench", help="run a benchmark recipe and write CSV tables")
    sp.add_argument("name", help=f"one of {sorted(experiments.BENCHMARKS)}")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("cv-search", help="grid search with k-fold cross-validation")
    with_config(sp)
    sp.add_argument("--lams", default="")
    sp.add_argument("--gammas-x", default="")
    sp.add_argument("--gammas-theta", default="")
    sp.add_argument("--folds", type=int, default=5)
    sp.add_argument("--out", required=True, help="CSV of scores per grid point")
    sp.set_defaults(func=cmd_cv_search)
    return p


def _setup_logging() -> None:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, FloatingPointError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
