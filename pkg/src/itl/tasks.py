"""Task-level trainers and evaluation for quantile regression (qr),
cost-sensitive classification (csc) and density level-set estimation (dlse)."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from . import kernels as K
from . import losses as L
from .data import Dataset, Standardizer
from .model import ItlModel, predict_matrix, threshold
from .objective import ObjectiveState, WhitenedObjective
from .sampling import SampledContinuum, sample
from .solver import SolverConfig, minimize

log = logging.getLogger(__name__)

FAMILIES = ("qr", "csc", "dlse")
DEFAULT_DOMAINS = {"qr": (0.0, 1.0), "csc": (-1.0, 1.0), "dlse": (0.05, 1.0)}
QR_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
CSC_GRID = (-0.9, 0.0, 0.9)


@dataclass(frozen=True)
class TaskSpec:
    family: str = "qr"
    lam: float = 1e-3
    lam_nc: float = 0.0
    lam_b: float = 0.0
    kappa: float = L.DEFAULT_KAPPA
    sampler: str = "sobol"
    m: int = 20
    domain: Optional[tuple] = None
    kx: K.KernelSpec = K.gaussian(1.0)
    ktheta: K.KernelSpec = K.gaussian(10.0)
    kb: K.KernelSpec = K.gaussian(10.0)
    use_bias: bool = True
    precondition: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown task family {self.family!r}")
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if self.lam_nc < 0 or self.lam_b < 0 or self.kappa < 0:
            raise ValueError("lam_nc, lam_b and kappa must be >= 0")
        if self.lam_nc > 0 and self.family != "qr":
            raise ValueError("the non-crossing penalty applies to quantile regression only")
        dom = tuple(float(v) for v in (self.domain or DEFAULT_DOMAINS[self.family]))
        lo, hi = dom
        ok = {"qr": 0 <= lo < hi <= 1, "csc": -1 <= lo < hi <= 1, "dlse": 0 < lo < hi <= 1}
        if not ok[self.family]:
            raise ValueError(f"domain {dom} is not valid for {self.family}")
        object.__setattr__(self, "domain", dom)

    def continuum(self, seed: int = 0) -> SampledContinuum:
        return sample(self.sampler, self.m, self.domain, seed)


@dataclass
class EvalReport:
    theta_grid: list
    pinball_loss: Optional[float] = None
    crossing_loss: Optional[float] = None
    sensitivity: Optional[list] = None
    specificity: Optional[list] = None
    inlier_fractions: Optional[list] = None
    per_theta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None and v != {}}


# ------------------------------------------------------------------ fitting

def _objective(task: TaskSpec, train: Dataset, continuum: SampledContinuum, lam_nc=None):
    if train.n == 0:
        raise ValueError("empty training set")
    if task.family != "dlse" and train.y is None:
        raise ValueError(f"{task.family} needs targets")
    return ObjectiveState(
        task.family, train.Z, train.y, continuum, task.kx, task.ktheta, task.kb,
        lam=task.lam, lam_nc=task.lam_nc if lam_nc is None else lam_nc, lam_b=task.lam_b,
        kappa=task.kappa, use_bias=task.use_bias,
    )


def _solve(task: TaskSpec, state: ObjectiveState, solver: SolverConfig):
    if task.precondition:
        wobj = WhitenedObjective(state)
        v, report = minimize(wobj, state.zeros(), solver)
        return wobj.to_coef(v), report
    return minimize(state, state.zeros(), solver)


def _to_model(task: TaskSpec, state: ObjectiveState, z, standardizer: Standardizer, X_anchor):
    alpha, beta, bias_c, t = state.layout.split(z)
    return ItlModel(
        task.family, X_anchor, state.theta, alpha.copy(),
        None if beta is None else beta.copy(), task.kx, task.ktheta, task.kb,
        standardizer, task.domain,
        bias_coef=np.zeros(0) if bias_c is None else bias_c.copy(),
        t_coef=np.zeros(0) if t is None else t.copy(),
    )


def fit_continuum(task: TaskSpec, train: Dataset, continuum: SampledContinuum,
                  solver: SolverConfig = SolverConfig(), lam_nc=None):
    state = _objective(task, train, continuum, lam_nc)
    z, report = _solve(task, state, solver)
    # report the objective in original coefficients
    report.final_value = state.value(z)
    model = _to_model(task, state, z, train.standardizer, state.Z)
    log.info("fit %s n=%d m=%d: %s in %d iterations", task.family, train.n, continuum.m,
             report.termination.value, report.iterations)
    return model, report


def fit(task: TaskSpec, train: Dataset, solver: SolverConfig = SolverConfig(), seed: int = 0):
    """Fit one model over the whole hyperparameter continuum."""
    return fit_continuum(task, train, task.continuum(seed), solver)


def fit_independent(task: TaskSpec, train: Dataset, thetas: Sequence[float],
                    solver: SolverConfig = SolverConfig()):
    """One single-anchor model per theta, without non-crossing coupling."""
    models = []
    for th in thetas:
        c = SampledContinuum(np.array([float(th)]), np.array([1.0]), task.domain)
        models.append(fit_continuum(task, train, c, solver, lam_nc=0.0)[0])
    return models


# --------------------------------------------------------------- evaluation

def _grid(theta_grid) -> np.ndarray:
    g = np.asarray(theta_grid, float).reshape(-1)
    if g.size == 0:
        raise ValueError("empty theta grid")
    return g


def predictions_on_grid(model_or_models, X, theta_grid) -> np.ndarray:
    """``(n, len(grid))`` predictions; a list of models is matched to the grid one-to-one."""
    grid = _grid(theta_grid)
    if isinstance(model_or_models, ItlModel):
        return predict_matrix(model_or_models, X, grid)
    models = list(model_or_models)
    if len(models) != grid.size:
        raise ValueError("need one model per grid value")
    return np.column_stack([predict_matrix(mdl, X, [th])[:, 0] for mdl, th in zip(models, grid)])


def crossing_loss(P: np.ndarray) -> float:
    """Mean over rows of the summed positive decrements along ascending theta."""
    if P.shape[1] < 2:
        return 0.0
    return float(np.mean(np.sum(np.maximum(P[:, :-1] - P[:, 1:], 0.0), axis=1)))


def qr_metrics(P: np.ndarray, y, theta_grid) -> EvalReport:
    """Quantile metrics for predictions ``P[i, k]`` at ``theta_grid[k]``."""
    grid = _grid(theta_grid)
    if np.any(np.diff(grid) < 0):
        raise ValueError("theta grid must be ascending")
    y = np.asarray(y, float)
    pin = L.pinball(grid[None, :], y[:, None], P)
    cover = np.mean(y[:, None] <= P, axis=0)
    return EvalReport(
        grid.tolist(), pinball_loss=float(pin.mean()), crossing_loss=crossing_loss(P),
        per_theta={"pinball": pin.mean(axis=0).tolist(), "coverage": cover.tolist()},
    )


def eval_qr(model_or_models, test: Dataset, theta_grid=QR_GRID) -> EvalReport:
    grid = _grid(theta_grid)
    return qr_metrics(predictions_on_grid(model_or_models, test.X, grid), test.y, grid)


def sign_pm1(v):
    """Sign with ties at 0 resolved to +1."""
    return np.where(np.asarray(v) >= 0, 1.0, -1.0)


def eval_csc(model, test: Dataset, theta_grid=CSC_GRID) -> EvalReport:
    grid = _grid(theta_grid)
    pos, neg = test.y == 1, test.y == -1
    if not pos.any() or not neg.any():
        raise ValueError("both classes must be present to compute sensitivity and specificity")
    if not (pos | neg).all():
        raise ValueError("labels must be -1 or +1")
    S = sign_pm1(predictions_on_grid(model, test.X, grid))
    return EvalReport(
        grid.tolist(),
        sensitivity=np.mean(S[pos] == 1, axis=0).tolist(),
        specificity=np.mean(S[neg] == -1, axis=0).tolist(),
    )


def eval_dlse(model: ItlModel, test: Dataset, theta_grid) -> EvalReport:
    grid = _grid(theta_grid)
    t = threshold(model, grid)
    inl = np.mean(predict_matrix(model, test.X, grid) - t[None, :] >= 0, axis=0)
    return EvalReport(grid.tolist(), inlier_fractions=list(zip(grid.tolist(), inl.tolist())))


# ------------------------------------------------------------ bandwidths

def median_gamma(Z) -> float:
    """Gaussian gamma whose sigma is the median pairwise input distance."""
    return K.sigma_to_gamma(float(np.median(pdist(np.atleast_2d(Z)))))


def quantile_distance_gamma(anchors, q: float = 0.2) -> float:
    """Inverse square of the ``q``-quantile of pairwise anchor distances."""
    d = pdist(np.asarray(anchors, float).reshape(-1, 1))
    return 1.0 / float(np.quantile(d, q)) ** 2


# ------------------------------------------------------------ model selection

def _score(task: TaskSpec, model, valid: Dataset) -> float:
    if task.family == "qr":
        return eval_qr(model, valid, QR_GRID).pinball_loss
    if task.family == "csc":
        rep = eval_csc(model, valid, CSC_GRID)
        w = (np.asarray(CSC_GRID) + 1) / 2
        # cost-weighted error rate, averaged over the grid
        return float(np.mean(w * (1 - np.asarray(rep.sensitivity)) + (1 - w) * (1 - np.asarray(rep.specificity))))
    grid = np.linspace(task.domain[0], task.domain[1], 9)[1:-1]
    inl = np.array([f for _, f in eval_dlse(model, valid, grid).inlier_fractions])
    return float(np.mean(np.abs(inl - (1 - grid))))


def cv_search(task: TaskSpec, ds: Dataset, lams, gammas_x, gammas_theta, folds: int = 5,
              solver: SolverConfig = SolverConfig(), seed: int = 0):
    """Grid search with k-fold cross-validation.

    ``gammas_theta`` sets both the theta kernel and the bias/threshold
    kernel. Returns ``(best_task, rows)``; each row holds the parameters and
    the mean validation score (lower is better).
    """
    if folds < 2 or folds > ds.n:
        raise ValueError("need 2 <= folds <= n")
    parts = np.array_split(np.random.default_rng(seed).permutation(ds.n), folds)
    rows = []
    for lam, gx, gt in itertools.product(lams, gammas_x, gammas_theta):
        cand = replace(task, lam=float(lam), kx=replace(task.kx, gamma=float(gx)),
                       ktheta=replace(task.ktheta, gamma=float(gt)), kb=replace(task.kb, gamma=float(gt)))
        scores = []
        for k in range(folds):
            tr = ds.subset(np.concatenate([p for j, p in enumerate(parts) if j != k]))
            va = ds.subset(parts[k])
            model, _ = fit(cand, tr, solver, seed)
            scores.append(_score(cand, model, va))
        rows.append({"lam": float(lam), "gamma_x": float(gx), "gamma_theta": float(gt),
                     "score": float(np.mean(scores))})
        log.info("cv %s", rows[-1])
    best = min(rows, key=lambda r: r["score"])
    best_task = replace(task, lam=best["lam"], kx=replace(task.kx, gamma=best["gamma_x"]),
                        ktheta=replace(task.ktheta, gamma=best["gamma_theta"]),
                        kb=replace(task.kb, gamma=best["gamma_theta"]))
    return best_task, rows
