"""Finite kernel expansion of a function-valued model h(x)(theta).

    h(x)(theta) = sum_ij kx(x, x_i) [alpha_ij ktheta(theta, theta_j)
                                     + beta_ij d2 ktheta(theta, theta_j)]
                  + sum_j bias_j kb(theta, theta_j)

with the level-set threshold ``t(theta) = sum_j t_j kb(theta, theta_j)``.
Anchors ``x_i`` are stored standardized; predictions take raw inputs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels as K
from .data import Standardizer
from .kernels import KernelFamily, KernelSpec

FORMAT_VERSION = 1
TASKS = ("qr", "csc", "dlse")


class ModelFormatError(ValueError):
    pass


def _vec(a) -> np.ndarray:
    return np.asarray(a if a is not None else [], dtype=float).reshape(-1)


@dataclass(frozen=True, eq=False)
class ItlModel:
    task: str
    x_anchors: np.ndarray
    theta_anchors: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    kx: KernelSpec
    ktheta: KernelSpec
    kb: KernelSpec
    standardizer: Standardizer
    domain: tuple
    bias_coef: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t_coef: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        xa = np.asarray(self.x_anchors, float)
        if xa.ndim == 1:
            xa = xa[:, None]
        ta = _vec(self.theta_anchors)
        n, m = xa.shape[0], ta.size
        alpha = np.asarray(self.alpha, float).reshape(n, m)
        beta = np.zeros((n, m)) if self.beta is None else np.asarray(self.beta, float).reshape(n, m)
        for name, v in (("bias_coef", _vec(self.bias_coef)), ("t_coef", _vec(self.t_coef))):
            if v.size not in (0, m):
                raise ValueError(f"{name} must have 0 or {m} entries, got {v.size}")
            object.__setattr__(self, name, v)
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.standardizer.dim != xa.shape[1]:
            raise ValueError("standardizer dimension does not match anchors")
        object.__setattr__(self, "x_anchors", xa)
        object.__setattr__(self, "theta_anchors", ta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))

    @property
    def n(self) -> int:
        return self.x_anchors.shape[0]

    @property
    def m(self) -> int:
        return self.theta_anchors.size

    @property
    def d(self) -> int:
        return self.x_anchors.shape[1]

    @property
    def has_bias(self) -> bool:
        return self.bias_coef.size > 0

    def scaled(self, c: float) -> "ItlModel":
        return replace(self, alpha=c * self.alpha, beta=c * self.beta,
                       bias_coef=c * self.bias_coef, t_coef=c * self.t_coef)


def _inputs(model: ItlModel, X) -> np.ndarray:
    X = np.asarray(X, float)
    if X.ndim <= 1:
        X = X.reshape(-1, model.d)
    if X.shape[1] != model.d:
        raise ValueError(f"expected {model.d} features, got {X.shape[1]}")
    return model.standardizer.transform(X)


def predict_matrix(model: ItlModel, X, thetas) -> np.ndarray:
    """Predictions for every row of ``X`` (raw units) at every theta: ``(len(X), len(thetas))``."""
    thetas = _vec(thetas)
    kx = K.gram(model.kx, _inputs(model, X), model.x_anchors)
    coef = model.alpha @ K.gram(model.ktheta, thetas, model.theta_anchors).T
    if model.beta.any():
        coef = coef + model.beta @ K.gram_d2(model.ktheta, thetas, model.theta_anchors).T
    out = kx @ coef
    if model.has_bias:
        out = out + bias(model, thetas)[None, :]
    return out


def predict(model: ItlModel, x, theta: float) -> float:
    return float(predict_matrix(model, np.reshape(x, (1, -1)), [theta])[0, 0])


def predict_dtheta_matrix(model: ItlModel, X, thetas) -> np.ndarray:
    """Derivative in theta of :func:`predict_matrix`."""
    thetas = _vec(thetas)
    if model.ktheta.family is KernelFamily.CONSTANT and model.beta.any():
        raise ValueError("constant theta-kernel cannot carry derivative coefficients")
    kx = K.gram(model.kx, _inputs(model, X), model.x_anchors)
    coef = model.alpha @ K.gram_d1(model.ktheta, thetas, model.theta_anchors).T
    if model.beta.any():
        coef = coef + model.beta @ K.gram_d1d2(model.ktheta, thetas, model.theta_anchors).T
    out = kx @ coef
    if model.has_bias:
        out = out + (K.gram_d1(model.kb, thetas, model.theta_anchors) @ model.bias_coef)[None, :]
    return out


def predict_dtheta(model: ItlModel, x, theta: float) -> float:
    return float(predict_dtheta_matrix(model, np.reshape(x, (1, -1)), [theta])[0, 0])


def bias(model: ItlModel, thetas) -> np.ndarray:
    thetas = _vec(thetas)
    if not model.has_bias:
        return np.zeros(thetas.size)
    return K.gram(model.kb, thetas, model.theta_anchors) @ model.bias_coef


def threshold(model: ItlModel, thetas) -> np.ndarray:
    if model.t_coef.size == 0:
        raise ValueError("model has no threshold function")
    return K.gram(model.kb, _vec(thetas), model.theta_anchors) @ model.t_coef


def rkhs_norm_sq(model: ItlModel) -> float:
    """Squared vv-RKHS norm of the kernel part (bias excluded)."""
    kxx = K.gram(model.kx, model.x_anchors, model.x_anchors)
    ta = model.theta_anchors
    A, B = model.alpha, model.beta
    val = np.sum(A * (kxx @ A @ K.gram(model.ktheta, ta, ta)))
    if B.any():
        d2 = K.gram_d2(model.ktheta, ta, ta)
        d12 = K.gram_d1d2(model.ktheta, ta, ta)
        # the two alpha-beta cross terms coincide for a symmetric kernel
        val += 2 * np.sum(A * (kxx @ B @ d2.T)) + np.sum(B * (kxx @ B @ d12))
    return float(val)


def slice_norm_sq(model: ItlModel, theta: float) -> float:
    """Squared input-RKHS norm of ``x -> h(x)(theta)``."""
    if model.beta.any():
        raise ValueError("slice norm is defined for models without derivative terms")
    c = model.alpha @ K.gram(model.ktheta, model.theta_anchors, [theta])[:, 0]
    return float(c @ K.gram(model.kx, model.x_anchors, model.x_anchors) @ c)


# ------------------------------------------------------------ serialization

def to_document(model: ItlModel) -> dict:
    return {
        "version": FORMAT_VERSION,
        "task": model.task,
        "domain": list(model.domain),
        "kernels": {"kx": model.kx.to_dict(), "ktheta": model.ktheta.to_dict(), "kb": model.kb.to_dict()},
        "x_anchors": model.x_anchors.tolist(),
        "theta_anchors": model.theta_anchors.tolist(),
        "alpha": model.alpha.tolist(),
        "beta": model.beta.tolist(),
        "bias_coef": model.bias_coef.tolist() if model.has_bias else None,
        "t_coef": model.t_coef.tolist() if model.t_coef.size else None,
        "standardizer": model.standardizer.to_dict(),
    }


def _array(doc: dict, key: str, ndim: int, optional: bool = False) -> np.ndarray:
    if key not in doc:
        raise ModelFormatError(f"missing field {key!r}")
    v = doc[key]
    if v is None and optional:
        return np.zeros(0)
    try:
        a = np.array(v, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"field {key!r} is not numeric: {exc}") from None
    if a.ndim != ndim and not (a.size == 0 and ndim == 2):
        raise ModelFormatError(f"field {key!r} must be {ndim}-dimensional")
    if not np.isfinite(a).all():
        raise ModelFormatError(f"field {key!r} has non-finite entries")
    return a


def from_document(doc: dict) -> ItlModel:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a mapping")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
    try:
        kern = {k: KernelSpec.from_dict(doc["kernels"][k]) for k in ("kx", "ktheta", "kb")}
        st = Standardizer(_array(doc["standardizer"], "mean", 1), _array(doc["standardizer"], "scale", 1))
        domain = tuple(float(v) for v in doc["domain"])
        task = doc["task"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed header fields: {exc!r}") from None
    if len(domain) != 2:
        raise ModelFormatError("domain must have two endpoints")
    xa = _array(doc, "x_anchors", 2)
    ta = _array(doc, "theta_anchors", 1)
    n, m = xa.shape[0], ta.size
    alpha, beta = _array(doc, "alpha", 2), _array(doc, "beta", 2)
    for key, a in (("alpha", alpha), ("beta", beta)):
        if a.shape != (n, m):
            raise ModelFormatError(f"field {key!r} has shape {a.shape}, expected {(n, m)}")
    try:
        return ItlModel(task, xa, ta, alpha, beta, kern["kx"], kern["ktheta"], kern["kb"], st, domain,
                        bias_coef=_array(doc, "bias_coef", 1, optional=True),
                        t_coef=_array(doc, "t_coef", 1, optional=True))
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None


def dumps(model: ItlModel) -> str:
    # repr-based float formatting round-trips every double exactly
    return json.dumps(to_document(model), indent=1) + "\n"


def loads(text: str) -> ItlModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not a valid model document: {exc}") from None
    return from_document(doc)


def save(model: ItlModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def load(path) -> ItlModel:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
