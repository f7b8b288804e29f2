"""Sampled empirical risk plus regularizers as a function of flat coefficients.

Coefficients are flattened as ``[alpha (row-major) | beta | bias | t]``; the
blocks after ``alpha`` are present only when the task uses them. With
``G = alpha ktheta + beta d2^T`` the anchor predictions are
``H = kx G + 1 (kb bias)^T`` and their theta-derivatives
``Hd = kx (alpha d1^T + beta d12) + 1 (d1b bias)^T``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as K
from . import losses as L
from .sampling import SampledContinuum


class NumericalError(FloatingPointError):
    pass


@dataclass(frozen=True)
class Layout:
    n: int
    m: int
    derivative: bool = False
    bias: bool = False
    threshold: bool = False

    @property
    def size(self) -> int:
        nm = self.n * self.m
        return nm * (1 + self.derivative) + self.m * (self.bias + self.threshold)

    def split(self, z: np.ndarray):
        """Views ``(alpha, beta, bias, t)``; missing blocks are ``None``."""
        z = np.asarray(z, float)
        if z.shape != (self.size,):
            raise ValueError(f"coefficient vector has shape {z.shape}, expected ({self.size},)")
        nm, pos = self.n * self.m, 0
        alpha = z[:nm].reshape(self.n, self.m)
        pos = nm
        beta = bias = t = None
        if self.derivative:
            beta = z[pos:pos + nm].reshape(self.n, self.m)
            pos += nm
        if self.bias:
            bias = z[pos:pos + self.m]
            pos += self.m
        if self.threshold:
            t = z[pos:pos + self.m]
        return alpha, beta, bias, t

    def join(self, alpha, beta=None, bias=None, t=None) -> np.ndarray:
        parts = [np.ravel(alpha)]
        if self.derivative:
            parts.append(np.ravel(beta))
        if self.bias:
            parts.append(np.ravel(bias))
        if self.threshold:
            parts.append(np.ravel(t))
        return np.concatenate(parts)


class ObjectiveState:
    """Precomputed Gram matrices and weights for one fit.

    ``task`` is one of ``'qr'``, ``'csc'``, ``'dlse'``. ``Z`` are standardized
    inputs; ``y`` is ignored for ``'dlse'``.
    """

    def __init__(self, task: str, Z, y, continuum: SampledContinuum, kx: K.KernelSpec,
                 ktheta: K.KernelSpec, kb: K.KernelSpec, lam: float, lam_nc: float = 0.0,
                 lam_b: float = 0.0, kappa: float = L.DEFAULT_KAPPA, use_bias: bool = False):
        if task not in ("qr", "csc", "dlse"):
            raise ValueError(f"unknown task {task!r}")
        self.task = task
        self.Z = np.atleast_2d(np.asarray(Z, float))
        self.n = self.Z.shape[0]
        if self.n == 0:
            raise ValueError("empty training set")
        self.y = None if task == "dlse" else np.asarray(y, float)
        if task == "csc":
            L._check_labels(self.y)
        self.theta = np.asarray(continuum.anchors, float)
        self.w = np.asarray(continuum.weights, float)
        self.m = self.theta.size
        self.kx, self.ktheta, self.kb = kx, ktheta, kb
        self.lam, self.lam_nc, self.lam_b, self.kappa = float(lam), float(lam_nc), float(lam_b), float(kappa)
        derivative = task == "qr" and self.lam_nc > 0
        self.layout = Layout(self.n, self.m, derivative=derivative,
                             bias=bool(use_bias) and task != "dlse", threshold=task == "dlse")

        th = self.theta
        self.KX = K.gram(kx, self.Z, self.Z)
        self.KT = K.gram(ktheta, th, th)
        if self.layout.bias or self.layout.threshold:
            self.KB = K.gram(kb, th, th)
        if derivative:
            self.D1 = K.gram_d1(ktheta, th, th)
            self.D2 = K.gram_d2(ktheta, th, th)
            self.D12 = K.gram_d1d2(ktheta, th, th)
            if self.layout.bias:
                self.D1B = K.gram_d1(kb, th, th)
        if task == "dlse":
            if np.any(th <= 0):
                raise ValueError("level-set anchors must be > 0")
            self.loss_spec = None
        else:
            fam = L.LossFamily.PINBALL if task == "qr" else L.LossFamily.CSC_HINGE
            self.loss_spec = L.LossSpec(fam, self.kappa)

    @property
    def size(self) -> int:
        return self.layout.size

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)

    # -- forward pieces -------------------------------------------------

    def _coef(self, alpha, beta):
        G = alpha @ self.KT
        if beta is not None:
            G = G + beta @ self.D2.T
        return G

    def _dcoef(self, alpha, beta):
        return alpha @ self.D1.T + beta @ self.D12

    def anchor_predictions(self, z) -> np.ndarray:
        """``H[i, j] = h(x_i)(theta_j)`` on the training anchors."""
        alpha, beta, bias, _ = self.layout.split(z)
        H = self.KX @ self._coef(alpha, beta)
        if bias is not None:
            H = H + (self.KB @ bias)[None, :]
        return H

    def anchor_derivatives(self, z) -> np.ndarray:
        alpha, beta, bias, _ = self.layout.split(z)
        if beta is None:
            Gd = alpha @ K.gram_d1(self.ktheta, self.theta, self.theta).T
        else:
            Gd = self._dcoef(alpha, beta)
        Hd = self.KX @ Gd
        if bias is not None:
            Hd = Hd + (K.gram_d1(self.kb, self.theta, self.theta) @ bias)[None, :]
        return Hd

    def thresholds(self, z) -> np.ndarray:
        t = self.layout.split(z)[3]
        return self.KB @ t

    # -- value and gradient ---------------------------------------------

    def risk(self, z) -> float:
        return self._evaluate(z, grad=False)[1]

    def penalty(self, z) -> float:
        return self._evaluate(z, grad=False)[2]

    def value(self, z) -> float:
        return self._evaluate(z, grad=False)[0]

    def value_and_grad(self, z):
        f, _, _, g = self._evaluate(z, grad=True)
        return f, g

    __call__ = value_and_grad

    def _evaluate(self, z, grad: bool):
        if self.task == "dlse":
            return self._evaluate_dlse(z, grad)
        return self._evaluate_supervised(z, grad)

    def _evaluate_supervised(self, z, grad):
        alpha, beta, bias, _ = self.layout.split(z)
        n, w = self.n, self.w
        G = self._coef(alpha, beta)
        if beta is not None:
            Gd = self._dcoef(alpha, beta)
            KG, KGd = np.hsplit(self.KX @ np.hstack([G, Gd]), 2)
        else:
            KG = self.KX @ G
        H = KG if bias is None else KG + (self.KB @ bias)[None, :]
        y = self.y[:, None]

        risk = np.sum(L.loss(self.loss_spec, self.theta, y, H) @ w) / n
        _finite(risk, "risk")
        norm = np.sum(alpha * KG) + (np.sum(beta * KGd) if beta is not None else 0.0)
        pen = 0.5 * self.lam * norm
        if bias is not None:
            pen += self.lam_b * bias @ self.KB @ bias
        if beta is not None:
            Hd = KGd if bias is None else KGd + (self.D1B @ bias)[None, :]
            pen += self.lam_nc * np.sum(L.smooth_pos(self.kappa, -Hd) @ w)
        _finite(pen, "penalty")
        f = risk + pen
        if not grad:
            return f, risk, pen, None

        dH = L.loss_grad_p(self.loss_spec, self.theta, y, H) * (w / n)
        # the ridge term contributes lam * kx G to the alpha gradient and
        # lam * kx Gd to the beta gradient
        inner_a = dH @ self.KT + self.lam * G
        if beta is not None:
            dHd = -self.lam_nc * L.smooth_pos_grad(self.kappa, -Hd) * w
            inner_a = inner_a + dHd @ self.D1
            inner_b = dH @ self.D2 + dHd @ self.D12 + self.lam * Gd
            ga, gb = np.hsplit(self.KX @ np.hstack([inner_a, inner_b]), 2)
        else:
            ga, gb = self.KX @ inner_a, None
        gbias = None
        if bias is not None:
            gbias = self.KB @ dH.sum(axis=0) + 2 * self.lam_b * (self.KB @ bias)
            if beta is not None:
                gbias = gbias + self.D1B.T @ dHd.sum(axis=0)
        g = self.layout.join(ga, gb, gbias)
        _finite(g, "gradient")
        return f, risk, pen, g

    def _evaluate_dlse(self, z, grad):
        alpha, _, _, tc = self.layout.split(z)
        n, w, th = self.n, self.w, self.theta
        C = alpha @ self.KT
        KC = self.KX @ C
        t = self.KB @ tc
        u = t[None, :] - KC
        # per-anchor weight w_j on -t and w_j / theta_j on the hinge
        risk = (np.sum(L.smooth_pos(self.kappa, u) @ (w / th)) - n * (t @ w)) / n
        _finite(risk, "risk")
        pen = 0.5 * np.sum((C * KC) @ w) + 0.5 * self.lam * t @ tc
        _finite(pen, "penalty")
        f = risk + pen
        if not grad:
            return f, risk, pen, None
        s = L.smooth_pos_grad(self.kappa, u) * (w / th) / n
        ga = self.KX @ ((C * w - s) @ self.KT)
        gt = self.KB @ (s.sum(axis=0) - w + self.lam * tc)
        g = self.layout.join(ga, t=gt)
        _finite(g, "gradient")
        return f, risk, pen, g

    # -- helpers for the L^{2,1} penalty -------------------------------

    def slice_norms(self, z) -> np.ndarray:
        alpha = self.layout.split(z)[0]
        C = alpha @ self.KT
        return np.sum(C * (self.KX @ C), axis=0)


def _finite(v, term: str):
    if not np.all(np.isfinite(v)):
        raise NumericalError(f"non-finite value in objective term {term!r}")


def _inv_sqrt_factor(M: np.ndarray, floor: float) -> np.ndarray:
    s, U = np.linalg.eigh(M)
    top = s.max() if s.size and s.max() > 0 else 1.0
    return U * np.maximum(s, floor * top) ** -0.5


class WhitenedObjective:
    """Kernel-whitened change of variables ``z = T v`` for the solver.

    Each coefficient block is mapped through inverse square roots of its
    Gram matrices (eigenvalues floored at ``floor`` times the largest), so the
    ridge part of the objective is close to ``|v|^2``. ``T`` is invertible,
    hence minimizing over ``v`` solves the original problem; this is the same
    as running L-BFGS with a kernel-metric initial Hessian.
    """

    def __init__(self, state: ObjectiveState, floor: float = 1e-10):
        self.state = state
        lay = self.layout = state.layout
        self.Px = _inv_sqrt_factor(state.KX, floor)
        self.Pt = _inv_sqrt_factor(state.KT, floor)
        self.Pd = _inv_sqrt_factor(state.D12, floor) if lay.derivative else None
        self.Pb = _inv_sqrt_factor(state.KB, floor) if (lay.bias or lay.threshold) else None

    def to_coef(self, v) -> np.ndarray:
        a, b, bi, t = self.layout.split(v)
        return self.layout.join(
            self.Px @ a @ self.Pt.T,
            None if b is None else self.Px @ b @ self.Pd.T,
            None if bi is None else self.Pb @ bi,
            None if t is None else self.Pb @ t,
        )

    def pull_grad(self, g) -> np.ndarray:
        a, b, bi, t = self.layout.split(g)
        return self.layout.join(
            self.Px.T @ a @ self.Pt,
            None if b is None else self.Px.T @ b @ self.Pd,
            None if bi is None else self.Pb.T @ bi,
            None if t is None else self.Pb.T @ t,
        )

    def __call__(self, v):
        f, g = self.state.value_and_grad(self.to_coef(v))
        return f, self.pull_grad(g)
