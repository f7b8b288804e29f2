"""Parameterized local losses, their Huber-type smoothings and derivatives.

All functions broadcast over numpy arrays. ``kappa = 0`` gives the exact,
nonsmooth loss; derivatives at kinks then return the midpoint of the
subdifferential.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

DEFAULT_KAPPA = 1e-4


class LossFamily(str, Enum):
    PINBALL = "pinball"
    CSC_HINGE = "csc_hinge"
    OCSVM_HINGE = "ocsvm_hinge"


@dataclass(frozen=True)
class LossSpec:
    family: LossFamily
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        object.__setattr__(self, "family", LossFamily(self.family))
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")


def smooth_abs(kappa: float, p):
    """Infimal convolution of ``kappa |.|`` with ``|.|^2 / 2``, rescaled.

    Quadratic ``p^2 / (2 kappa)`` on ``|p| <= kappa``, ``|p| - kappa/2`` beyond.
    """
    p = np.asarray(p, dtype=float)
    if kappa == 0:
        return np.abs(p)
    a = np.abs(p)
    # clip before squaring so the unused branch cannot overflow for tiny kappa
    c = np.minimum(a, kappa)
    return np.where(a <= kappa, c * c / (2 * kappa), a - kappa / 2)


def smooth_pos(kappa: float, p):
    p = np.asarray(p, dtype=float)
    if kappa == 0:
        return np.maximum(p, 0.0)
    q = np.clip(p, 0.0, kappa)
    return np.where(p <= kappa, q * q / (2 * kappa), p - kappa / 2)


def smooth_abs_grad(kappa: float, p):
    p = np.asarray(p, dtype=float)
    if kappa == 0:
        return np.sign(p)
    return np.clip(p / kappa, -1.0, 1.0)


def smooth_pos_grad(kappa: float, p):
    p = np.asarray(p, dtype=float)
    if kappa == 0:
        return np.where(p > 0, 1.0, np.where(p < 0, 0.0, 0.5))
    return np.clip(p / kappa, 0.0, 1.0)


def pinball_weight(theta, residual):
    # the indicator of R_- includes 0
    return np.abs(theta - (np.asarray(residual) <= 0))


def csc_weight(theta, y):
    return np.where(np.asarray(y) == -1, (1 - np.asarray(theta)) / 2, (np.asarray(theta) + 1) / 2)


def _check_labels(y):
    y = np.asarray(y)
    if not np.isin(y, (-1, 1)).all():
        raise ValueError("cost-sensitive labels must be -1 or +1")


def pinball(theta, y, p, kappa: float = 0.0):
    r = np.asarray(y, float) - np.asarray(p, float)
    return pinball_weight(theta, r) * smooth_abs(kappa, r)


def pinball_grad_p(theta, y, p, kappa: float = 0.0):
    r = np.asarray(y, float) - np.asarray(p, float)
    theta = np.asarray(theta, float)
    if kappa == 0:
        # slopes -theta (r > 0) and 1 - theta (r < 0); midpoint at r = 0
        return np.where(r > 0, -theta, np.where(r < 0, 1 - theta, 0.5 - theta))
    return -pinball_weight(theta, r) * smooth_abs_grad(kappa, r)


def csc_hinge(theta, y, p, kappa: float = 0.0):
    _check_labels(y)
    y = np.asarray(y, float)
    return csc_weight(theta, y) * smooth_pos(kappa, 1 - y * np.asarray(p, float))


def csc_hinge_grad_p(theta, y, p, kappa: float = 0.0):
    _check_labels(y)
    y = np.asarray(y, float)
    return -y * csc_weight(theta, y) * smooth_pos_grad(kappa, 1 - y * np.asarray(p, float))


def loss(spec: LossSpec, theta, y, p):
    if spec.family is LossFamily.PINBALL:
        return pinball(theta, y, p, spec.kappa)
    if spec.family is LossFamily.CSC_HINGE:
        return csc_hinge(theta, y, p, spec.kappa)
    raise ValueError("the level-set loss takes a threshold; use dlse_loss")


def loss_grad_p(spec: LossSpec, theta, y, p):
    if spec.family is LossFamily.PINBALL:
        return pinball_grad_p(theta, y, p, spec.kappa)
    if spec.family is LossFamily.CSC_HINGE:
        return csc_hinge_grad_p(theta, y, p, spec.kappa)
    raise ValueError("the level-set loss takes a threshold; use dlse_loss_grad")


def _check_level(theta):
    if np.any(np.asarray(theta) <= 0):
        raise ValueError("level-set hyperparameter must be > 0")


def dlse_loss(theta, t, p, kappa: float = 0.0):
    """One-class loss ``-t + psi_+(t - p) / theta`` for threshold ``t``."""
    _check_level(theta)
    t = np.asarray(t, float)
    return -t + smooth_pos(kappa, t - np.asarray(p, float)) / theta


def dlse_loss_grad(theta, t, p, kappa: float = 0.0):
    """Partial derivatives ``(d/dt, d/dp)`` of :func:`dlse_loss`."""
    _check_level(theta)
    s = smooth_pos_grad(kappa, np.asarray(t, float) - np.asarray(p, float)) / theta
    return s - 1.0, -s
