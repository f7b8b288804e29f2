"""Scalar kernels used on inputs and on the hyperparameter axis.

The Gaussian kernel uses the ``exp(-gamma * ||a - b||^2)`` convention. A
bandwidth quoted as ``sigma`` converts via ``gamma = 1 / (2 sigma^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.distance import cdist


class KernelFamily(str, Enum):
    GAUSSIAN = "gaussian"
    EXP_CHI2 = "exp_chi2"
    CONSTANT = "constant"


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily = KernelFamily.GAUSSIAN
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if self.family is not KernelFamily.CONSTANT and not self.gamma > 0:
            raise ValueError(f"{self.family.value} kernel needs gamma > 0, got {self.gamma}")

    def to_dict(self) -> dict:
        return {"family": self.family.value, "gamma": float(self.gamma)}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(KernelFamily(d["family"]), float(d["gamma"]))


def gaussian(gamma: float) -> KernelSpec:
    return KernelSpec(KernelFamily.GAUSSIAN, gamma)


def constant() -> KernelSpec:
    return KernelSpec(KernelFamily.CONSTANT, 1.0)


def exp_chi2(gamma: float) -> KernelSpec:
    return KernelSpec(KernelFamily.EXP_CHI2, gamma)


def sigma_to_gamma(sigma: float) -> float:
    return 1.0 / (2.0 * sigma * sigma)


def _as_points(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 0:
        return A.reshape(1, 1)
    if A.ndim == 1:
        return A[:, None]
    return A


def _chi2_dist(A: np.ndarray, B: np.ndarray, chunk: int = 256) -> np.ndarray:
    if (A < 0).any() or (B < 0).any():
        raise ValueError("exp_chi2 kernel requires non-negative coordinates")
    out = np.empty((A.shape[0], B.shape[0]))
    for s in range(0, A.shape[0], chunk):
        a = A[s:s + chunk, None, :]
        num = (a - B[None, :, :]) ** 2
        den = a + B[None, :, :]
        # 0/0 summands (both coordinates zero) are defined as 0
        q = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        out[s:s + chunk] = q.sum(axis=-1)
    return out


def _sq_dist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # per-pair differences rather than the expanded form: exact zeros on the
    # diagonal and bitwise symmetry k(a, b) == k(b, a)
    return cdist(A, B, "sqeuclidean")


def gram(spec: KernelSpec, A, B) -> np.ndarray:
    """Dense kernel matrix ``M[i, j] = k(A[i], B[j])``.

    ``A`` and ``B`` are ``(n, d)`` arrays, or 1-D arrays of scalar points.
    """
    A, B = _as_points(A), _as_points(B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.family is KernelFamily.CONSTANT:
        return np.ones((A.shape[0], B.shape[0]))
    if spec.family is KernelFamily.GAUSSIAN:
        return np.exp(-spec.gamma * _sq_dist(A, B))
    return np.exp(-spec.gamma * _chi2_dist(A, B))


def eval(spec: KernelSpec, a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(gram(spec, a[None, :], b[None, :])[0, 0])


# Derivatives on the scalar hyperparameter axis. d1 is w.r.t. the first
# argument, d2 w.r.t. the second.

def _check_theta_kernel(spec: KernelSpec):
    if spec.family is KernelFamily.EXP_CHI2:
        raise ValueError("derivatives are only available for gaussian and constant kernels")


def gram_d1(spec: KernelSpec, s, t) -> np.ndarray:
    _check_theta_kernel(spec)
    s, t = np.atleast_1d(np.asarray(s, float)), np.atleast_1d(np.asarray(t, float))
    if spec.family is KernelFamily.CONSTANT:
        return np.zeros((s.size, t.size))
    d = s[:, None] - t[None, :]
    return -2.0 * spec.gamma * d * np.exp(-spec.gamma * d * d)


def gram_d2(spec: KernelSpec, s, t) -> np.ndarray:
    _check_theta_kernel(spec)
    s, t = np.atleast_1d(np.asarray(s, float)), np.atleast_1d(np.asarray(t, float))
    if spec.family is KernelFamily.CONSTANT:
        return np.zeros((s.size, t.size))
    d = s[:, None] - t[None, :]
    return 2.0 * spec.gamma * d * np.exp(-spec.gamma * d * d)


def gram_d1d2(spec: KernelSpec, s, t) -> np.ndarray:
    _check_theta_kernel(spec)
    s, t = np.atleast_1d(np.asarray(s, float)), np.atleast_1d(np.asarray(t, float))
    if spec.family is KernelFamily.CONSTANT:
        return np.zeros((s.size, t.size))
    g = spec.gamma
    d = s[:, None] - t[None, :]
    return (2.0 * g - 4.0 * g * g * d * d) * np.exp(-g * d * d)


def eval_d1(spec: KernelSpec, s: float, t: float) -> float:
    return float(gram_d1(spec, s, t)[0, 0])


def eval_d2(spec: KernelSpec, s: float, t: float) -> float:
    return float(gram_d2(spec, s, t)[0, 0])


def eval_d1d2(spec: KernelSpec, s: float, t: float) -> float:
    return float(gram_d1d2(spec, s, t)[0, 0])
