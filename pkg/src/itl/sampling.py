"""Discretization of the hyperparameter measure into anchors and weights."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc


@dataclass(frozen=True)
class SampledContinuum:
    anchors: np.ndarray
    weights: np.ndarray
    domain: tuple

    @property
    def m(self) -> int:
        return len(self.anchors)

    def integrate(self, g: Callable) -> float:
        return float(np.sum(self.weights * g(self.anchors)))


def _check(m: int, domain) -> tuple:
    if m < 1:
        raise ValueError(f"need at least one anchor, got m={m}")
    lo, hi = float(domain[0]), float(domain[1])
    if not hi > lo:
        raise ValueError(f"empty domain {domain}")
    return lo, hi


def sobol_points(m: int) -> np.ndarray:
    """First ``m`` non-zero points of the unscrambled 1-D Sobol sequence.

    The origin is dropped so every point lies strictly inside (0, 1):
    0.5, 0.75, 0.25, 0.375, ...
    """
    with warnings.catch_warnings():
        # scipy warns when m + 1 is not a power of two
        warnings.simplefilter("ignore", UserWarning)
        pts = qmc.Sobol(d=1, scramble=False).random(m + 1)
    return pts[1:, 0]


def sample_qmc(m: int, domain=(0.0, 1.0), inv_cdf: Optional[Callable] = None) -> SampledContinuum:
    """Equal-weight Sobol anchors.

    ``inv_cdf`` maps (0, 1) to (0, 1); the result is then rescaled into
    ``domain``. With ``inv_cdf=None`` the measure is uniform on the domain.
    """
    lo, hi = _check(m, domain)
    u = sobol_points(m)
    if inv_cdf is not None:
        u = np.asarray(inv_cdf(u), dtype=float)
    return SampledContinuum(lo + (hi - lo) * u, np.full(m, 1.0 / m), (lo, hi))


def sample_mc(m: int, domain=(0.0, 1.0), seed: int = 0) -> SampledContinuum:
    lo, hi = _check(m, domain)
    rng = np.random.default_rng(seed)
    return SampledContinuum(rng.uniform(lo, hi, size=m), np.full(m, 1.0 / m), (lo, hi))


def sample_gauss_legendre(m: int, domain=(0.0, 1.0)) -> SampledContinuum:
    lo, hi = _check(m, domain)
    x, w = np.polynomial.legendre.leggauss(m)
    nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    # (hi - lo)/2 Jacobian times the uniform density 1/(hi - lo)
    return SampledContinuum(nodes, 0.5 * w, (lo, hi))


SAMPLERS = ("sobol", "mc", "gauss-legendre")


def sample(kind: str, m: int, domain, seed: int = 0) -> SampledContinuum:
    if kind == "sobol":
        return sample_qmc(m, domain)
    if kind == "mc":
        return sample_mc(m, domain, seed)
    if kind == "gauss-legendre":
        return sample_gauss_legendre(m, domain)
    raise ValueError(f"unknown sampler {kind!r}; expected one of {SAMPLERS}")
