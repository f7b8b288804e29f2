"""Unconstrained limited-memory BFGS with a strong-Wolfe line search."""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Tuple

import numpy as np

log = logging.getLogger(__name__)


class Termination(str, Enum):
    GRAD_TOL = "GradTol"
    F_TOL = "FTol"
    MAX_ITERS = "MaxIters"
    LINE_SEARCH_FAIL = "LineSearchFail"


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 500
    memory: int = 10
    grad_tol: float = 1e-6
    f_tol: float = 1e-10
    c1: float = 1e-4
    c2: float = 0.9
    max_ls: int = 40

    def __post_init__(self):
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("line search needs 0 < c1 < c2 < 1")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")


@dataclass
class SolveReport:
    final_value: float
    final_grad_norm: float
    iterations: int
    function_evals: int
    termination: Termination
    values: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "final_value": self.final_value,
            "final_grad_norm": self.final_grad_norm,
            "iterations": self.iterations,
            "function_evals": self.function_evals,
            "termination": self.termination.value,
        }


Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]


class _Counted:
    def __init__(self, fun: Objective):
        self.fun, self.calls = fun, 0

    def __call__(self, x):
        self.calls += 1
        f, g = self.fun(x)
        return float(f), np.asarray(g, float)


def _cubic_min(a, fa, da, b, fb, db):
    """Minimizer of the cubic interpolating (a, fa, da), (b, fb, db), or None."""
    d1 = da + db - 3 * (fa - fb) / (a - b)
    disc = d1 * d1 - da * db
    if disc < 0:
        return None
    d2 = np.copysign(np.sqrt(disc), b - a)
    den = db - da + 2 * d2
    if den == 0:
        return None
    return b - (b - a) * (db + d2 - d1) / den


def _line_search(fun, x, f0, g0, d, step, cfg):
    """Strong-Wolfe search along ``d``.

    Returns ``(step, f, g, strong)``; ``step`` is ``None`` when no point with
    sufficient decrease was found. ``strong`` is False for a fallback step
    that only satisfies the sufficient-decrease condition.
    """
    dphi0 = g0 @ d
    c1, c2 = cfg.c1, cfg.c2

    def phi(a):
        f, g = fun(x + a * d)
        return f, g, g @ d

    def armijo(a, f, dp):
        if not np.isfinite(f):
            return False
        if f <= f0 + c1 * a * dphi0:
            return True
        # approximate Wolfe: once decreases fall below roundoff, judge
        # sufficient decrease on the directional derivative instead
        return f <= f0 and dp <= (2 * c1 - 1) * dphi0

    def zoom(lo, f_lo, dp_lo, g_lo, hi, f_hi, dp_hi, budget):
        for _ in range(budget):
            width = hi - lo
            a = None
            if np.isfinite(f_hi) and np.isfinite(dp_hi):
                a = _cubic_min(lo, f_lo, dp_lo, hi, f_hi, dp_hi)
            lo_b, hi_b = sorted((lo + 0.1 * width, hi - 0.1 * width))
            if a is None or not np.isfinite(a) or not lo_b <= a <= hi_b:
                a = lo + 0.5 * width
            f, g, dp = phi(a)
            if not armijo(a, f, dp) or f > f_lo:
                hi, f_hi, dp_hi = a, f, dp
            else:
                if abs(dp) <= -c2 * dphi0:
                    return a, f, g, True
                if dp * (hi - lo) >= 0:
                    hi, f_hi, dp_hi = lo, f_lo, dp_lo
                lo, f_lo, dp_lo, g_lo = a, f, dp, g
            if abs(hi - lo) <= 1e-16 * max(1.0, abs(lo)):
                break
        if lo > 0:
            return lo, f_lo, g_lo, False
        return None, f0, g0, False

    a_prev, f_prev, dp_prev, g_prev = 0.0, f0, dphi0, g0
    a = step
    for i in range(cfg.max_ls):
        f, g, dp = phi(a)
        if not armijo(a, f, dp) or (i > 0 and f > f_prev):
            return zoom(a_prev, f_prev, dp_prev, g_prev, a, f, dp, cfg.max_ls)
        if abs(dp) <= -c2 * dphi0:
            return a, f, g, True
        if dp >= 0:
            return zoom(a, f, dp, g, a_prev, f_prev, dp_prev, cfg.max_ls)
        a_prev, f_prev, dp_prev, g_prev = a, f, dp, g
        a = 4.0 * a
    return a_prev, f_prev, g_prev, False


def _two_loop(g, pairs):
    q = g.copy()
    stack = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        q -= a * y
        stack.append(a)
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(stack)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def minimize(fun: Objective, x0, cfg: SolverConfig = SolverConfig()):
    """Minimize ``fun`` (returning value and gradient) from ``x0``.

    Returns ``(x, SolveReport)`` where ``x`` is the best iterate seen.
    """
    fun = _Counted(fun)
    x = np.array(x0, dtype=float)
    f, g = fun(x)
    if not np.isfinite(f) or not np.isfinite(g).all():
        raise FloatingPointError("objective is not finite at the starting point")
    values = [f]
    pairs: deque = deque(maxlen=cfg.memory)
    term = Termination.MAX_ITERS
    it = 0
    if np.max(np.abs(g), initial=0.0) <= cfg.grad_tol:
        term = Termination.GRAD_TOL
    else:
        while it < cfg.max_iters:
            d = _two_loop(g, pairs)
            if not g @ d < 0:
                pairs.clear()
                d = -g
            step = 1.0 if pairs else min(1.0, 1.0 / np.linalg.norm(g))
            a, f_new, g_new, strong = _line_search(fun, x, f, g, d, step, cfg)
            if a is None and pairs:
                # retry once along steepest descent with a fresh memory
                pairs.clear()
                d = -g
                a, f_new, g_new, strong = _line_search(fun, x, f, g, d, min(1.0, 1.0 / np.linalg.norm(g)), cfg)
            if a is None:
                term = Termination.LINE_SEARCH_FAIL
                break
            it += 1
            s = a * d
            yv = g_new - g
            sy = s @ yv
            if not strong:
                # a fallback step carries unreliable curvature; restart the memory
                pairs.clear()
            elif sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
                pairs.append((s, yv, 1.0 / sy))
            f_old = f
            x, f, g = x + s, f_new, g_new
            values.append(f)
            if np.max(np.abs(g)) <= cfg.grad_tol:
                term = Termination.GRAD_TOL
                break
            if cfg.f_tol > 0 and (f_old - f) <= cfg.f_tol * max(abs(f_old), abs(f), 1.0):
                term = Termination.F_TOL
                break
    gn = float(np.max(np.abs(g), initial=0.0))
    log.debug("lbfgs: %s after %d iterations, f=%.6g, |g|=%.3g", term.value, it, f, gn)
    return x, SolveReport(f, gn, it, fun.calls, term, values)
