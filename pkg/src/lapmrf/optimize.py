"""Limited-memory BFGS ascent for smooth concave objectives."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericalError


@dataclass(frozen=True)
class OptimizerConfig:
    tol_grad_inf: float = 1e-6
    max_iters: int = 10000
    memory: int = 10
    c1: float = 1e-4  # sufficient increase
    c2: float = 0.9  # curvature
    max_line_steps: int = 60

    def __post_init__(self):
        if not self.tol_grad_inf > 0:
            raise ValueError("tol_grad_inf must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.memory < 1:
            raise ValueError("memory must be at least 1")
        if not 0 < self.c1 < self.c2 < 1:
            raise ValueError("line search constants need 0 < c1 < c2 < 1")


@dataclass
class OptimizeResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    evaluations: int
    message: str
    history: list


def _checked(fun, x):
    value, grad = fun(x)
    value = float(value)
    grad = np.asarray(grad, dtype=float)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NumericalError(f"objective not finite at point {x!r}", point=np.array(x))
    return value, grad


def maximize(fun: Callable, x0, config: OptimizerConfig | None = None,
             record_history: bool = False) -> OptimizeResult:
    """Maximize ``fun`` (returning ``(value, grad)``) from ``x0``.

    Steps satisfy the weak Wolfe conditions, found by expanding and bisecting
    a bracket. Stops when the gradient infinity-norm reaches the tolerance or
    the iteration cap is hit; the latter is reported, not raised.
    """
    cfg = config or OptimizerConfig()
    x = np.array(x0, dtype=float)
    # minimize the negated objective internally
    f, g = _checked(fun, x)
    f, g = -f, -g
    evals = 1
    mem = deque(maxlen=cfg.memory)
    history = [-f] if record_history else []
    message = "iteration limit reached"
    converged = False
    it = 0
    while True:
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= cfg.tol_grad_inf:
            converged, message = True, "gradient tolerance reached"
            break
        if it >= cfg.max_iters:
            break
        d = _direction(g, mem)
        slope = float(g @ d)
        if slope >= 0:
            mem.clear()
            d = -g
            slope = float(g @ d)
        t = 1.0 if mem else min(1.0, 1.0 / gnorm)
        lo, hi = 0.0, np.inf
        accepted = None
        for _ in range(cfg.max_line_steps):
            xt = x + t * d
            ft, gt = _checked(fun, xt)
            evals += 1
            ft, gt = -ft, -gt
            armijo = ft <= f + cfg.c1 * t * slope
            if not armijo and abs(t * slope) <= 1e-10 * (1.0 + abs(f)):
                # value change is below rounding; for a concave objective a
                # non-positive directional derivative still certifies ascent
                armijo = float(gt @ d) <= 0.0
            if not armijo:
                hi = t
            elif float(gt @ d) < cfg.c2 * slope:
                lo = t
            else:
                accepted = (xt, ft, gt)
                break
            t = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * lo
        if accepted is None:
            message = "line search failed to find an acceptable step"
            break
        xt, ft, gt = accepted
        s, y = xt - x, gt - g
        sy = float(s @ y)
        if sy > 1e-12 * float(np.sqrt((s @ s) * (y @ y))):
            mem.append((s, y, 1.0 / sy))
        x, f, g = xt, ft, gt
        it += 1
        if record_history:
            history.append(-f)
    return OptimizeResult(x, -f, -g, converged, it, gnorm, evals, message, history)


def _direction(g, mem):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(mem):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if mem:
        s, y, _ = mem[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(mem, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q
