"""Projected subgradient descent with diminishing steps and iterate averaging."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["project_scaled_simplex", "project_hyperplane", "SubgradientResult", "projected_subgradient"]


def project_scaled_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection onto ``{x >= 0, sum(x) = total}`` (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    ind = np.arange(1, v.size + 1)
    rho = np.flatnonzero(u - css / ind > 0)[-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def project_hyperplane(v: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    """Projection onto ``{x : a.x = b}``."""
    return v - (a @ v - b) / (a @ a) * a


@dataclass
class SubgradientResult:
    x: np.ndarray  # best iterate (or average, whichever is lower)
    value: float
    iterations: int
    residual: float  # relative decrease of the best value over the second half of the run
    lower_bound: float  # best certified lower bound, -inf if none was available
    averaged_value: float

    @property
    def gap(self) -> float:
        if not math.isfinite(self.lower_bound) or self.value == 0:
            return math.inf
        return max(self.value - self.lower_bound, 0.0) / abs(self.value)


def projected_subgradient(
    oracle: Callable[[np.ndarray], tuple[float, np.ndarray]],
    project: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    step0: float,
    max_iter: int = 20_000,
    average_from: float = 0.5,
    linear_min: Optional[Callable[[np.ndarray], float]] = None,
    bound_every: int = 25,
) -> SubgradientResult:
    """Minimise a convex function over a convex set.

    ``oracle(x)`` returns the value and one subgradient, ``project`` maps onto
    the feasible set, and steps are ``step0 / sqrt(k)``.  Iterates after
    ``average_from * max_iter`` are averaged (Polyak).  When ``linear_min(g)``
    (the minimum of ``g . y`` over the feasible set) is supplied, every
    ``bound_every`` iterations the linearisation ``f(x) + min g.(y - x)`` gives
    a certified lower bound.
    """
    x = project(np.asarray(x0, dtype=float))
    best_x, best_f = x.copy(), math.inf
    lower = -math.inf
    start_avg = int(average_from * max_iter)
    avg = np.zeros_like(x)
    n_avg = 0
    best_at_half = math.inf
    for k in range(1, max_iter + 1):
        f, g = oracle(x)
        if f < best_f:
            best_f, best_x = f, x.copy()
        if linear_min is not None and (k == 1 or k % bound_every == 0):
            lower = max(lower, f + linear_min(g) - g @ x)
        if k == max_iter // 2:
            best_at_half = best_f
        x = project(x - (step0 / math.sqrt(k)) * g)
        if k > start_avg:
            avg += x
            n_avg += 1
    f, g = oracle(x)
    if f < best_f:
        best_f, best_x = f, x.copy()
    avg_f = math.inf
    if n_avg:
        avg = project(avg / n_avg)
        avg_f, g = oracle(avg)
        if linear_min is not None:
            lower = max(lower, avg_f + linear_min(g) - g @ avg)
        if avg_f < best_f:
            best_f, best_x = avg_f, avg
    if not math.isfinite(best_at_half):
        best_at_half = best_f
    residual = (best_at_half - best_f) / abs(best_f) if best_f else 0.0
    return SubgradientResult(best_x, float(best_f), max_iter, float(residual), float(lower), float(avg_f))
