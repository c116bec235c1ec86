"""Independent reference computations used by the test-suite.

Nothing here imports the package: every oracle recomputes its quantity from
first principles with a different method (brute-force summation, dense
Riemann sums, classical closed forms).
"""
from __future__ import annotations

import math

import numpy as np


def sorted_pieces(values, measures):
    v = np.asarray(values, dtype=float)
    m = np.asarray(measures, dtype=float)
    order = np.argsort(-v, kind="stable")
    keep = v[order] > 0
    return v[order][keep], m[order][keep]


def integral_of_fstar(values, measures, t):
    """``int_0^t f*`` by direct summation over sorted pieces."""
    v, m = sorted_pieces(values, measures)
    starts = np.concatenate(([0.0], np.cumsum(m)[:-1]))
    t = np.asarray(t, dtype=float)[..., None]
    return np.sum(v * np.clip(t - starts, 0.0, m), axis=-1)


def maximal_function(values, measures, t):
    t = np.asarray(t, dtype=float)
    return integral_of_fstar(values, measures, t) / t


def lp_norm(values, measures, p):
    v = np.asarray(values, dtype=float)
    return float(np.sum(v**p * np.asarray(measures, dtype=float)) ** (1 / p))


def riemann_norm_Ppq(values, measures, p, q, panels=10**6, chunk=50_000):
    """``||f||_(p,q)`` by a midpoint rule in ``x = log t`` on a wide window.

    Below the window ``f**`` is the constant top value and above it ``I/t``;
    both ends are integrated in closed form.
    """
    v, m = sorted_pieces(values, measures)
    T = float(np.sum(m))
    I = float(np.sum(v * m))
    lo, hi = math.log(m[0]) - 2.0, math.log(T) + 2.0
    dx = (hi - lo) / panels
    total = v[0] ** q * (p / q) * math.exp(lo) ** (q / p)
    total += I**q * p / (q * (p - 1)) * math.exp(hi) ** (q / p - q)
    for start in range(0, panels, chunk):
        x = lo + (np.arange(start, min(start + chunk, panels)) + 0.5) * dx
        t = np.exp(x)
        fss = integral_of_fstar(v, m, t) / t
        total += float(np.sum(t ** (q / p) * fss**q)) * dx
    return total ** (1 / q)


def unit_ball_volume(n):
    """``Omega_n`` from the two-step recursion ``Omega_n = 2 pi / n * Omega_{n-2}``."""
    vol = {0: 1.0, 1: 2.0}
    for k in range(2, n + 1):
        vol[k] = 2 * math.pi / k * vol[k - 2]
    return vol[n]


def interval_capacity_p2(a, b):
    """Dirichlet 2-capacity of a point at distances ``a``, ``b`` from the ends of an interval."""
    return 1 / a + 1 / b


def annulus_capacity_2d(r):
    """Classical 2-capacity of ``B(0, r)`` in the unit disk (log profile)."""
    return 2 * math.pi / math.log(1 / r)
