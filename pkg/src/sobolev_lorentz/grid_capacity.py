"""Discrete condenser capacities on node grids in one and two dimensions.

A grid function ``u`` lives on the nodes of a regular grid of spacing ``h``;
every node carries measure ``h^n`` and its gradient is the vector of forward
differences (zero extension past the last node).  The discrete capacity of a
node set ``E`` relative to a domain is

    min ||rearrange(|grad_h u|)||_{p,q}^p  over  u = 1 on E, u = 0 on the
    boundary nodes, 0 <= u <= 1 elsewhere.

Three solvers share that contract:

* ``p = q = 2``: the objective is the Dirichlet energy, so the minimiser is
  the solution of a sparse linear system (it stays in ``[0, 1]`` by the
  discrete maximum principle).
* ``q = 1``: the objective is an ordered weighted l1 norm of the gradient
  magnitudes.  It is solved by a primal-dual (Chambolle-Pock) iteration whose
  dual iterate gives a certified lower bound; iteration stops once the
  relative duality gap is below ``gap_tol``.
* anything else with ``q <= p``: projected subgradient descent with averaging.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.sparse.linalg import spsolve

from .finite_difference import difference_operator
from .lorentz_norms import LorentzExponents, power_increments
from .optimize import projected_subgradient

__all__ = [
    "GridDomain",
    "CellSet",
    "GridCapacityResult",
    "discrete_capacity",
    "solve_grid_capacity",
    "AxiomReport",
    "axiom_suite",
    "mct_check",
    "cross_validate_radial",
    "disk_condenser",
]

FLAVORS = ("pq", "(pq)")
AXIOMS = ("monotonicity", "domain_monotonicity", "subadditivity", "disjoint_additivity")


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Node grid of a given ``shape`` and spacing ``h`` with a boundary mask.

    Admissible functions vanish on boundary nodes.  ``origin`` is the
    coordinate of node ``(0, ..., 0)``.
    """

    shape: tuple
    h: float
    boundary: np.ndarray
    origin: tuple = None

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if len(shape) not in (1, 2) or min(shape) < 1:
            raise ValueError("grids must be 1-d or 2-d with positive extents")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError("h must be positive")
        b = np.array(self.boundary, dtype=bool)
        if b.shape != shape:
            raise ValueError(f"boundary mask has shape {b.shape}, expected {shape}")
        if not b.any():
            raise ValueError("boundary mask must be nonempty")
        b.setflags(write=False)
        origin = tuple(float(o) for o in self.origin) if self.origin is not None else (0.0,) * len(shape)
        if len(origin) != len(shape):
            raise ValueError("origin needs one coordinate per axis")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "boundary", b)
        object.__setattr__(self, "origin", origin)

    @property
    def n(self) -> int:
        return len(self.shape)

    @property
    def node_measure(self) -> float:
        return self.h**self.n

    @property
    def interior(self) -> np.ndarray:
        return ~self.boundary

    def coordinates(self) -> tuple:
        axes = [o + self.h * np.arange(m) for o, m in zip(self.origin, self.shape)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def with_boundary(self, mask: np.ndarray) -> "GridDomain":
        return GridDomain(self.shape, self.h, mask, self.origin)

    @classmethod
    def rectangle(cls, shape: Sequence[int], h: float = 1.0) -> "GridDomain":
        """Box whose outermost layer of nodes is the boundary."""
        shape = tuple(int(s) for s in shape)
        b = np.ones(shape, dtype=bool)
        b[tuple(slice(1, -1) for _ in shape)] = False
        return cls(shape, h, b)

    @classmethod
    def interval(cls, a: float = 0.0, b: float = 1.0, h: float = 0.01) -> "GridDomain":
        """Nodes ``a, a + h, ..., b``; the two endpoints are the boundary."""
        m = int(round((b - a) / h))
        if m < 2 or not math.isclose(m * h, b - a, rel_tol=1e-9):
            raise ValueError("h must divide the interval into at least two steps")
        mask = np.zeros(m + 1, dtype=bool)
        mask[[0, -1]] = True
        return cls((m + 1,), h, mask, (a,))

    @classmethod
    def disk(cls, radius: float = 1.0, h: float = 0.05, n: int = 2) -> "GridDomain":
        """Open ball of ``radius`` centred at a node; nodes with ``|x| >= radius`` are boundary."""
        if radius <= 0:
            raise ValueError("radius must be positive")
        k = int(math.ceil(radius / h - 1e-12))
        shape = (2 * k + 1,) * n
        dom = cls(shape, h, np.ones(shape, dtype=bool), (-k * h,) * n)
        r = np.sqrt(sum(x * x for x in dom.coordinates()))
        return dom.with_boundary(r >= radius * (1 - 1e-12))


@dataclass(frozen=True, eq=False)
class CellSet:
    """A set of grid nodes, stored as a boolean mask."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def from_indices(cls, shape: Sequence[int], cells) -> "CellSet":
        shape = tuple(shape)
        m = np.zeros(shape, dtype=bool)
        for c in cells:
            c = tuple(int(i) for i in np.atleast_1d(c))
            if len(c) != len(shape) or any(not 0 <= i < s for i, s in zip(c, shape)):
                raise ValueError(f"cell {list(c)} is outside a grid of shape {list(shape)}")
            m[c] = True
        return cls(m)

    @classmethod
    def empty(cls, shape) -> "CellSet":
        return cls(np.zeros(tuple(shape), dtype=bool))

    def __len__(self) -> int:
        return int(self.mask.sum())

    def __or__(self, other: "CellSet") -> "CellSet":
        return CellSet(self.mask | other.mask)

    def issubset(self, other: "CellSet") -> bool:
        return bool(np.all(other.mask[self.mask]))

    def indices(self) -> list:
        return [list(map(int, ix)) for ix in np.argwhere(self.mask)]

    def to_json(self) -> dict:
        return {"cells": self.indices()}

    @classmethod
    def from_json(cls, obj: dict, shape) -> "CellSet":
        try:
            cells = obj["cells"]
        except (KeyError, TypeError) as exc:
            raise ValueError("cell set JSON needs a 'cells' list") from exc
        return cls.from_indices(shape, cells)


@dataclass
class GridCapacityResult:
    value: float
    lower: float  # certified lower bound when the method provides one, else nan
    method: str  # "empty", "direct", "primal-dual" or "subgradient"
    iterations: int
    gap: float  # relative gap (value - lower) / value
    converged: bool
    u: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "lower": self.lower,
            "method": self.method,
            "iterations": self.iterations,
            "gap": self.gap,
            "converged": self.converged,
        }


def _as_exponents(e) -> LorentzExponents:
    return e if isinstance(e, LorentzExponents) else LorentzExponents(*e)


def _owl_weights(N: int, mu: float, p: float) -> np.ndarray:
    """Weights of ``||.||_{p,1}`` on ``N`` nodes of measure ``mu`` (nonincreasing)."""
    k = np.arange(N + 1) * mu
    return p * power_increments(k, 1.0 / p)


def _owl_prox(m: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Prox of ``sum_k w_k m_(k)`` at nonnegative ``m`` for nonincreasing ``w``."""
    order = np.argsort(-m, kind="stable")
    x = np.maximum(isotonic_regression(m[order] - w, increasing=False).x, 0.0)
    out = np.empty_like(m)
    out[order] = x
    return out


def _check_problem(E: CellSet, D: GridDomain, e: LorentzExponents, flavor: str):
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}")
    if E.mask.shape != D.shape:
        raise ValueError("cell set and domain have different shapes")
    if e.q > e.p:
        raise ValueError("discrete capacities need q <= p")
    if np.any(E.mask & D.boundary):
        raise ValueError("E touches the boundary of the domain; no admissible function exists")


def _solve_direct(E, D, K):
    free = (~(E.mask | D.boundary)).ravel()
    u = E.mask.ravel().astype(float)
    if free.any():
        A = (K.T @ K).tocsr()
        Aff = A[free][:, free]
        rhs = -(A[free][:, E.mask.ravel()] @ np.ones(int(E.mask.sum())))
        u[free] = np.clip(spsolve(Aff.tocsc(), rhs), 0.0, 1.0)
    g = K @ u
    val = float(D.node_measure * (g @ g))
    return GridCapacityResult(val, val, "direct", 1, 0.0, True, u.reshape(D.shape))


def _solve_primal_dual(E, D, K, p, gap_tol, max_iter, ratio, check_every):
    # tau / sigma = ratio**2 with tau * sigma * ||K||^2 < 1; the primal variable
    # moves over [0, 1] while the dual one is of size h^(n/p), hence ratio > 1.
    d, N = D.n, int(np.prod(D.shape))
    KT = K.T.tocsr()
    w = _owl_weights(N, D.node_measure, p)
    Em = E.mask.ravel()
    free = ~(Em | D.boundary.ravel())
    L = math.sqrt(4 * d) / D.h
    tau, sigma = 0.99 * ratio / L, 0.99 / (L * ratio)
    u = Em.astype(float)
    ubar = u.copy()
    y = np.zeros(K.shape[0])
    Dv, it = -math.inf, 0
    best_u, best_P = u.copy(), math.inf
    for it in range(1, max_iter + 1):
        z = (y + sigma * (K @ ubar)).reshape(d, N)
        m = np.sqrt(np.sum(z * z, axis=0))
        x = _owl_prox(m, w)
        shrink = np.divide(x, m, out=np.zeros_like(m), where=m > 0)
        y_new = (z * (1.0 - shrink)).ravel()
        KTy = KT @ y_new
        un = np.where(free, np.clip(u - tau * KTy, 0.0, 1.0), u)
        if it % check_every == 0 or it == max_iter:
            mag = np.sqrt(np.sum((K @ un).reshape(d, N) ** 2, axis=0))
            Pk = float(np.sort(mag)[::-1] @ w)
            if Pk < best_P:
                best_P, best_u = Pk, un.copy()
            Dv = max(Dv, float(-np.maximum(-KTy[free], 0.0).sum() + KTy[Em].sum()))
            if best_P - Dv <= gap_tol * best_P:
                break
        ubar = 2.0 * un - u
        u, y = un, y_new
    lower = max(Dv, 0.0)
    gap = (best_P - lower) / best_P
    return GridCapacityResult(
        best_P**p, lower**p, "primal-dual", it, gap, gap <= gap_tol, best_u.reshape(D.shape)
    )


def _lorentz_value_grad(m: np.ndarray, mu: float, p: float, q: float, flavor: str):
    """``J = ||m||^p`` over equal-measure nodes and ``dJ/dm`` (one subgradient)."""
    N = m.size
    order = np.argsort(-m, kind="stable")
    v = m[order]
    T = np.arange(N + 1) * mu
    if flavor == "pq":
        wts = (p / q) * power_increments(T, q / p)
        S = float((v**q) @ wts)
        dS = q * v ** (q - 1) * wts
    else:
        S, dS = _maximal_objective(v, mu, p, q)
    g = np.zeros(N)
    if S <= 0:
        return 0.0, g
    J = S ** (p / q)
    g[order] = (p / q) * S ** (p / q - 1) * dS
    return J, g


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _maximal_objective(v: np.ndarray, mu: float, p: float, q: float):
    """``S = ||f||_{(p,q)}^q`` for sorted node values ``v`` and ``dS/dv``.

    The first piece and the tail beyond the support are exact; interior
    pieces use fixed 16-point Gauss-Legendre quadrature, on which ``f**`` is a
    smooth rational function.
    """
    N = v.size
    k = np.arange(N)
    A = mu * np.concatenate(([0.0], np.cumsum(v)))  # integral of f* up to k mu
    S = v[0] ** q * (p / q) * mu ** (q / p)
    dS = np.zeros(N)
    dS[0] = q * v[0] ** (q - 1) * (p / q) * mu ** (q / p) if v[0] > 0 else 0.0
    if N > 1:
        lo = k[1:, None] * mu
        t = lo + 0.5 * mu * (_GL_X[None, :] + 1.0)
        ww = 0.5 * mu * _GL_W[None, :]
        fss = (A[1:-1, None] + v[1:, None] * (t - lo)) / t
        base = t ** (q / p - 1.0) * ww
        S += float(np.sum(base * fss**q))
        c = q * base * fss ** (q - 1) / t  # dS per unit change of t f** at each node
        per_piece = c.sum(axis=1)
        # f** on piece j depends on v_i (i < j) with weight mu, on v_j with weight (t - j mu)
        dS[:-1] += mu * np.cumsum(per_piece[::-1])[::-1]
        dS[1:] += np.sum(c * (t - lo), axis=1)
    I, Tend = A[-1], N * mu
    tail = p / (q * (p - 1)) * Tend ** (q / p - q)
    S += I**q * tail
    if I > 0:
        dS += q * I ** (q - 1) * tail * mu
    return S, dS


def _solve_subgradient(E, D, K, e, flavor, max_iter):
    d, N = D.n, int(np.prod(D.shape))
    p, q, mu = e.p, e.q, D.node_measure
    Em = E.mask.ravel()
    free = ~(Em | D.boundary.ravel())
    KT = K.T.tocsr()

    def oracle(u):
        Du = (K @ u).reshape(d, N)
        m = np.sqrt(np.sum(Du * Du, axis=0))
        J, gm = _lorentz_value_grad(m, mu, p, q, flavor)
        unit = np.divide(Du, m, out=np.zeros_like(Du), where=m > 0)
        return J, KT @ (unit * gm).ravel()

    def project(u):
        return np.where(free, np.clip(u, 0.0, 1.0), Em.astype(float))

    def linear_min(g):
        return float(np.minimum(g[free], 0.0).sum() + g[Em].sum())

    # start from the harmonic-like direct solution: feasible and usually close
    u0 = _solve_direct(E, D, K).u.ravel()
    J0, g0 = oracle(u0)
    gn = np.linalg.norm(np.where(free, g0, 0.0))
    step0 = 0.1 * math.sqrt(max(free.sum(), 1)) / gn if gn > 0 else 1.0
    res = projected_subgradient(oracle, project, u0, step0, max_iter=max_iter, linear_min=linear_min)
    if J0 <= res.value:
        x, val = u0, J0
    else:
        x, val = res.x, res.value
    lower = max(res.lower_bound, 0.0)
    gap = (val - lower) / val if val > 0 else 0.0
    return GridCapacityResult(val, lower, "subgradient", res.iterations, gap, res.residual <= 1e-3, x.reshape(D.shape))


def solve_grid_capacity(
    E: CellSet,
    D: GridDomain,
    e,
    flavor: str = "pq",
    gap_tol: float = 1e-6,
    max_iter: int = 20_000,
    step_ratio: float = 8.0,
    check_every: int = 25,
) -> GridCapacityResult:
    """Discrete capacity of ``E`` relative to ``D`` with solver diagnostics.

    ``flavor`` selects ``||.||_{p,q}`` (``"pq"``) or ``||.||_{(p,q)}``
    (``"(pq)"``) as the gradient norm.
    """
    e = _as_exponents(e)
    _check_problem(E, D, e, flavor)
    if not E.mask.any():
        return GridCapacityResult(0.0, 0.0, "empty", 0, 0.0, True, np.zeros(D.shape))
    K = difference_operator(D.shape, D.h)
    if e.q == 1:
        res = _solve_primal_dual(E, D, K, e.p, gap_tol, max_iter, step_ratio, check_every)
        if flavor == "(pq)":
            # with q = 1 the maximal-function norm is exactly p' times the quasinorm
            scale = e.p_conj**e.p
            res.value *= scale
            res.lower *= scale
        return res
    if flavor == "pq" and e.p == 2 and e.q == 2:
        return _solve_direct(E, D, K)
    return _solve_subgradient(E, D, K, e, flavor, max_iter)


def discrete_capacity(E: CellSet, D: GridDomain, e, flavor: str = "pq", **kw) -> float:
    """Value of :func:`solve_grid_capacity`; 0 for empty ``E``."""
    return solve_grid_capacity(E, D, e, flavor, **kw).value


def disk_condenser(r: float, h: float, n: int = 2) -> tuple[CellSet, GridDomain]:
    """``E = {|x| <= r}`` (the centre node when ``r = 0``) inside the unit disk."""
    D = GridDomain.disk(1.0, h, n)
    rad = np.sqrt(sum(x * x for x in D.coordinates()))
    mask = rad <= r * (1 + 1e-12) if r > 0 else rad == rad.min()
    return CellSet(mask), D


def cross_validate_radial(r: float, n: int = 2, e=(2, 2), h: float = 0.02, M: int = 2000, radial_opts=None):
    """``(grid_value, radial_value, relative_gap)`` for the disk condenser."""
    from .radial_capacity import Condenser, solve_condenser

    e = _as_exponents(e)
    E, D = disk_condenser(r, h, n)
    grid = discrete_capacity(E, D, e)
    radial = solve_condenser(Condenser(n, r, e.p, e.q), M, radial_opts).value
    return grid, radial, abs(grid - radial) / radial


# ---------------------------------------------------------------------------
# randomized axiom checks


@dataclass
class AxiomReport:
    p: float
    q: float
    flavor: str
    trials: int
    seed: int
    passed: dict
    failing_seeds: dict

    @property
    def ok(self) -> bool:
        return not any(self.failing_seeds.values())

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "q": "inf" if math.isinf(self.q) else self.q,
            "flavor": self.flavor,
            "trials": self.trials,
            "seed": self.seed,
            "axioms": {
                a: {"passed": self.passed[a], "failing_seeds": self.failing_seeds[a]} for a in AXIOMS
            },
        }


def _random_box(rng: np.random.Generator, allowed: np.ndarray, max_half: int = 3) -> np.ndarray:
    """A random box of nodes around a random allowed node, clipped to ``allowed``."""
    idx = np.argwhere(allowed)
    c = idx[rng.integers(len(idx))]
    box = np.zeros_like(allowed)
    sl = []
    for ci, m in zip(c, allowed.shape):
        a, b = rng.integers(0, max_half + 1, size=2)
        sl.append(slice(max(ci - a, 0), min(ci + b + 1, m)))
    box[tuple(sl)] = True
    return box & allowed


def _erode(interior: np.ndarray, k: int) -> np.ndarray:
    """Remove nodes within ``k`` steps (Chebyshev) of the complement."""
    out = interior.copy()
    for _ in range(k):
        pad = np.pad(out, 1, constant_values=False)
        nxt = out.copy()
        for shift in np.ndindex(*(3,) * out.ndim):
            sl = tuple(slice(s, s + m) for s, m in zip(shift, out.shape))
            nxt &= pad[sl]
        out = nxt
    return out


def _split_domain(rng, D: GridDomain):
    """Two subdomains of ``D`` separated by a band of two boundary layers along axis 0."""
    inter = D.interior
    rows = np.flatnonzero(inter.reshape(D.shape[0], -1).any(axis=1))
    cands = [s for s in range(rows.min() + 1, rows.max() - 1)]
    if not cands:
        return None
    s = cands[rng.integers(len(cands))]
    ax0 = np.arange(D.shape[0]).reshape((-1,) + (1,) * (D.n - 1))
    left = inter & (ax0 < s)
    right = inter & (ax0 > s + 1)
    if not left.any() or not right.any():
        return None
    return left, right


def _trial(D: GridDomain, e: LorentzExponents, flavor: str, seed: int, tol: float, kw: dict) -> dict:
    rng = np.random.default_rng(seed)

    def cap(mask, dom):
        return discrete_capacity(CellSet(mask), dom, e, flavor, **kw)

    def leq(a, b):
        return a <= b + tol * max(abs(a), abs(b))

    out = {}
    inter = D.interior
    # monotonicity
    E1 = _random_box(rng, inter)
    E2 = E1 | _random_box(rng, inter)
    out["monotonicity"] = leq(cap(E1, D), cap(E2, D))
    # domain monotonicity: D1 is D with extra boundary layers
    inner = _erode(inter, int(rng.integers(1, 3)))
    if not inner.any():
        inner = _erode(inter, 1) if _erode(inter, 1).any() else inter
    D1 = D.with_boundary(~inner)
    E = _random_box(rng, inner)
    out["domain_monotonicity"] = leq(cap(E, D), cap(E, D1))
    # subadditivity
    a = e.q / e.p if flavor == "pq" else 1.0 / e.p
    E1, E2 = _random_box(rng, inter), _random_box(rng, inter)
    out["subadditivity"] = leq(cap(E1 | E2, D) ** a, cap(E1, D) ** a + cap(E2, D) ** a)
    # disjoint additivity lower bound
    split = _split_domain(rng, D)
    if split is None:
        out["disjoint_additivity"] = True
    else:
        left, right = split
        F1, F2 = _random_box(rng, left), _random_box(rng, right)
        whole = D.with_boundary(~(left | right))
        c1 = cap(F1, D.with_boundary(~left))
        c2 = cap(F2, D.with_boundary(~right))
        out["disjoint_additivity"] = leq(c1 + c2, cap(F1 | F2, whole))
    return out


def axiom_suite(
    D: GridDomain, e, trials: int = 50, seed: int = 0, flavor: str = "pq", tol: float = 1e-4, **kw
) -> AxiomReport:
    """Check the capacity axioms on ``trials`` random instances built on ``D``.

    Trial ``i`` is fully determined by ``seed + i``; failing trials are listed
    by that seed so they can be replayed.
    """
    e = _as_exponents(e)
    if e.q > e.p:
        raise ValueError("the axiom suite covers the convex regime q <= p")
    if trials < 0:
        raise ValueError("trials must be nonnegative")
    passed = {a: 0 for a in AXIOMS}
    failing = {a: [] for a in AXIOMS}
    for i in range(trials):
        s = seed + i
        for a, ok in _trial(D, e, flavor, s, tol, kw).items():
            if ok:
                passed[a] += 1
            else:
                failing[a].append(s)
    return AxiomReport(e.p, e.q, flavor, trials, seed, passed, failing)


def random_chain(D: GridDomain, rng: np.random.Generator, length: int = 5, stable: int = 2) -> list:
    """Increasing chain of random boxes that repeats its last set ``stable`` times."""
    inter = D.interior
    cur = _random_box(rng, inter, 2)
    chain = [cur]
    for _ in range(length - 1):
        cur = cur | _random_box(rng, inter, 2)
        chain.append(cur)
    chain.extend([cur] * stable)
    return [CellSet(c) for c in chain]


def mct_check(chain: Sequence[CellSet], D: GridDomain, e, tol: float = 1e-4, **kw) -> bool:
    """Capacities along an increasing chain are nondecreasing and end at ``cap(union)``.

    Only meaningful for ``q = 1`` with ``p > n`` or ``p = n > 1``.
    """
    e = _as_exponents(e)
    if e.q != 1 or not (e.p > D.n or (e.p == D.n and D.n > 1)):
        raise ValueError("the monotone convergence check needs q = 1 and p > n (or p = n > 1)")
    if not chain:
        raise ValueError("chain must be nonempty")
    for a, b in zip(chain, chain[1:]):
        if not a.issubset(b):
            raise ValueError("chain is not increasing")
    union = chain[0]
    for c in chain[1:]:
        union = union | c
    caps = [discrete_capacity(c, D, e, **kw) for c in chain]
    cap_union = discrete_capacity(CellSet(union.mask.copy()), D, e, **kw)
    mono = all(a <= b + tol * max(a, b) for a, b in zip(caps, caps[1:]))
    return bool(mono and abs(caps[-1] - cap_union) <= tol * cap_union)
