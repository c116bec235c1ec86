"""Capacity of concentric condensers ``(closed B(0, r), B(0, 1))`` via radial profiles.

For a radial admissible function ``u(x) = f(|x|)`` the gradient magnitude is
``|f'|(|x|)``, so ``||grad u||_{p,q}`` only depends on the slopes of ``f`` and
the measures of the annuli they live on.  With a piecewise-linear ``f`` on a
uniform knot grid in ``[r, 1]`` the slopes become the optimisation variables:
nonnegative magnitudes ``s_j`` with ``sum(s_j * dt) = 1``.  The map from slopes
to the gradient step function is linear and, for ``q <= p``, the quasinorm is
a norm, so the problem is convex and is handled by projected subgradient
descent.  The cone ``u_r`` (constant slope) is always kept as a feasible
incumbent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import CertificationError
from .finite_difference import gradient_magnitude
from .lorentz_norms import LorentzExponents, NormResult, parse_exponent, power_increments, quasinorm_pq
from .optimize import project_hyperplane, project_scaled_simplex, projected_subgradient
from .rearrange import SampledGrid, StepFunction, rearrange_sampled, rearrangement

__all__ = [
    "unit_ball_volume",
    "DimensionConstants",
    "RadialProfile",
    "Condenser",
    "SolverOptions",
    "CondenserEstimate",
    "GlobalPointEstimate",
    "gradient_profile",
    "radial_function_quasinorm",
    "sharp_lower_bound",
    "sharp_upper_bound",
    "cone_objective",
    "profile_lower_inequality",
    "solve_condenser",
    "point_relative_capacity",
    "global_point_capacity",
    "embedding_check",
    "sweep",
    "RadialObjective",
]

# an iterate must beat the closed-form cone value by more than this to replace it
INCUMBENT_RTOL = 1e-12


def unit_ball_volume(n: int) -> float:
    """Lebesgue measure of the unit ball in R^n."""
    if int(n) != n or n < 1:
        raise ValueError("dimension must be a positive integer")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class DimensionConstants:
    n: int
    ball_volume: float
    sphere_area: float
    n_conj: float

    @classmethod
    def for_dimension(cls, n: int) -> "DimensionConstants":
        vol = unit_ball_volume(n)
        n_conj = math.inf if n == 1 else n / (n - 1)
        return cls(int(n), vol, n * vol, n_conj)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Piecewise-linear radial profile ``f`` on ``[knots[0], knots[-1]]``.

    ``f = 1`` at the inner radius (and inside it), ``f = 0`` at the outer radius
    (and outside it).  The outer radius is 1 for condenser problems; scaled
    cones ``u_r`` use a different one.
    """

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.knots, dtype=float).reshape(-1)
        f = np.array(self.values, dtype=float).reshape(-1)
        if t.size < 2 or t.shape != f.shape:
            raise ValueError("need at least two knots and one value per knot")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ValueError("knots must be nonnegative and strictly increasing")
        if f[0] != 1.0 or f[-1] != 0.0:
            raise ValueError("profile must equal 1 at the inner radius and 0 at the outer radius")
        if np.any((f < 0) | (f > 1)):
            raise ValueError("profile values must lie in [0, 1]")
        t.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "knots", t)
        object.__setattr__(self, "values", f)

    @classmethod
    def cone(cls, r: float = 0.0, M: int = 1, radius: float = 1.0) -> "RadialProfile":
        """The cone ``u_r``: 1 on ``B(0, r)``, linear down to 0 at ``radius``."""
        if not 0 <= r < radius:
            raise ValueError("need 0 <= r < radius")
        return cls.from_slopes(r, np.full(M, 1.0 / (radius - r)), radius)

    @classmethod
    def from_slopes(cls, r: float, slopes: np.ndarray, radius: float = 1.0) -> "RadialProfile":
        """Nonincreasing profile with slope magnitudes ``slopes`` on a uniform grid.

        Slopes are rescaled so the drop is exactly 1.
        """
        s = np.asarray(slopes, dtype=float)
        if s.size < 1 or np.any(s < 0) or s.sum() == 0:
            raise ValueError("slopes must be nonnegative and not all zero")
        t = np.linspace(r, radius, s.size + 1)
        drops = s / s.sum()
        f = 1.0 - np.concatenate(([0.0], np.cumsum(drops)))
        f[-1] = 0.0
        return cls(t, np.clip(f, 0.0, 1.0))

    @property
    def inner_radius(self) -> float:
        return float(self.knots[0])

    @property
    def radius(self) -> float:
        return float(self.knots[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def total_variation(self) -> float:
        """``||f'||_{L^1}``, at least 1 because of the boundary values."""
        return float(np.sum(np.abs(np.diff(self.values))))

    def __call__(self, rho):
        return np.interp(rho, self.knots, self.values, left=1.0, right=0.0)

    def to_json(self) -> dict:
        return {"knots": self.knots.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "RadialProfile":
        try:
            return cls(obj["knots"], obj["values"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed radial profile JSON: {exc}") from exc


@dataclass(frozen=True)
class Condenser:
    n: int
    r: float
    p: float
    q: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("condensers need an integer dimension n >= 2")
        if not 0 <= self.r < 1:
            raise ValueError("inner radius must lie in [0, 1)")
        e = LorentzExponents(self.p, self.q)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", e.p)
        object.__setattr__(self, "q", e.q)

    @property
    def exponents(self) -> LorentzExponents:
        return LorentzExponents(self.p, self.q)

    @property
    def is_sharp_case(self) -> bool:
        """``(p, q) = (n, 1)``, where the two-sided closed-form bounds apply."""
        return self.p == self.n and self.q == 1


@dataclass
class SolverOptions:
    max_iter: int = 20_000
    step0: Optional[float] = None  # None: 10% of the cone's norm per unit (projected) subgradient
    average_from: float = 0.5
    tol: float = 1e-3
    heuristic: bool = False  # allow q > p (no convexity, multi-start)
    n_starts: int = 4
    seed: int = 0
    monotone: bool = True  # False: signed slopes, constraint sum(s dt) = 1 only


@dataclass
class CondenserEstimate:
    n: int
    p: float
    q: float
    r: float
    value: float
    lower: float
    upper: float
    iterations: int
    residual: float
    gap: float
    converged: bool
    certified: bool
    incumbent: str
    profile: RadialProfile = field(repr=False)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "q": "inf" if math.isinf(self.q) else self.q,
            "r": self.r,
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "iterations": self.iterations,
            "residual": self.residual,
            "certified": self.certified,
        }


def gradient_profile(f: RadialProfile, n: int) -> StepFunction:
    """Rearranged ``|grad u|`` for ``u(x) = f(|x|)`` in dimension ``n``."""
    omega = unit_ball_volume(n)
    t = f.knots
    meas = omega * (t[1:] ** n - t[:-1] ** n)
    return rearrangement(StepFunction(np.abs(f.slopes), meas))


def sharp_lower_bound(c: Condenser) -> float:
    n, r = c.n, c.r
    return n**n * unit_ball_volume(n) * (1 - r**n) ** (1 - n)


def sharp_upper_bound(c: Condenser) -> float:
    n, r = c.n, c.r
    return n**n * unit_ball_volume(n) * (1 - r**n) / (1 - r) ** n


def cone_objective(c: Condenser) -> float:
    """``||grad u_r||_{p,q}^p`` in closed form (constant slope ``1/(1-r)`` on the annulus)."""
    if c.is_sharp_case:
        return sharp_upper_bound(c)
    meas = unit_ball_volume(c.n) * (1 - c.r**c.n)
    if math.isinf(c.q):
        N = meas ** (1 / c.p)
    else:
        N = (c.p / c.q) ** (1 / c.q) * meas ** (1 / c.p)
    return (N / (1 - c.r)) ** c.p


def profile_lower_inequality(f: RadialProfile, n: int) -> tuple[float, float]:
    """Both sides of the slope-profile lower estimate at ``(n, 1)``.

    ``lhs = ||g||_{n,1}`` for the rearranged gradient ``g``;
    ``rhs = n Omega_n^{1/n} (1 - r^n)^{-1/n'} ||f'||_{L^1}``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    omega = unit_ball_volume(n)
    r = f.inner_radius
    lhs = quasinorm_pq(gradient_profile(f, n), (n, 1)).value
    rhs = n * omega ** (1 / n) * (1 - r**n) ** (-(n - 1) / n) * f.total_variation()
    return lhs, rhs


class RadialObjective:
    """``J(s) = ||g_s||_{p,q}^p`` for slope magnitudes on a uniform knot grid.

    Calling it returns the value and one subgradient.  Ties in the sort are
    broken by knot index, which selects one valid subgradient.
    """

    def __init__(self, c: Condenser, M: int):
        self.c = c
        self.M = M
        self.dt = (1 - c.r) / M
        t = np.linspace(c.r, 1.0, M + 1)
        self.meas = unit_ball_volume(c.n) * (t[1:] ** c.n - t[:-1] ** c.n)

    def __call__(self, s: np.ndarray) -> tuple[float, np.ndarray]:
        p, q = self.c.p, self.c.q
        a = np.abs(s)
        order = np.argsort(-a, kind="stable")
        sa = a[order]
        T = np.concatenate(([0.0], np.cumsum(self.meas[order])))
        g = np.zeros_like(a)
        if math.isinf(q):
            vals = sa * T[1:] ** (1 / p)
            k = int(np.argmax(vals))
            N = float(vals[k])
            if N > 0:
                g[order[k]] = p * N ** (p - 1) * T[k + 1] ** (1 / p)
        else:
            w = (p / q) * power_increments(T, q / p)
            Nq = float((sa**q) @ w)
            N = Nq ** (1 / q)
            if N > 0:
                dq = sa ** (q - 1) if q != 1 else np.ones_like(sa)
                g[order] = p * N ** (p - q) * dq * w
        return N**p, g * np.sign(s) if np.any(s < 0) else g


def _step0(obj: RadialObjective, s0: np.ndarray) -> float:
    _, g = obj(s0)
    gt = g - g.mean()
    gn = np.linalg.norm(gt) or np.linalg.norm(g)
    return 0.1 * np.linalg.norm(s0) / gn if gn > 0 else 1.0


def solve_condenser(
    c: Condenser, M: int = 2000, opts: Optional[SolverOptions] = None
) -> CondenserEstimate:
    """Minimise ``||grad u||_{p,q}^p`` over piecewise-linear radial profiles with ``M`` pieces."""
    opts = opts or SolverOptions()
    if M < 2:
        raise ValueError("need at least M = 2 knot intervals")
    convex = c.q <= c.p
    if not convex and not opts.heuristic:
        raise ValueError("q > p is outside the convex regime; pass heuristic=True to run anyway")

    obj = RadialObjective(c, M)
    total = M / (1 - c.r)  # sum of slopes when sum(s * dt) = 1
    s_cone = np.full(M, 1.0 / (1 - c.r))
    cone_val = cone_objective(c)

    if opts.monotone:
        def project(x):
            return project_scaled_simplex(x, total)

        def linear_min(g):
            return total * float(g.min())
    else:
        ones = np.ones(M)

        def project(x):
            return project_hyperplane(x, ones, total)

        linear_min = None

    step0 = opts.step0 if opts.step0 is not None else _step0(obj, s_cone)
    starts = [s_cone]
    if not convex:
        rng = np.random.default_rng(opts.seed)
        starts += [rng.dirichlet(np.ones(M)) * total for _ in range(max(opts.n_starts - 1, 0))]

    best = None
    for x0 in starts:
        res = projected_subgradient(
            obj, project, x0, step0, max_iter=opts.max_iter,
            average_from=opts.average_from, linear_min=linear_min if convex else None,
        )
        if best is None or res.value < best.value:
            best = res

    if best.value < cone_val * (1 - INCUMBENT_RTOL):
        value, incumbent = best.value, "iterate"
        slopes = np.abs(best.x)
        if opts.monotone:
            profile = RadialProfile.from_slopes(c.r, slopes)
        else:
            t = np.linspace(c.r, 1.0, M + 1)
            vals = np.clip(1.0 - np.concatenate(([0.0], np.cumsum(best.x * obj.dt))), 0, 1)
            vals[0], vals[-1] = 1.0, 0.0
            profile = RadialProfile(t, vals)
    else:
        value, incumbent = cone_val, "cone"
        profile = RadialProfile.cone(c.r, M)

    lower = upper = math.nan
    sandwich = True
    if c.is_sharp_case:
        lower, upper = sharp_lower_bound(c), sharp_upper_bound(c)
        sandwich = lower <= value <= upper
    gap = max(value - best.lower_bound, 0.0) / value if math.isfinite(best.lower_bound) else math.inf
    converged = best.residual <= opts.tol
    return CondenserEstimate(
        n=c.n, p=c.p, q=c.q, r=c.r, value=float(value), lower=lower, upper=upper,
        iterations=best.iterations, residual=best.residual, gap=float(gap),
        converged=converged, certified=bool(convex and converged and sandwich),
        incumbent=incumbent, profile=profile,
    )


def point_relative_capacity(
    n: int, M: int = 2000, opts: Optional[SolverOptions] = None, rtol: float = 5e-3
) -> CondenserEstimate:
    """``cap_{n,1}`` of a point relative to the unit ball, checked against ``n^n Omega_n``."""
    est = solve_condenser(Condenser(n, 0.0, n, 1), M, opts)
    target = n**n * unit_ball_volume(n)
    if abs(est.value - target) > rtol * target:
        raise CertificationError(
            f"point capacity {est.value!r} deviates from n^n Omega_n = {target!r} by more than {rtol}"
        )
    return est


def radial_function_quasinorm(
    f: Union[RadialProfile, Callable],
    n: int,
    e,
    radius: Optional[float] = None,
    rtol: float = 1e-8,
    start: int = 64,
    max_pieces: int = 2**21,
) -> NormResult:
    """``||u||_{p,q}`` of ``u(x) = f(|x|)`` supported in ``B(0, radius)``.

    ``f`` is a :class:`RadialProfile` or a vectorised callable on
    ``[0, radius]``.  The profile is sampled at midpoints of a uniform radial
    grid (one step piece per annulus) and the grid is doubled until two
    successive values agree to ``rtol``.
    """
    if isinstance(f, RadialProfile):
        radius = f.radius if radius is None else radius
    elif radius is None:
        radius = 1.0
    omega = unit_ball_volume(n)
    K = start
    prev = None
    while True:
        rho = np.linspace(0.0, radius, K + 1)
        mid = 0.5 * (rho[:-1] + rho[1:])
        vals = np.abs(np.asarray(f(mid), dtype=float))
        meas = omega * power_increments(rho, n)
        keep = vals > 0
        val = quasinorm_pq(StepFunction(vals[keep], meas[keep]), e).value if keep.any() else 0.0
        if prev is not None:
            diff = abs(val - prev)
            if diff <= rtol * abs(val) or K >= max_pieces:
                return NormResult(val, "quadrature", diff)
        prev = val
        K *= 2


@dataclass
class GlobalPointEstimate:
    n: int
    radii: np.ndarray
    estimates: np.ndarray
    target: float
    function_norm: float
    gradient_norm: float

    @property
    def value(self) -> float:
        return float(self.estimates[-1])

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "radii": self.radii.tolist(),
            "estimates": self.estimates.tolist(),
            "value": self.value,
            "target": self.target,
        }


def global_point_capacity(n: int, r_sequence: Sequence[float]) -> GlobalPointEstimate:
    """Cone-family upper estimates ``(r ||u||_{n,1} + ||grad u||_{n,1})^n`` of ``Cap_{n,1}({0})``.

    ``u`` is the unit cone; scaling it to support radius ``r`` multiplies the
    function norm by ``r`` and leaves the gradient norm unchanged.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    radii = np.asarray(r_sequence, dtype=float)
    if radii.size < 1 or np.any(radii <= 0) or np.any(np.diff(radii) >= 0):
        raise ValueError("r_sequence must be positive and strictly decreasing")
    cone = RadialProfile.cone(0.0)
    e = (n, 1)
    u_norm = radial_function_quasinorm(cone, n, e).value
    grad_norm = quasinorm_pq(gradient_profile(cone, n), e).value
    est = (radii * u_norm + grad_norm) ** n
    target = n**n * unit_ball_volume(n)
    if np.any(np.diff(est) > 0) or np.any(est < target * (1 - 1e-12)):
        raise CertificationError("cone estimates are not decreasing towards n^n Omega_n")
    return GlobalPointEstimate(n, radii, est, target, u_norm, grad_norm)


def embedding_check(u: Union[RadialProfile, SampledGrid], n: Optional[int] = None) -> tuple[float, float]:
    """``(sup |u|, ||grad u||_{n,1} / (n Omega_n^{1/n}))`` for ``u`` vanishing on the boundary."""
    if isinstance(u, RadialProfile):
        if n is None or n < 2:
            raise ValueError("radial embedding check needs n >= 2")
        sup = float(np.max(np.abs(u.values)))
        grad = gradient_profile(u, n)
    elif isinstance(u, SampledGrid):
        n = u.n if n is None else n
        if n != u.n or n < 2:
            raise ValueError("grid embedding check needs a 2-d grid")
        v = u.values
        edges = np.concatenate([v[0], v[-1], v[:, 0], v[:, -1]])
        if np.any(edges != 0):
            raise ValueError("grid function must vanish on the boundary cells")
        sup = float(np.max(np.abs(v)))
        grad = rearrange_sampled(SampledGrid(n, u.h, gradient_magnitude(v, u.h)))
    else:
        raise TypeError("u must be a RadialProfile or a SampledGrid")
    norm = quasinorm_pq(grad, (n, 1)).value
    return sup, norm / (n * unit_ball_volume(n) ** (1 / n))


def sweep(
    n: int = 2, rmax: float = 0.9, steps: int = 10, M: int = 400, opts: Optional[SolverOptions] = None,
    p: Optional[float] = None, q=1,
) -> list[CondenserEstimate]:
    """Solve the condenser on ``r = linspace(0, rmax, steps)``."""
    if steps < 1:
        raise ValueError("steps must be positive")
    p = n if p is None else p
    q = parse_exponent(q)
    return [solve_condenser(Condenser(n, float(r), p, q), M, opts) for r in np.linspace(0.0, rmax, steps)]
