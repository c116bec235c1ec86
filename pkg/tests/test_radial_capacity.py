import math

import numpy as np
import pytest

from sobolev_lorentz import (
    CertificationError,
    Condenser,
    DimensionConstants,
    RadialProfile,
    SampledGrid,
    SolverOptions,
    embedding_check,
    global_point_capacity,
    gradient_profile,
    point_relative_capacity,
    profile_lower_inequality,
    quasinorm_pq,
    radial_function_quasinorm,
    sharp_lower_bound,
    sharp_upper_bound,
    solve_condenser,
    sweep,
    unit_ball_volume,
)
from sobolev_lorentz.radial_capacity import RadialObjective, cone_objective

import oracles

FAST = SolverOptions(max_iter=2000)


def random_profile(rng, r=0.0, M=None, radius=1.0):
    M = int(rng.integers(2, 40)) if M is None else M
    s = rng.exponential(size=M) * (rng.random(M) < 0.8)
    if s.sum() == 0:
        s[0] = 1.0
    return RadialProfile.from_slopes(r, s, radius)


class TestConstants:
    @pytest.mark.parametrize("n", range(1, 13))
    def test_ball_volume(self, n):
        assert unit_ball_volume(n) == pytest.approx(oracles.unit_ball_volume(n), rel=1e-14)

    def test_low_dimensions(self):
        assert unit_ball_volume(1) == pytest.approx(2.0, abs=1e-15)
        assert unit_ball_volume(2) == pytest.approx(math.pi, abs=1e-15)

    def test_dimension_constants(self):
        c = DimensionConstants.for_dimension(3)
        assert c.sphere_area == 3 * c.ball_volume
        assert c.n_conj == 1.5

    def test_rejects(self):
        with pytest.raises(ValueError):
            unit_ball_volume(0)


class TestRadialProfile:
    def test_cone(self):
        f = RadialProfile.cone(0.5, 4)
        np.testing.assert_allclose(f.slopes, -2.0)
        assert f(0.25) == 1.0 and f(1.5) == 0.0

    def test_boundary_values_enforced(self):
        with pytest.raises(ValueError):
            RadialProfile([0, 1], [0.9, 0])
        with pytest.raises(ValueError):
            RadialProfile([0, 0.5, 1], [1, 1.2, 0])
        with pytest.raises(ValueError):
            RadialProfile([0, 0.5, 0.5, 1], [1, 0.5, 0.5, 0])

    def test_from_slopes_feasible(self, rng):
        for _ in range(50):
            r = rng.uniform(0, 0.9)
            f = random_profile(rng, r)
            dt = np.diff(f.knots)
            assert np.sum(-f.slopes * dt) == pytest.approx(1.0, abs=1e-12)
            assert np.all(f.slopes <= 0)

    def test_json_round_trip(self):
        f = RadialProfile.cone(0.2, 3)
        g = RadialProfile.from_json(f.to_json())
        np.testing.assert_array_equal(g.values, f.values)
        with pytest.raises(ValueError):
            RadialProfile.from_json({"knots": [0, 1]})


class TestGradientProfile:
    def test_unit_cone(self):
        assert gradient_profile(RadialProfile.cone(0.0), 2).pieces == [(1.0, math.pi)]

    def test_cone_half(self):
        (v, m), = gradient_profile(RadialProfile.cone(0.5), 2).pieces
        assert v == 2.0
        assert m == pytest.approx(0.75 * math.pi, rel=1e-15)
        g = gradient_profile(RadialProfile.cone(0.5, 10), 2)
        np.testing.assert_allclose(g.values, 2.0, rtol=1e-13)
        assert g.total_measure == pytest.approx(0.75 * math.pi, rel=1e-13)

    def test_flat_piece_dropped(self):
        f = RadialProfile([0.0, 0.5, 1.0], [1.0, 1.0, 0.0])
        assert gradient_profile(f, 2).pieces == [(2.0, pytest.approx(0.75 * math.pi))]


class TestRadialFunctionQuasinorm:
    def test_unit_cone(self):
        val = radial_function_quasinorm(RadialProfile.cone(0.0), 2, (2, 1)).value
        assert val == pytest.approx(math.sqrt(math.pi), abs=1e-6)

    @pytest.mark.parametrize("n", [2, 3])
    def test_cone_closed_form(self, n):
        val = radial_function_quasinorm(RadialProfile.cone(0.0), n, (n, 1)).value
        assert val == pytest.approx(n / 2 * unit_ball_volume(n) ** (1 / n), rel=1e-7)

    @pytest.mark.parametrize("n", [2, 3])
    def test_indicator_like(self, n):
        val = radial_function_quasinorm(lambda t: np.ones_like(t), n, (n, 1)).value
        assert val == pytest.approx(n * unit_ball_volume(n) ** (1 / n), rel=1e-12)

    @pytest.mark.parametrize("r", [0.1, 0.5, 2.0])
    def test_scaled_cone(self, r):
        val = radial_function_quasinorm(RadialProfile.cone(0.0, radius=r), 2, (2, 1)).value
        assert val == pytest.approx(r * math.sqrt(math.pi), rel=1e-7)


class TestSharpBounds:
    def test_point(self):
        c = Condenser(2, 0.0, 2, 1)
        assert sharp_lower_bound(c) == pytest.approx(4 * math.pi, rel=1e-15)
        assert sharp_upper_bound(c) == sharp_lower_bound(c)

    def test_half(self):
        c = Condenser(2, 0.5, 2, 1)
        assert sharp_lower_bound(c) == pytest.approx(16 * math.pi / 3, rel=1e-15)
        assert sharp_upper_bound(c) == pytest.approx(12 * math.pi, rel=1e-15)

    def test_three_dimensions(self):
        assert sharp_lower_bound(Condenser(3, 0.0, 3, 1)) == pytest.approx(36 * math.pi, rel=1e-15)

    def test_ordered(self):
        for n in range(2, 8):
            for r in np.linspace(0, 0.99, 50):
                c = Condenser(n, r, n, 1)
                assert sharp_lower_bound(c) <= sharp_upper_bound(c) * (1 + 1e-15)

    @pytest.mark.parametrize("n,r", [(2, 0.0), (2, 0.5), (3, 0.3), (4, 0.8)])
    def test_cone_attains_upper(self, n, r):
        c = Condenser(n, r, n, 1)
        val = quasinorm_pq(gradient_profile(RadialProfile.cone(r, 7), n), (n, 1)).value ** n
        assert val == pytest.approx(sharp_upper_bound(c), rel=1e-12)
        assert cone_objective(c) == sharp_upper_bound(c)


class TestProfileLowerInequality:
    def test_cone_equality(self):
        lhs, rhs = profile_lower_inequality(RadialProfile.cone(0.0), 2)
        assert lhs == pytest.approx(2 * math.sqrt(math.pi), rel=1e-14)
        assert rhs == pytest.approx(lhs, rel=1e-14)

    def test_random_profiles(self, rng):
        for _ in range(200):
            f = random_profile(rng, 0.3)
            lhs, rhs = profile_lower_inequality(f, 2)
            assert lhs >= rhs * (1 - 1e-12)

    def test_concentrated_near_boundary_is_strict(self):
        s = np.zeros(20)
        s[-1] = 1.0
        lhs, rhs = profile_lower_inequality(RadialProfile.from_slopes(0.0, s), 2)
        assert lhs > rhs * 1.01


class TestObjective:
    @pytest.mark.parametrize("p,q", [(2, 1), (2, 2), (3, 1.5), (2, math.inf)])
    def test_subgradient_matches_finite_differences(self, rng, p, q):
        obj = RadialObjective(Condenser(2, 0.3, p, q), 12)
        for _ in range(5):
            s = rng.uniform(0.5, 2.0, size=12)
            J, g = obj(s)
            if math.isinf(q):
                mask = np.eye(12, dtype=bool)[np.argmax(g)] | (g == 0)
            else:
                mask = np.ones(12, dtype=bool)
            for j in np.flatnonzero(mask)[:12]:
                e = np.zeros(12)
                e[j] = 1e-6
                fd = (obj(s + e)[0] - obj(s - e)[0]) / 2e-6
                assert fd == pytest.approx(g[j], rel=1e-4, abs=1e-8 * J)

    @pytest.mark.parametrize("p,q", [(2, 1), (2, 2), (3, 1.5), (3, 3)])
    def test_convexity_witness(self, rng, p, q):
        obj = RadialObjective(Condenser(2, 0.2, p, q), 15)
        for _ in range(100):
            a, b = rng.exponential(size=15), rng.exponential(size=15)
            lam = rng.uniform()
            mid = obj(lam * a + (1 - lam) * b)[0]
            assert mid <= lam * obj(a)[0] + (1 - lam) * obj(b)[0] + 1e-12

    def test_cone_value(self):
        c = Condenser(2, 0.5, 2, 2)
        s = np.full(50, 2.0)
        assert RadialObjective(c, 50)(s)[0] == pytest.approx(cone_objective(c), rel=1e-12)


class TestSolveCondenser:
    def test_point_capacity_2d(self):
        est = solve_condenser(Condenser(2, 0.0, 2, 1), 2000, FAST)
        assert est.value == pytest.approx(4 * math.pi, rel=5e-3)
        assert est.lower <= est.value <= est.upper
        assert est.certified

    def test_classical_capacity(self):
        est = solve_condenser(Condenser(2, 0.5, 2, 2), 400)
        assert est.value == pytest.approx(oracles.annulus_capacity_2d(0.5), rel=1e-2)
        assert est.value < cone_objective(Condenser(2, 0.5, 2, 2))
        assert est.incumbent == "iterate"

    def test_half_sandwich(self):
        est = solve_condenser(Condenser(2, 0.5, 2, 1), 200, FAST)
        assert 16 * math.pi / 3 <= est.value <= 12 * math.pi

    def test_profile_feasible(self):
        est = solve_condenser(Condenser(2, 0.5, 2, 2), 200, FAST)
        f = est.profile
        dt = np.diff(f.knots)
        assert np.sum(-f.slopes * dt) == pytest.approx(1.0, abs=1e-12)
        assert np.all(f.slopes <= 0)
        val = quasinorm_pq(gradient_profile(f, 2), (2, 2)).value ** 2
        assert val == pytest.approx(est.value, rel=1e-9)

    def test_rejects_nonconvex_without_flag(self):
        with pytest.raises(ValueError):
            solve_condenser(Condenser(2, 0.5, 2, 3), 50)

    def test_heuristic_not_certified(self):
        est = solve_condenser(Condenser(2, 0.5, 2, 3), 50, SolverOptions(max_iter=500, heuristic=True, n_starts=2))
        assert not est.certified
        assert est.value <= cone_objective(Condenser(2, 0.5, 2, 3)) * (1 + 1e-12)

    def test_rejects_small_M(self):
        with pytest.raises(ValueError):
            solve_condenser(Condenser(2, 0.5, 2, 1), 1)

    def test_nonconvergence_reported(self):
        est = solve_condenser(Condenser(2, 0.5, 2, 2), 200, SolverOptions(max_iter=20, tol=1e-12))
        assert not est.converged and not est.certified

    def test_monotone_in_r(self):
        vals = [solve_condenser(Condenser(2, r, 2, 1.5), 100, FAST).value for r in np.arange(10) / 10]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_refinement_does_not_increase(self):
        opts = SolverOptions(max_iter=5000)
        coarse = solve_condenser(Condenser(2, 0.5, 2, 2), 100, opts)
        fine = solve_condenser(Condenser(2, 0.5, 2, 2), 200, opts)
        assert fine.value <= coarse.value * (1 + opts.tol)

    def test_signed_slopes_never_better(self):
        c = Condenser(2, 0.3, 2, 1.5)
        mono = solve_condenser(c, 30, SolverOptions(max_iter=3000))
        signed = solve_condenser(c, 30, SolverOptions(max_iter=3000, monotone=False))
        assert signed.value >= mono.value * (1 - 1e-3)

    def test_json_keys(self):
        est = solve_condenser(Condenser(2, 0.0, 2, 1), 10, FAST)
        assert set(est.to_json()) == {"n", "p", "q", "r", "value", "lower", "upper", "iterations", "residual", "certified"}


class TestPointCapacity:
    @pytest.mark.parametrize("n,target", [(2, 4 * math.pi), (3, 36 * math.pi), (4, 128 * math.pi**2)])
    def test_point(self, n, target):
        est = point_relative_capacity(n, 500, FAST)
        assert est.value == pytest.approx(target, rel=5e-3)

    def test_raises_when_off(self):
        with pytest.raises(CertificationError):
            point_relative_capacity(2, 500, FAST, rtol=-1.0)


class TestGlobalPoint:
    def test_small_radius(self):
        est = global_point_capacity(2, [1e-2, 1e-4, 1e-6])
        assert est.value == pytest.approx(math.pi * (2 + 1e-6) ** 2, rel=1e-9)
        assert abs(est.value - 4 * math.pi) / (4 * math.pi) < 1e-5

    def test_unit_radius(self):
        assert global_point_capacity(2, [1.0]).value == pytest.approx(9 * math.pi, rel=1e-9)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_above_point_value(self, n):
        est = global_point_capacity(n, [0.5, 0.1, 0.01])
        assert np.all(est.estimates >= n**n * unit_ball_volume(n))
        assert np.all(np.diff(est.estimates) < 0)

    def test_rejects_increasing(self):
        with pytest.raises(ValueError):
            global_point_capacity(2, [0.1, 0.2])


class TestEmbedding:
    @pytest.mark.parametrize("n", [2, 3, 5])
    @pytest.mark.parametrize("radius", [0.2, 1.0, 3.0])
    def test_cone_equality(self, n, radius):
        sup, bound = embedding_check(RadialProfile.cone(0.0, 5, radius), n)
        assert sup == 1.0
        assert bound == pytest.approx(1.0, abs=1e-10)

    def test_random_profiles(self, rng):
        for _ in range(200):
            f = random_profile(rng, rng.uniform(0, 0.9))
            sup, bound = embedding_check(f, int(rng.integers(2, 5)))
            assert sup <= bound * (1 + 1e-12)

    def test_grid(self, rng):
        for _ in range(50):
            v = np.zeros((9, 9))
            v[1:-1, 1:-1] = rng.normal(size=(7, 7))
            sup, bound = embedding_check(SampledGrid(2, 0.1, v))
            assert sup <= bound

    def test_grid_boundary_required(self):
        with pytest.raises(ValueError):
            embedding_check(SampledGrid(2, 0.1, np.ones((3, 3))))


class TestSweep:
    def test_rows(self):
        rows = sweep(2, 0.9, 10, 50, FAST)
        assert len(rows) == 10
        for est in rows:
            assert est.lower <= est.value <= est.upper
