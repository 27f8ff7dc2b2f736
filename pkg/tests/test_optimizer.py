import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opmac.model import SystemParams
from opmac.opportunity import empty_ball_radius
from opmac.optimizer import (Regime, SolverError, Variant, arctan_approx, closed_form_p,
                             fixed_point_rhs, quadratic_coefficients, solve_for_radius,
                             solve_optimal_p, solve_optimal_p_many, split_variable)

BASE = SystemParams(lam=0.001, alpha=4, theta=1, d=2, beta=1e-11)


def g(p, R, params, variant=Variant.DERIVED_ARCCOT):
    return fixed_point_rhs(p, R, params, variant) - 1 / np.asarray(p)


class TestFixedPointRhs:
    def test_no_interference_collapse(self):
        # lambda=0, beta=0: 1/p = 1/(1 + R^4/(theta d^4) - p) has root p = (1 + R^4/(theta d^4))/2
        params = SystemParams(lam=0.0, alpha=4, theta=1, d=1, beta=0.0)
        R = 1.2
        c = 1 + R**4
        for p in (0.1, 0.5, 0.9):
            assert fixed_point_rhs(p, R, params) == pytest.approx(1 / (c - p), rel=1e-14)
        res = solve_for_radius(R, params)
        assert res.clamped and res.p_star == 1.0

    def test_arccot_matches_quadrature(self):
        p = np.linspace(0.01, 0.99, 40)
        for R in (2.0, 3.2, 8.0, 30.0):
            num = fixed_point_rhs(p, R, BASE, Variant.NUMERIC_INTEGRAL)
            ana = fixed_point_rhs(p, R, BASE, Variant.DERIVED_ARCCOT)
            assert np.max(np.abs(num - ana)) < 1e-8

    def test_printed_variant_frozen_value(self):
        val = fixed_point_rhs(0.3, 5.0, BASE, Variant.PAPER_EQ6)
        assert val == pytest.approx(0.06833758504105793, rel=1e-12)

    def test_printed_variant_differs_from_derived(self):
        a = fixed_point_rhs(0.3, 5.0, BASE, Variant.PAPER_EQ6)
        b = fixed_point_rhs(0.3, 5.0, BASE, Variant.DERIVED_ARCCOT)
        assert abs(a - b) > 1e-3

    def test_argument_errors(self):
        with pytest.raises(ValueError, match="alpha"):
            fixed_point_rhs(0.5, 3.0, BASE.replace(alpha=3), Variant.DERIVED_ARCCOT)
        with pytest.raises(ValueError, match="singular"):
            fixed_point_rhs(1.0, 3.0, BASE, Variant.PAPER_EQ6)
        with pytest.raises(ValueError):
            fixed_point_rhs(0.0, 3.0, BASE)
        with pytest.raises(ValueError):
            fixed_point_rhs(0.5, 0.0, BASE)

    def test_numeric_handles_p_one(self):
        assert np.isfinite(fixed_point_rhs(1.0, 3.0, BASE, Variant.NUMERIC_INTEGRAL))

    def test_general_alpha(self):
        params = BASE.replace(alpha=3.5)
        vals = fixed_point_rhs(np.array([0.2, 0.5, 0.8]), 4.0, params)
        assert np.all(np.isfinite(vals)) and np.all(np.diff(vals) > 0)

    def test_half_duplex_drops_self_term(self):
        hd = BASE.replace(beta=1e-2, duplex="HALF")
        ref = BASE.replace(beta=0.0, duplex="HALF")
        assert fixed_point_rhs(0.4, 4.0, hd) == pytest.approx(fixed_point_rhs(0.4, 4.0, ref), rel=1e-14)


class TestSolver:
    def test_clamps_when_constraint_never_binds(self):
        res = solve_optimal_p(0.01, BASE, Variant.DERIVED_ARCCOT)
        assert res.clamped and res.p_star == 1.0
        assert res.residual > 0

    def test_interior_root(self):
        res = solve_optimal_p(0.3, BASE, Variant.DERIVED_ARCCOT)
        assert not res.clamped
        assert 0 < res.p_star < 1
        assert abs(g(res.p_star, res.ball_radius, BASE)) <= 1e-9

    def test_grid_scan_oracle(self):
        """Sign change on a 10^6-point grid brackets the bisection root."""
        R = empty_ball_radius(0.3, BASE)
        res = solve_for_radius(R, BASE, Variant.DERIVED_ARCCOT)
        grid = np.linspace(1e-6, 1 - 1e-6, 1_000_000)
        vals = g(grid, R, BASE)
        k = np.flatnonzero(np.diff(np.sign(vals)) != 0)
        assert len(k) == 1
        assert grid[k[0]] <= res.p_star <= grid[k[0] + 1]

    def test_vectorised_matches_scalar(self):
        Is = np.logspace(-3, 1, 15)
        many = solve_optimal_p_many(Is, BASE)
        one = [solve_optimal_p(I, BASE, Variant.DERIVED_ARCCOT).p_star for I in Is]
        assert many == pytest.approx(one, abs=1e-8)

    def test_numeric_variant_for_general_alpha(self):
        params = BASE.replace(alpha=3.5)
        res = solve_optimal_p(1.0, params)
        assert 0 < res.p_star <= 1
        with pytest.raises(ValueError):
            solve_optimal_p_many([1.0], params, Variant.DERIVED_ARCCOT)

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError):
            solve_for_radius(3.0, BASE, tol=0)

    def test_non_increasing_in_self_interference(self):
        betas = np.logspace(-8, -1, 12)
        ps = [solve_optimal_p(0.3, BASE.replace(beta=b), Variant.DERIVED_ARCCOT).p_star for b in betas]
        assert all(b <= a + 1e-9 for a, b in zip(ps, ps[1:]))

    @settings(max_examples=40, deadline=None)
    @given(lam=st.floats(1e-4, 1e-2), theta=st.floats(0.3, 5), d=st.floats(1, 4),
           logI=st.floats(-3, 1))
    def test_g_strictly_increasing(self, lam, theta, d, logI):
        params = SystemParams(lam=lam, alpha=4, theta=theta, d=d, beta=1e-11)
        R = empty_ball_radius(10**logI, params)
        vals = g(np.linspace(1e-3, 1 - 1e-3, 1000), R, params)
        assert np.all(np.diff(vals) > 0)


class TestArctanApprox:
    def test_values(self):
        assert arctan_approx(0.0) == pytest.approx(-0.11564625850340135, rel=1e-14)
        assert arctan_approx(15.0) == math.pi / 2
        # boundary belongs to the rational branch
        assert arctan_approx(10.0) == pytest.approx((16.32 - 0.1037) / 10.8967)

    def test_rmse(self):
        x = np.linspace(0, 10, 10_000)
        rmse = math.sqrt(np.mean((arctan_approx(x) - np.arctan(x)) ** 2))
        assert rmse == pytest.approx(0.017453, abs=2e-5)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            arctan_approx(-1.0)


class TestClosedForm:
    def test_frozen_small_x_coefficients(self):
        params = BASE.replace(beta=0.0)
        co = quadratic_coefficients(0.01, params)
        assert co.regime is Regime.SMALL_X
        assert co.x == pytest.approx(3.6483502651574837, rel=1e-12)
        assert co.c1 == pytest.approx(9.907566457878405, rel=1e-12)
        assert co.c2 == pytest.approx(63.684530613120195, rel=1e-12)
        assert co.c3 == pytest.approx(-52.925051164473466, rel=1e-12)
        assert empty_ball_radius(0.01, params) == pytest.approx(3.2123344860936234, rel=1e-12)

    def test_root_satisfies_quadratic(self):
        params = BASE.replace(beta=0.0)
        co = quadratic_coefficients(0.01, params)
        root = (-co.c2 + math.sqrt(co.discriminant)) / (2 * co.c1)
        assert co.c1 * root**2 + co.c2 * root + co.c3 == pytest.approx(0, abs=1e-10)
        assert closed_form_p(0.01, params) == pytest.approx(min(root, 1.0))

    def test_regime_boundary(self):
        # choose I so that x is exactly at the split
        params = BASE.replace(beta=0.0)
        R = params.d * math.sqrt(10 * math.sqrt(params.theta / 2))
        I = (1 + 4 * math.pi * params.lam / 2 * R**2) / R**4
        x = split_variable(empty_ball_radius(I, params), params)
        assert x == pytest.approx(10, rel=1e-12)
        below = quadratic_coefficients(I * (1 + 1e-9), params)
        above = quadratic_coefficients(I * (1 - 1e-6), params)
        assert below.regime is Regime.SMALL_X
        assert above.regime is Regime.LARGE_X

    def test_requires_alpha4(self):
        with pytest.raises(ValueError, match="alpha"):
            quadratic_coefficients(0.01, BASE.replace(alpha=3))

    def test_negative_discriminant_raises(self):
        hits = 0
        for I in np.logspace(-1, 1, 20):
            if quadratic_coefficients(I, BASE).discriminant < 0:
                hits += 1
                with pytest.raises(SolverError, match="discriminant"):
                    closed_form_p(I, BASE)
        assert hits > 0
