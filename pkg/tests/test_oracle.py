import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bifcurve import NonFinite, ProblemSpec
from bifcurve.asymptotics import coeff_A
from bifcurve.model import eval_W
from bifcurve.oracle import (
    invert_W,
    replay_profile,
    shoot_converged,
    shoot_halfinterval,
    trajectory,
    verify_pair,
)
from bifcurve.timemap import lambda_of_alpha, solution_profile

LINEAR = ProblemSpec("pure-power", k=0, m=1)
CUBIC = ProblemSpec("pure-power", k=2, m=2)


class TestInvertW:
    def test_zero(self):
        assert invert_W(CUBIC, 0.0) == 0.0

    def test_closed_form(self):
        assert invert_W(CUBIC, 9.0) == pytest.approx(3.0, rel=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(u=st.floats(1e-6, 50.0))
    def test_round_trip(self, u):
        spec = ProblemSpec("osc-diffusion", n=1, p=1.0)
        assert abs(invert_W(spec, float(eval_W(spec, u))) - u) <= 1e-12

    @pytest.mark.parametrize("spec", [ProblemSpec("osc-both"), ProblemSpec("osc-reaction", k=4, m=3)])
    def test_warm_start_gives_same_root(self, spec):
        w = float(eval_W(spec, 7.3))
        assert invert_W(spec, w, 1.0) == pytest.approx(invert_W(spec, w), rel=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            invert_W(CUBIC, -1.0)


class TestShooting:
    def test_linear_problem(self):
        res = shoot_halfinterval(LINEAR, 3.0, math.pi**2, 10_000)
        assert abs(res.boundary_residual) <= 1e-8
        assert res.steps == 10_000

    def test_cubic_power_law(self):
        lam = 8 * coeff_A(2, 2) ** 2 * 100.0
        assert abs(shoot_halfinterval(CUBIC, 10.0, lam, 4000).boundary_residual) <= 1e-6

    def test_agrees_with_time_map(self):
        spec = ProblemSpec("osc-diffusion", n=1, p=1.0)
        lam = lambda_of_alpha(spec, 5.0).lam
        assert abs(shoot_halfinterval(spec, 5.0, lam, 4000).boundary_residual) <= 1e-6

    def test_monotone_in_lambda(self):
        spec = ProblemSpec("osc-both")
        lam = lambda_of_alpha(spec, 20.0).lam
        r = [shoot_halfinterval(spec, 20.0, f * lam, 2000).boundary_residual for f in (0.999, 1.0, 1.001)]
        assert r[0] > r[1] > r[2] or r[0] < r[1] < r[2]
        assert abs(r[1]) < 1e-3 * min(abs(r[0]), abs(r[2]))

    def test_fourth_order_convergence(self):
        # error against the exact lambda = pi^2 shrinks ~16x per halving
        spec = ProblemSpec("osc-reaction", k=0, m=1)  # D = 1, g = u + sin u: smooth at u = 0
        lam = lambda_of_alpha(spec, 2.0).lam
        errs = [abs(shoot_halfinterval(spec, 2.0, lam, n).boundary_residual) for n in (100, 200, 400, 800)]
        rates = [errs[i] / errs[i + 1] for i in range(3)]
        assert all(12 < r < 20 for r in rates), rates

    def test_arguments_validated(self):
        with pytest.raises(ValueError):
            shoot_halfinterval(LINEAR, 1.0, -1.0, 1000)
        with pytest.raises(ValueError):
            shoot_halfinterval(LINEAR, 1.0, 1.0, 10)

    def test_blow_up_is_reported(self):
        with pytest.raises(NonFinite):
            shoot_halfinterval(CUBIC, 10.0, 1e300, 1000)


class TestVerifyPair:
    def test_true_and_false(self):
        assert verify_pair(LINEAR, 1.0, math.pi**2, 1e-6)
        assert not verify_pair(LINEAR, 1.0, 1.05 * math.pi**2, 1e-6)

    def test_tolerance_validated(self):
        with pytest.raises(ValueError):
            verify_pair(LINEAR, 1.0, math.pi**2, 0.0)

    def test_step_doubling_controls_drift(self):
        spec = ProblemSpec("osc-reaction", k=2, m=2)
        lam = lambda_of_alpha(spec, 150.0).lam
        res = shoot_converged(spec, 150.0, lam, 1e-6)
        assert res.energy_drift <= 1e-7
        assert abs(res.boundary_residual) <= 1e-6


def test_trajectory_derivative_is_dw_dt():
    tr = trajectory(LINEAR, 1.0, math.pi**2, 1000)
    # w = u = sin(pi t): dw/dt = pi cos(pi t)
    assert np.allclose(tr.v, math.pi * np.cos(math.pi * tr.t), atol=1e-9)
    assert tr.t[0] == 0.5 and tr.t[-1] == 0.0


def test_replay_matches_time_map_profile():
    spec = ProblemSpec("osc-both")
    lam = lambda_of_alpha(spec, 6.0).lam
    assert replay_profile(spec, solution_profile(spec, 6.0, lam)) < 1e-8
