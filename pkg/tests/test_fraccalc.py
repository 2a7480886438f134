"""Discrete fractional calculus: exactness, linearity, orders, coercivity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma as gamma_fn

from fracmix import (L1Weights, OrderSpec, TimeGrid, ValidationError,
                     caputo_l1, coercivity_gap, multi_term_apply, rl_integral)

TWO_TERM_AT_ONE = 3.3290324226182694   # 1/Gamma(1.7) + 2/Gamma(1.3), mpmath
CAPUTO_T2_AT_ONE = 1.5045055561273501  # Gamma(3)/Gamma(2.5), mpmath
RL_ONES_AT_ONE = 1.1283791670955126    # 1/Gamma(1.5), mpmath


class TestTimeGrid:
    def test_basic(self):
        g = TimeGrid(0.0, 2.0, 4)
        assert g.tau == 0.5
        np.testing.assert_allclose(g.points, [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_from_points_roundtrip(self):
        g = TimeGrid.from_points(np.linspace(0.0, 1.0, 65))
        assert g.n_steps == 64

    def test_graded_rejected(self):
        with pytest.raises(ValidationError):
            TimeGrid.from_points([0.0, 0.1, 0.3, 0.7])

    def test_validation(self):
        with pytest.raises(ValidationError):
            TimeGrid(1.0, 0.5, 4)
        with pytest.raises(ValidationError):
            TimeGrid(-1.0, 0.5, 4)


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.01, 0.99), n=st.integers(2, 400))
def test_l1_weights_monotone_positive(alpha, n):
    b = L1Weights.build(alpha, 0.01, n).b
    assert np.all(b > 0.0)
    assert np.all(np.diff(b) < 0.0)


def test_l1_weights_telescope():
    for alpha in (0.2, 0.5, 0.8):
        for n in (7, 64, 513):
            tau = 1.0 / n
            b = L1Weights.build(alpha, tau, n).b
            total = np.sum(b) * tau ** alpha * gamma_fn(2.0 - alpha)
            assert total == pytest.approx(n ** (1.0 - alpha), rel=1e-12)


class TestCaputoL1:
    def test_constant_is_zero(self):
        g = TimeGrid(0.0, 1.0, 64)
        out = caputo_l1(np.full(65, 3.7), 0.5, g)
        assert np.max(np.abs(out)) < 1e-12

    def test_exact_on_linear(self):
        g = TimeGrid(0.0, 1.0, 128)
        out = caputo_l1(g.points.copy(), 0.5, g)
        exact = g.points ** 0.5 / gamma_fn(1.5)
        np.testing.assert_allclose(out[1:], exact[1:], rtol=1e-12)
        assert out[-1] == pytest.approx(RL_ONES_AT_ONE, rel=1e-12)

    def test_exact_on_affine_any_order(self):
        g = TimeGrid(0.0, 2.0, 100)
        for alpha in (0.2, 0.5, 0.8):
            out = caputo_l1(1.0 - 2.5 * g.points, alpha, g)
            exact = -2.5 * g.points ** (1.0 - alpha) / gamma_fn(2.0 - alpha)
            np.testing.assert_allclose(out[1:], exact[1:], rtol=1e-11)

    def test_quadratic_convergence_order(self):
        # D^0.5 t^2 at t=1 equals Gamma(3)/Gamma(2.5); L1 error is O(tau^1.5)
        errs = []
        for n in (64, 128, 256, 512, 1024):
            g = TimeGrid(0.0, 1.0, n)
            out = caputo_l1(g.points ** 2, 0.5, g)
            errs.append(abs(out[-1] - CAPUTO_T2_AT_ONE))
        orders = [math.log(errs[i] / errs[i + 1], 2.0) for i in range(4)]
        assert min(orders) >= 1.4
        assert errs[-1] < 2e-5

    def test_linearity(self, rng):
        g = TimeGrid(0.0, 1.0, 200)
        x = rng.normal(size=201)
        y = rng.normal(size=201)
        lhs = caputo_l1(2.0 * x - 3.0 * y, 0.7, g)
        rhs = 2.0 * caputo_l1(x, 0.7, g) - 3.0 * caputo_l1(y, 0.7, g)
        np.testing.assert_allclose(lhs, rhs, atol=1e-11)

    def test_vector_input_matches_columns(self, rng):
        g = TimeGrid(0.0, 1.0, 50)
        y = rng.normal(size=(51, 3))
        out = caputo_l1(y, 0.4, g)
        for j in range(3):
            np.testing.assert_allclose(out[:, j], caputo_l1(y[:, j], 0.4, g),
                                       atol=1e-13)

    def test_alpha_validation(self):
        g = TimeGrid(0.0, 1.0, 8)
        for bad in (0.0, 1.0, -0.3, 1.7):
            with pytest.raises(ValidationError):
                caputo_l1(g.points.copy(), bad, g)


class TestRLIntegral:
    def test_ones_exact(self):
        g = TimeGrid(0.0, 1.0, 64)
        out = rl_integral(np.ones(65), 0.5, g)
        exact = g.points ** 0.5 / gamma_fn(1.5)
        np.testing.assert_allclose(out, exact, atol=1e-13)
        assert out[-1] == pytest.approx(RL_ONES_AT_ONE, rel=1e-13)

    def test_zeros(self):
        g = TimeGrid(0.0, 1.0, 32)
        assert np.all(rl_integral(np.zeros(33), 0.8, g) == 0.0)

    def test_semigroup_refinement(self):
        # J^0.3 J^0.4 = J^0.7 up to discretization; error shrinks >= 1.8x
        errs = []
        for n in (128, 256, 512):
            g = TimeGrid(0.0, 1.0, n)
            y = np.sin(g.points)
            direct = rl_integral(y, 0.7, g)
            composed = rl_integral(rl_integral(y, 0.4, g), 0.3, g)
            errs.append(np.max(np.abs(direct - composed)))
        assert errs[-1] <= 5e-4
        assert errs[0] / errs[1] >= 1.8
        assert errs[1] / errs[2] >= 1.8

    def test_gamma_validation(self):
        g = TimeGrid(0.0, 1.0, 8)
        with pytest.raises(ValidationError):
            rl_integral(np.ones(9), 0.0, g)


class TestCoercivityGap:
    def test_constant_vector_zero(self):
        g = TimeGrid(0.0, 1.0, 64)
        y = np.tile([1.0, -2.0, 0.5], (65, 1))
        assert np.max(np.abs(coercivity_gap(y, 0.5, g))) < 1e-12

    def test_proportional_is_equality_case(self):
        # y(t) = phi(t) y0 with phi > 0: Cauchy-Schwarz equality, gap = 0
        g = TimeGrid(0.0, 1.0, 128)
        phi = 1.5 + np.sin(3.0 * g.points)
        y = np.outer(phi, [0.3, -1.0, 2.0])
        assert np.max(np.abs(coercivity_gap(y, 0.3, g))) < 1e-11

    def test_random_suite_nonnegative(self, rng):
        g = TimeGrid(0.0, 1.0, 256)
        worst = np.inf
        for _ in range(30):
            y = rng.normal(size=(257, 5)) @ np.diag([1, 0.5, 0.3, 0.2, 0.1])
            y = np.cumsum(y, axis=0) * g.tau  # smooth-ish random walk
            y /= np.abs(y).max()
            worst = min(worst, coercivity_gap(y, 0.5, g).min())
        assert worst >= -1e-10

    def test_zero_norm_node_convention(self):
        g = TimeGrid(0.0, 1.0, 16)
        y = np.zeros((17, 2))
        y[8:, 0] = np.linspace(0.0, 1.0, 9)
        gap = coercivity_gap(y, 0.5, g)
        assert np.all(np.isfinite(gap))

    def test_scalar_input_rejected(self):
        g = TimeGrid(0.0, 1.0, 8)
        with pytest.raises(ValidationError):
            coercivity_gap(np.ones(9), 0.5, g)


class TestMultiTerm:
    def test_single_term_matches_caputo(self):
        g = TimeGrid(0.0, 1.0, 64)
        y = np.cos(g.points)
        spec = OrderSpec.constant(0.6, 1.0)
        np.testing.assert_allclose(multi_term_apply(y, spec, g),
                                   caputo_l1(y, 0.6, g), atol=1e-14)

    def test_empty_spec_gives_zeros(self):
        g = TimeGrid(0.0, 1.0, 16)
        out = multi_term_apply(np.sin(g.points), OrderSpec.empty(), g)
        assert np.all(out == 0.0)

    def test_two_term_closed_form(self):
        # q1=1 at order 0.3 plus q2=2 at order 0.7 applied to y = t, t = 1
        g = TimeGrid(0.0, 1.0, 128)
        spec = OrderSpec(terms=((0.3, 1.0), (0.7, 2.0)), bounds=(1.0, 2.0))
        out = multi_term_apply(g.points.copy(), spec, g)
        assert out[-1] == pytest.approx(TWO_TERM_AT_ONE, rel=1e-12)

    def test_time_dependent_coefficient(self):
        g = TimeGrid(0.0, 1.0, 64)
        spec = OrderSpec(terms=((0.5, lambda t: 1.0 + 0.5 * t),),
                         bounds=(1.0, 1.5))
        out = multi_term_apply(g.points.copy(), spec, g)
        expect = (1.0 + 0.5 * g.points) * caputo_l1(g.points.copy(), 0.5, g)
        np.testing.assert_allclose(out, expect, atol=1e-13)

    def test_envelope_violation_detected(self):
        g = TimeGrid(0.0, 2.0, 16)
        spec = OrderSpec(terms=((0.5, lambda t: t),), bounds=(0.0, 1.0))
        with pytest.raises(ValidationError):
            multi_term_apply(g.points.copy(), spec, g)

    def test_order_spec_validation(self):
        with pytest.raises(ValidationError):
            OrderSpec(terms=((0.7, 1.0), (0.3, 1.0)), bounds=(0.0, 1.0))
        with pytest.raises(ValidationError):
            OrderSpec(terms=((1.2, 1.0),), bounds=(0.0, 2.0))
        with pytest.raises(ValidationError):
            OrderSpec(terms=((0.5, 1.0),), bounds=(2.0, 1.0))
