"""Scalar relaxation solvers, spectral density, decay constants, lemmas."""

import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from fracmix import (FracOdeProblem, OrderSpec, SpectralDensity, TimeGrid,
                     TruncationError, ValidationError, decay_constants,
                     frac_derivative_sign_check, make_spectral_density,
                     max_principle_check, sandwich_check, solve_l1,
                     solve_spectral, spectral_density)
from fracmix.fraccalc import Trajectory


def _grid(t_end, n):
    return TimeGrid(0.0, t_end, n)


class TestSolveL1:
    def test_classical_relaxation_limit(self):
        # q = 0 reduces to v' = -v: backward Euler against exp(-t)
        prob = FracOdeProblem(OrderSpec.empty(), 1.0, 1.0, horizon=5.0)
        traj = solve_l1(prob, _grid(5.0, 2560))
        err = np.abs(traj.states - np.exp(-traj.times))
        assert err.max() <= 1e-3

    def test_pure_fractional_balance_monotone(self):
        # lam = 0: v' + D^a v = 0 keeps v in (0, 1] and nonincreasing
        spec = OrderSpec.constant(0.5, 1.0)
        prob = FracOdeProblem(spec, 0.0, 1.0, horizon=2.0)
        coarse = solve_l1(prob, _grid(2.0, 1024))
        fine = solve_l1(prob, _grid(2.0, 2048))
        assert np.all(coarse.states > 0.0)
        assert np.all(coarse.states <= 1.0)
        assert np.all(np.diff(coarse.states) <= 0.0)
        assert abs(coarse.states[-1] - fine.states[-1]) <= 1e-4

    def test_reproduces_initial_state(self):
        spec = OrderSpec.constant(0.3, 2.0)
        prob = FracOdeProblem(spec, 1.5, -0.7, horizon=1.0)
        traj = solve_l1(prob, _grid(1.0, 64))
        assert traj.states[0] == -0.7

    def test_refinement_order_at_fixed_time(self):
        # fixed-time error ratio between tau and tau/2 >= 2^min(1,2-a) * 0.8
        for alpha in (0.25, 0.5, 0.75):
            spec = OrderSpec.constant(alpha, 1.0)
            dens = make_spectral_density(alpha, 1.0, 1.0, t_min=1.0)
            exact = solve_spectral(dens, 1.0, [1.0]).states[0]
            errs = []
            for n in (512, 1024, 2048):
                traj = solve_l1(FracOdeProblem(spec, 1.0, 1.0, horizon=1.0),
                                _grid(1.0, n))
                errs.append(abs(traj.states[-1] - exact))
            for e_coarse, e_fine in zip(errs, errs[1:]):
                assert e_coarse / e_fine >= 2.0 ** min(1.0, 2.0 - alpha) * 0.8

    def test_grid_must_cover_horizon(self):
        prob = FracOdeProblem(OrderSpec.constant(0.5, 1.0), 1.0, 1.0,
                              horizon=2.0)
        with pytest.raises(ValidationError):
            solve_l1(prob, _grid(1.0, 64))


class TestSpectralDensity:
    def test_value_at_resonance(self):
        dens = make_spectral_density(0.5, 1.0, 1.0)
        assert spectral_density(dens, 1.0) == pytest.approx(1.0 / math.pi,
                                                            rel=1e-14)

    def test_small_r_blowup_integrable(self):
        dens = make_spectral_density(0.5, 1.0, 1.0)
        r = np.array([1e-10, 1e-8, 1e-6])
        vals = spectral_density(dens, r)
        lead = dens.q1 * math.sin(math.pi * dens.alpha) / (math.pi * dens.lam)
        np.testing.assert_allclose(vals * r ** (1.0 - dens.alpha), lead,
                                   rtol=1e-4)

    def test_positive_everywhere(self):
        for alpha in (0.25, 0.5, 0.75):
            for q1 in (0.5, 1.0, 2.0):
                for lam in (0.5, 1.0, 2.0):
                    dens = make_spectral_density(alpha, q1, lam)
                    r = np.logspace(-6, 3, 60)
                    assert np.all(spectral_density(dens, r) > 0.0)

    def test_nonpositive_r_rejected(self):
        dens = make_spectral_density(0.5, 1.0, 1.0)
        with pytest.raises(ValidationError):
            spectral_density(dens, 0.0)

    def test_delta_condition_enforced(self):
        with pytest.raises(ValidationError):
            SpectralDensity(alpha=0.5, q1=1.0, lam=1.0, delta=0.9, r_max=10.0)

    def test_delta_is_equality_root(self):
        dens = make_spectral_density(0.5, 2.0, 1.5)
        margin = dens.lam - dens.delta - dens.q1 * dens.delta ** dens.alpha
        assert margin == pytest.approx(dens.lam / 2.0, rel=1e-12)


class TestSolveSpectral:
    def test_zero_initial_state(self):
        dens = make_spectral_density(0.5, 1.0, 1.0)
        traj = solve_spectral(dens, 0.0, [0.5, 1.0])
        assert np.all(traj.states == 0.0)

    def test_normalization_near_zero(self):
        # v(0+) = v0: tiny times stay within 5% of v0, cross-checked by a
        # fine L1 march (the stated oracle)
        dens = make_spectral_density(0.5, 1.0, 1.0, t_min=1e-3)
        v = solve_spectral(dens, 1.0, [1e-3]).states[0]
        assert 0.95 <= v <= 1.0
        grid = TimeGrid(0.0, 1e-3, 100)
        marched = solve_l1(FracOdeProblem(OrderSpec.constant(0.5, 1.0), 1.0,
                                          1.0, horizon=1e-3), grid)
        assert v == pytest.approx(marched.states[-1], rel=1e-4)

    def test_algebraic_tail_limit(self):
        # t^alpha v(t) approaches a positive constant along 1e2, 1e3, 1e4
        dens = make_spectral_density(0.5, 1.0, 1.0, t_min=100.0)
        t = np.array([1e2, 1e3, 1e4])
        scaled = solve_spectral(dens, 1.0, t).states * t ** 0.5
        assert np.all(scaled > 0.0)
        assert abs(scaled[2] / scaled[1] - 1.0) < abs(scaled[1] / scaled[0] - 1.0)
        assert abs(scaled[2] / scaled[1] - 1.0) < 0.02

    def test_complete_monotonicity(self):
        dens = make_spectral_density(0.4, 1.5, 0.8, t_min=0.5)
        t = np.linspace(0.5, 10.0, 40)
        v = solve_spectral(dens, 1.0, t).states
        assert np.all(v > 0.0)
        assert np.all(np.diff(v) < 0.0)
        assert np.all(np.diff(v, 2) > 0.0)

    def test_cross_method_small(self):
        grid = _grid(10.0, 4096)
        spec = OrderSpec.constant(0.75, 2.0)
        l1 = solve_l1(FracOdeProblem(spec, 0.5, 1.0, horizon=10.0), grid)
        idx = np.unique(np.clip(np.round(
            np.logspace(-1, 1, 15) / grid.tau).astype(int), 1, grid.n_steps))
        dens = make_spectral_density(0.75, 2.0, 0.5, t_min=0.1)
        spec_traj = solve_spectral(dens, 1.0, grid.points[idx])
        rel = np.abs(l1.states[idx] - spec_traj.states) / np.abs(spec_traj.states)
        assert rel.max() <= 1e-3

    def test_truncation_failure_signals(self):
        dens = make_spectral_density(0.5, 1.0, 1.0, t_min=1.0)
        stunted = SpectralDensity(dens.alpha, dens.q1, dens.lam, dens.delta,
                                  r_max=dens.delta * 1.01)
        with pytest.raises(TruncationError) as err:
            solve_spectral(stunted, 1.0, [0.01])
        assert err.value.suggested_r_max > stunted.r_max

    def test_times_must_be_positive(self):
        dens = make_spectral_density(0.5, 1.0, 1.0)
        with pytest.raises(ValidationError):
            solve_spectral(dens, 1.0, [0.0, 1.0])


class TestDecayConstants:
    def test_lower_constant_complete_gamma_limit(self):
        dens = make_spectral_density(0.5, 1.0, 1.0)
        late = decay_constants(dens, 60.0)
        limit = dens.lam * dens.q1 * math.sin(math.pi * dens.alpha) \
            / (math.pi * (dens.lam + dens.q1) ** 2) * gamma_fn(dens.alpha)
        assert late.c_lower == pytest.approx(limit, rel=1e-10)

    def test_positive_over_grid(self):
        for alpha in (0.25, 0.5, 0.75):
            for q1 in (0.5, 1.0, 2.0):
                for lam in (0.5, 1.0, 2.0):
                    consts = decay_constants(
                        make_spectral_density(alpha, q1, lam), 1.0)
                    assert consts.c_lower > 0.0
                    assert consts.c_lower <= consts.c_upper

    def test_sandwich_base_triple(self):
        dens = make_spectral_density(0.5, 1.0, 1.0, t_min=1.0)
        consts = decay_constants(dens, 1.0)
        times = np.array([1.0, 10.0, 100.0, 1000.0])
        traj = solve_spectral(dens, 1.0, times)
        report = sandwich_check(times, traj.states, consts, 1.0)
        assert report.passed
        assert report.lower_margin >= 1.0
        assert report.upper_margin <= 1.0

    def test_t0_validation(self):
        dens = make_spectral_density(0.5, 1.0, 1.0)
        with pytest.raises(ValidationError):
            decay_constants(dens, 0.0)


class TestMaxPrinciple:
    def _spec(self):
        return OrderSpec.constant(0.5, 1.0)

    def test_solver_output_stays_nonpositive(self):
        spec = self._spec()
        traj = solve_l1(FracOdeProblem(spec, 1.0, -1.0, horizon=2.0),
                        _grid(2.0, 1024))
        verdict = max_principle_check(traj, spec, 1.0, tol=1e-6)
        assert verdict.status == "pass"
        assert verdict.max_value <= 1e-6 * verdict.kappa

    def test_zero_trajectory_passes(self):
        spec = self._spec()
        grid = _grid(1.0, 64)
        traj = Trajectory.from_states(grid.points.copy(), np.zeros(65))
        assert max_principle_check(traj, spec, 1.0, tol=1e-9).status == "pass"

    def test_strict_forcing_slack(self):
        spec = self._spec()
        traj = solve_l1(FracOdeProblem(spec, 1.0, -1.0, forcing=-0.1,
                                       horizon=2.0), _grid(2.0, 1024))
        verdict = max_principle_check(traj, spec, 1.0, tol=1e-6)
        assert verdict.status == "pass"
        assert traj.states.max() <= 0.0

    def test_hypothesis_violation_is_vacuous(self):
        spec = self._spec()
        grid = _grid(1.0, 64)
        traj = Trajectory.from_states(grid.points.copy(),
                                      np.ones(65))  # residual far above tol
        verdict = max_principle_check(traj, spec, 1.0, tol=1e-9)
        assert verdict.status == "vacuous"
        assert verdict.ok


class TestSignLemma:
    def test_solver_output_has_nonpositive_fractional_derivative(self):
        spec = OrderSpec.constant(0.5, 1.0)
        traj = solve_l1(FracOdeProblem(spec, 1.0, 1.0, horizon=2.0),
                        _grid(2.0, 2048))
        verdict = frac_derivative_sign_check(traj, spec, 1.0, tol=1e-6)
        assert verdict.status == "pass"
        assert verdict.max_value <= 1e-6

    def test_zero_trajectory_passes(self):
        spec = OrderSpec.constant(0.4, 0.5)
        grid = _grid(1.0, 32)
        traj = Trajectory.from_states(grid.points.copy(), np.zeros(33))
        assert frac_derivative_sign_check(traj, spec, 1.0, tol=1e-9).ok

    def test_vanishing_coefficient_rejected(self):
        # the lemma hypothesis needs q bounded below by a positive constant
        grid = _grid(1.0, 32)
        traj = Trajectory.from_states(grid.points.copy(), np.zeros(33))
        bad = OrderSpec(terms=((0.5, 0.0),), bounds=(0.0, 0.0))
        with pytest.raises(ValidationError):
            frac_derivative_sign_check(traj, bad, 1.0, tol=1e-9)

    def test_negative_data_is_inconclusive(self):
        spec = OrderSpec.constant(0.5, 1.0)
        grid = _grid(1.0, 64)
        traj = Trajectory.from_states(grid.points.copy(),
                                      -np.ones(65))
        verdict = frac_derivative_sign_check(traj, spec, 1.0, tol=1e-6)
        assert verdict.status == "inconclusive"
        assert verdict.ok
