"""Mittag-Leffler evaluation against independent references.

Frozen reference values were produced by a high-precision mpmath series
(working precision scaled as |z|**(1/alpha) digits, gamma arguments formed
in mpmath arithmetic).  The half-order identity E_{1/2,1}(-x) = erfcx(x)
supplies an independent oracle across every evaluation regime.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erfcx, gamma as gamma_fn

from fracmix import EvaluationError, MLParams, ValidationError, \
    exp_kernel_value, mittag_leffler, ml_derivative_residuals
from fracmix.mlfunc import series_evaluation, _negative_axis

# mpmath references, 18 significant digits
REFERENCE = {
    (0.3, 1.0, -2.0): 0.290232226167875355,
    (0.3, 0.3, -5.0): 0.00727510080315491165,
    (0.7, 1.0, -12.0): 0.0297611683254493566,
    (0.6, 0.9, -12.0): 0.0293854213983591147,
    (0.75, 1.3, -7.0): 0.0915282192517842925,
    (0.9, 1.0, -20.0): 0.00574950781610911258,
    (0.25, 1.0, -4.0): 0.172917669902774743,
}


def test_value_at_zero_is_reciprocal_gamma():
    val = mittag_leffler(MLParams(0.7, 1.3), 0.0)
    assert val.imag == 0.0
    assert val.real == pytest.approx(1.1142425085473018, rel=1e-14)


def test_exponential_special_case():
    val = mittag_leffler(MLParams(1.0, 1.0), -2.0)
    assert val.real == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_half_order_identity_frozen():
    # E_{1/2,1}(-1) = e * erfc(1), frozen from the high-precision series
    val = mittag_leffler(MLParams(0.5, 1.0), -1.0)
    assert val.real == pytest.approx(0.42758357615580700441, rel=1e-12)


@pytest.mark.parametrize("x", [0.3, 1.0, 4.0, 5.5, 20.0, 300.0, 1e4])
def test_half_order_identity_all_regimes(x):
    val = mittag_leffler(MLParams(0.5, 1.0), -x).real
    assert val == pytest.approx(float(erfcx(x)), rel=2e-12)


@pytest.mark.parametrize("key", sorted(REFERENCE))
def test_against_reference_series(key):
    alpha, gam, z = key
    val = mittag_leffler(MLParams(alpha, gam), z)
    assert val.imag == 0.0
    assert val.real == pytest.approx(REFERENCE[key], rel=1e-9)


def test_asymptotic_sector_complex():
    # mpmath anchors away from the real axis
    val = mittag_leffler(MLParams(0.8, 1.0), 30.0 * np.exp(3j * math.pi / 4))
    assert val.real == pytest.approx(0.00512377290010976904, rel=1e-8)
    assert val.imag == pytest.approx(0.00544458463488332831, rel=1e-8)
    val2 = mittag_leffler(MLParams(0.5, 0.5), 50j)
    assert val2.real == pytest.approx(-0.000112905687257281851, rel=1e-8)
    assert abs(val2.imag) < 1e-10


def test_positive_axis_series():
    # no cancellation for z > 0; oracle is the half-order closed form
    # E_{1/2,1/2}(x) = 1/sqrt(pi) + x e^{x^2} (1 + erf(x))
    from scipy.special import erf
    val = mittag_leffler(MLParams(0.5, 0.5, series_radius=50.0), 8.0)
    exact = 1.0 / math.sqrt(math.pi) + 8.0 * math.exp(64.0) * (1.0 + erf(8.0))
    assert val.real == pytest.approx(exact, rel=1e-12)


def test_dispatch_failure_carries_regime():
    # large |z| near the positive axis: no regime applies
    with pytest.raises(EvaluationError) as err:
        mittag_leffler(MLParams(0.9, 1.0), 50.0 + 2.0j)
    assert err.value.z == 50.0 + 2.0j
    assert err.value.regime


@pytest.mark.parametrize("bad", [
    dict(alpha=0.0, gamma=1.0),
    dict(alpha=0.5, gamma=-1.0),
    dict(alpha=0.5, gamma=1.0, series_radius=0.0),
    dict(alpha=0.5, gamma=1.0, target_tol=1e-3),
])
def test_params_validation(bad):
    with pytest.raises(ValidationError):
        MLParams(**bad)


def test_regime_consistency_at_switch_radius():
    # series and integral paths agree within 10 * target_tol near the
    # switch; restricted to orders where float64 series roundoff is sound
    tol = 1e-9
    for alpha, gam in [(0.6, 1.0), (0.75, 0.75), (0.9, 1.2)]:
        params = MLParams(alpha, gam, target_tol=tol)
        for x in (4.5, 5.0, 5.5):
            series_val, roundoff, converged = series_evaluation(params, -x)
            assert converged and roundoff <= tol
            integral_val = _negative_axis(alpha, gam, x, tol)
            assert abs(series_val.real - integral_val) <= 10 * tol


def test_sector_bound_constant_is_finite():
    xs = np.logspace(math.log10(0.01), 4.0, 50)
    for alpha, gam in [(0.3, 1.0), (0.5, 0.8), (0.8, 1.0)]:
        params = MLParams(alpha, gam)
        vals = np.array([mittag_leffler(params, -x).real for x in xs])
        c_hat = np.max((1.0 + xs) * np.abs(vals))
        assert np.isfinite(c_hat)
        assert c_hat < 1e3


def test_complete_monotonicity_negative_axis():
    xs = np.logspace(-2, 4, 80)
    for alpha in (0.25, 0.5, 0.75):
        params = MLParams(alpha, 1.0)
        vals = np.array([mittag_leffler(params, -x).real for x in xs])
        assert np.all(vals > 0.0)
        assert np.all(np.diff(vals) < 0.0)


class TestDerivativeResiduals:
    def test_spec_point_values(self):
        r1, _ = ml_derivative_residuals(0.5, 1.0, 1.0, 1e-4)
        assert r1 <= 1e-6
        _, r2 = ml_derivative_residuals(0.3, 2.0, 0.5, 1e-3)
        assert r2 <= 5e-3
        r2_fine = ml_derivative_residuals(0.3, 2.0, 0.5, 5e-4)[1]
        assert r2_fine < r2

    def test_zero_rate_degenerates(self):
        r1, r2 = ml_derivative_residuals(0.4, 0.0, 1.0, 1e-3)
        assert r1 <= 1e-13
        assert r2 <= 1e-13

    @pytest.mark.parametrize("alpha", [0.3, 0.5, 0.8])
    def test_convergence_orders(self, alpha):
        hs = [2e-3, 1e-3, 5e-4]
        res = [ml_derivative_residuals(alpha, 1.0, 1.0, h) for h in hs]
        order1 = math.log(res[0][0] / res[2][0]) / math.log(4.0)
        order2 = math.log(res[0][1] / res[2][1]) / math.log(4.0)
        assert order1 >= 1.8
        assert order2 >= 1.2 - alpha

    def test_validation(self):
        with pytest.raises(ValidationError):
            ml_derivative_residuals(0.5, 1.0, 1e-3, 1e-2)
        with pytest.raises(ValidationError):
            ml_derivative_residuals(1.5, 1.0, 1.0, 1e-3)


def test_kernel_identity_random_draws(rng):
    # dual route: adaptive quadrature of the weakly singular integral
    # against the closed Mittag-Leffler form
    for _ in range(20):
        beta = float(rng.uniform(0.05, 0.95))
        lam = float(rng.uniform(0.2, 20.0))
        s = float(rng.uniform(0.0, 2.0))
        t = s + float(rng.uniform(0.05, 3.0))
        direct, est = quad(lambda u: math.exp(-lam * (u - s)), s, t,
                           weight="alg", wvar=(0.0, -beta),
                           epsabs=1e-14, epsrel=1e-12)
        direct /= gamma_fn(1.0 - beta)
        assert abs(direct - exp_kernel_value(beta, lam, s, t)) <= 1e-8


def test_kernel_identity_degenerate_interval():
    assert exp_kernel_value(0.5, 3.0, 1.0, 1.0) == 0.0
