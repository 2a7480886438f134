"""Two-parameter Mittag-Leffler function and its differential identities.

``E(z) = sum_k z^k / Gamma(alpha*k + gamma)`` is entire, but the series is
numerically useless on much of the negative real axis: the terms grow to
``exp(|z|**(1/alpha))`` before cancelling down to an O(1/|z|) value.  Three
regimes are used instead:

* power series with a rigorous remainder stop, while the tracked roundoff
  stays within the error target;
* for real ``z < 0`` and ``alpha <= 1``, a real spectral integral obtained
  by collapsing the Bromwich contour onto the negative axis (the density
  is positive for ``alpha <= gamma <= 1``, which keeps complete
  monotonicity exact in the output);
* for large ``|z|`` away from the positive axis, the algebraic asymptotic
  expansion with optimal truncation.

Gamma-function evaluation routes through ``scipy.special`` (Lanczos-class
accuracy) and is treated as an internal primitive.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, rgamma

from .errors import EvaluationError, ValidationError
from .quadrature import singular_power_integral

_SERIES_CAP = 100_000
_EPS = 2.2e-16


@dataclass(frozen=True)
class MLParams:
    """Orders and evaluation controls for ``E_{alpha,gamma}``."""

    alpha: float
    gamma: float
    series_radius: float = 5.0
    target_tol: float = 1e-10

    def __post_init__(self):
        if not (self.alpha > 0 and self.gamma > 0):
            raise ValidationError(
                f"orders must be positive, got alpha={self.alpha}, gamma={self.gamma}")
        if not self.series_radius > 0:
            raise ValidationError("series_radius must be positive")
        if not (0 < self.target_tol <= 1e-6):
            raise ValidationError("target_tol must lie in (0, 1e-6]")


def _series(alpha: float, gamma: float, z: complex, tol: float):
    """Power series with remainder stop.

    Returns ``(value, roundoff_estimate, converged)``.  Terms are formed in
    log-magnitude space so intermediate ``z**k`` cannot overflow before the
    gamma factor is applied.  ``converged`` is True only when three
    consecutive terms fell below ``tol/10`` *and* the term ratio bound
    guarantees the tail is geometric with ratio <= 1/2 (remainder then at
    most twice the last term, i.e. within ``tol``).
    """
    if z == 0:
        return complex(rgamma(gamma)), 0.0, True
    log_abs_z = math.log(abs(z))
    real_axis = z.imag == 0.0
    sign = 1.0 if z.real >= 0.0 else -1.0
    arg_z = cmath.phase(z)
    total = 0.0 + 0.0j
    max_mag = 0.0
    small_run = 0
    for k in range(_SERIES_CAP):
        a_k = alpha * k + gamma
        log_mag = k * log_abs_z - gammaln(a_k)
        if log_mag > 700.0:
            return total, math.inf, False
        mag = math.exp(log_mag)
        if real_axis:
            total += mag if k % 2 == 0 or sign > 0 else -mag
        else:
            total += mag * cmath.exp(1j * k * arg_z)
        max_mag = max(max_mag, mag)
        if mag < tol / 10.0:
            small_run += 1
            if small_run >= 3:
                # tail ratio |T_{k+1}/T_k| = |z| Gamma(a_k)/Gamma(a_k+alpha)
                log_ratio = log_abs_z + gammaln(a_k) - gammaln(a_k + alpha)
                if log_ratio < math.log(0.5):
                    roundoff = max_mag * _EPS * max(10.0, math.sqrt(k + 1.0))
                    return total, roundoff, True
        else:
            small_run = 0
    return total, math.inf, False


def _series_real_vector(alpha: float, gamma: float, x: np.ndarray) -> np.ndarray:
    """Vectorized series for real arguments with benign cancellation.

    Intended for the small-argument sweeps in the derivative-residual
    checks; callers must keep ``max |x|`` modest so that roundoff stays
    far below the result.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    power = np.ones_like(x)
    for k in range(_SERIES_CAP):
        term = power * rgamma(alpha * k + gamma)
        out += term
        power = power * x
        if k > 4 and np.all(np.abs(term) < 1e-18 * (1.0 + np.abs(out))):
            return out
    raise EvaluationError("series-vector", complex(float(np.max(np.abs(x)))),
                          "vector series failed to converge")


def _asymptotic(alpha: float, gamma: float, z: complex, tol: float) -> complex:
    """Algebraic expansion ``-sum_{k>=1} z^{-k} / Gamma(gamma - alpha k)``.

    Valid for ``|arg z|`` bounded away from ``pi*alpha/2``; terms are added
    until they start growing (optimal truncation) and the size of the first
    omitted term is the error estimate.
    """
    z_inv = 1.0 / z
    power = z_inv
    total = 0.0 + 0.0j
    last_mag = math.inf
    err = math.inf
    for k in range(1, 300):
        coeff = rgamma(gamma - alpha * k)
        term = -power * coeff
        mag = abs(term)
        if coeff != 0.0:
            if mag >= last_mag:
                err = last_mag
                break
            last_mag = mag
        total += term
        power = power * z_inv
        if mag < tol / 10.0 and coeff != 0.0:
            err = mag
            break
    if err > tol:
        raise EvaluationError("asymptotic", z,
                              f"optimal truncation error {err:.2e} exceeds {tol:.2e}")
    return total


def _negative_axis(alpha: float, gamma: float, x: float, tol: float) -> float:
    """``E_{alpha,gamma}(-x)`` for ``x > 0`` via the real spectral integral.

    For ``gamma > 1`` the order is walked down with the exact recursion
    ``E_{a,g}(z) = (E_{a,g-a}(z) - 1/Gamma(g-a)) / z`` until the base window
    ``gamma in (0, 1]`` where the Bromwich collapse is valid (the small-arc
    contribution vanishes because ``gamma < 1 + alpha``).
    """
    if abs(alpha - 1.0) < 1e-14:
        return _negative_axis_classical(gamma, x, tol)
    if not 0.0 < alpha < 1.0:
        raise EvaluationError("negative-axis", complex(-x),
                              "spectral representation requires alpha in (0, 1]")
    if gamma > 1.0:
        inner = _negative_axis(alpha, gamma - alpha, x, tol)
        return (rgamma(gamma - alpha) - inner) / x

    t = x ** (1.0 / alpha)
    sin_pg = math.sin(math.pi * gamma)
    sin_pga = math.sin(math.pi * (gamma - alpha))
    cos_pa = math.cos(math.pi * alpha)

    def smooth(r):
        ra = r ** alpha
        den = 1.0 + 2.0 * ra * cos_pa + ra * ra
        return np.exp(-r * t) * (ra * sin_pg + sin_pga) / (math.pi * den)

    cell = min(1.0, 20.0 / t)
    part = singular_power_integral(smooth, alpha - gamma, cell)
    hi = max(cell * 1.0001, 120.0 / t)
    pts = [1.0] if cell < 1.0 < hi else None
    mid, _ = quad(lambda r: r ** (alpha - gamma) * smooth(r), cell, hi,
                  epsabs=1e-300, epsrel=1e-12, limit=400, points=pts)
    # beyond hi the integrand is below exp(-120) * r**(-gamma): negligible
    return t ** (1.0 - gamma) * (part + mid)


def _negative_axis_classical(gamma: float, x: float, tol: float) -> float:
    # alpha == 1: E_{1,g}(-x) = (1/Gamma(g-1)) * int_0^1 e^{-x s}(1-s)^{g-2} ds
    # for g > 1; one step of the order recursion covers g <= 1
    if abs(gamma - 1.0) < 1e-14:
        return math.exp(-x)
    if gamma > 1.0:
        val, _ = quad(lambda s: math.exp(-x * s), 0.0, 1.0,
                      weight="alg", wvar=(0.0, gamma - 2.0),
                      epsabs=1e-300, epsrel=1e-13)
        return val * rgamma(gamma - 1.0)
    return rgamma(gamma) - x * _negative_axis_classical(gamma + 1.0, x, tol)


def _in_asymptotic_sector(alpha: float, z: complex) -> bool:
    # stay safely inside mu <= |arg z| <= pi with mu above pi*alpha/2
    boundary = 0.75 * math.pi * min(alpha, 4.0 / 3.0)
    return abs(cmath.phase(z)) >= boundary


def mittag_leffler(params: MLParams, z: complex) -> complex:
    """Evaluate ``E_{alpha,gamma}(z)`` to within ``params.target_tol``.

    Inside ``|z| <= series_radius`` the power series is used, falling back
    to the regime evaluators whenever its tracked roundoff would exceed the
    target (small ``alpha`` loses digits to cancellation well inside any
    fixed radius).  Real ``z <= -series_radius`` routes to the spectral
    integral; large ``|z|`` in the admissible sector to the asymptotic
    expansion.  Raises :class:`EvaluationError` when no regime applies.
    """
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValidationError("argument must be finite")
    alpha, gamma, tol = params.alpha, params.gamma, params.target_tol
    if z == 0:
        return complex(rgamma(gamma))

    if abs(z) <= params.series_radius:
        value, roundoff, converged = _series(alpha, gamma, z, tol)
        if converged and roundoff <= tol:
            return value

    if z.imag == 0.0 and z.real < 0.0 and alpha <= 1.0 + 1e-14:
        return complex(_negative_axis(alpha, gamma, -z.real, tol))

    if z.imag == 0.0 and z.real > 0.0:
        # no cancellation on the positive axis; accept the series result
        value, roundoff, converged = _series(alpha, gamma, z, tol)
        if converged:
            return value
        raise EvaluationError("series", z, "positive-axis series hit the term cap")

    if _in_asymptotic_sector(alpha, z):
        return _asymptotic(alpha, gamma, z, tol)
    raise EvaluationError("dispatch", z,
                          "argument outside the supported evaluation regimes")


def series_evaluation(params: MLParams, z: complex):
    """Expose the raw series result ``(value, roundoff, converged)``.

    Used by the regime-consistency checks to compare the series path
    against the integral/asymptotic paths at the switch radius.
    """
    return _series(params.alpha, params.gamma, complex(z), params.target_tol)


def ml_derivative_residuals(alpha: float, mu: float, t: float, h: float):
    """Residuals of the two Mittag-Leffler derivative identities.

    Returns ``(r1, r2)`` where ``r1`` is the central-difference residual of
    ``d/dt E_{a,1}(-mu t^a) = -mu t^{a-1} E_{a,a}(-mu t^a)`` and ``r2`` the
    L1-scheme residual of ``D^a E_{a,1}(-mu t^a) = -mu E_{a,1}(-mu t^a)``.
    Both vanish as ``h -> 0`` at the order of the respective scheme.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if mu < 0.0:
        raise ValidationError("mu must be nonnegative")
    if not t > h > 0.0:
        raise ValidationError("need t > h > 0")

    p1 = MLParams(alpha, 1.0)
    pa = MLParams(alpha, alpha)

    def e1(s: float) -> float:
        return mittag_leffler(p1, -mu * s ** alpha).real

    diff = (e1(t + h) - e1(t - h)) / (2.0 * h)
    rhs = mu * t ** (alpha - 1.0) * mittag_leffler(pa, -mu * t ** alpha).real
    r1 = abs(diff + rhs)

    n = max(2, round(t / h))
    tau = t / n
    nodes = np.arange(n + 1) * tau
    args = -mu * nodes ** alpha
    if np.max(np.abs(args)) ** (1.0 / alpha) < 60.0:
        y = _series_real_vector(alpha, 1.0, args)
    else:
        y = np.array([mittag_leffler(p1, a).real for a in args])
    k = np.arange(n, dtype=float)
    b = ((k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)) \
        * tau ** (-alpha) * rgamma(2.0 - alpha)
    dcap = float(np.dot(b, np.diff(y)[::-1]))
    r2 = abs(dcap + mu * y[-1])
    return r1, r2


def exp_kernel_value(beta: float, lam: float, s: float, t: float) -> float:
    """Closed form of the weakly singular exponential-kernel integral.

    ``int_s^t (t-u)^{-beta}/Gamma(1-beta) * exp(-lam (u-s)) du`` equals
    ``(t-s)^{1-beta} E_{1,2-beta}(-lam (t-s))``; this is the Mittag-Leffler
    side, used as one route of the dual-route kernel check.
    """
    if not 0.0 <= beta < 1.0:
        raise ValidationError("beta must lie in [0, 1)")
    if t < s:
        raise ValidationError("need t >= s")
    dt = t - s
    if dt == 0.0:
        return 0.0
    p = MLParams(1.0, 2.0 - beta)
    return dt ** (1.0 - beta) * mittag_leffler(p, -lam * dt).real
