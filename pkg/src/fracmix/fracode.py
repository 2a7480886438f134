"""Scalar mixed-order relaxation equation and its decay certificates.

The equation ``v' + q(t) D^a v + lam v = f`` is solved two ways: an implicit
L1 march (any admissible coefficients), and for constant ``q`` a pointwise
spectral-density quadrature obtained by deforming the Laplace inversion
contour onto the negative real axis,

    v(t) = v0 * int_0^inf exp(-r t) H(r) dr,
    H(r) = (1/pi) * lam*q1*r^(a-1)*sin(a*pi) /
           ((lam-r)^2 + q1^2 r^(2a) + 2(lam-r)*q1*r^a*cos(a*pi)).

``H > 0``, so the spectral solution is completely monotone by construction.
The same derivation yields explicit constants sandwiching ``|v(t)|``
between multiples of ``t^-a`` for ``t >= t0``, which is what the decay
checks certify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gamma as gamma_fn, gammaincc, gammainc

from .errors import TruncationError, ValidationError
from .fraccalc import L1Weights, OrderSpec, TimeGrid, Trajectory, caputo_l1, multi_term_apply
from .quadrature import singular_power_integral

Forcing = Optional[Union[float, Callable[[float], float]]]


@dataclass(frozen=True)
class FracOdeProblem:
    """``v' + sum_j q_j(t) D^{a_j} v + lam v = f`` with ``v(0) = v0``."""

    spec: OrderSpec
    lam: float
    v0: float
    forcing: Forcing = None
    horizon: float = 1.0

    def __post_init__(self):
        if self.lam < 0.0:
            raise ValidationError("lam must be nonnegative")
        if self.horizon <= 0.0:
            raise ValidationError("horizon must be positive")

    def forcing_values(self, times: np.ndarray) -> np.ndarray:
        if self.forcing is None:
            return np.zeros(times.size)
        if callable(self.forcing):
            return np.array([self.forcing(t) for t in times], dtype=float)
        return np.full(times.size, float(self.forcing))


@dataclass(frozen=True)
class SpectralDensity:
    """Parameters of the Appendix-style spectral representation.

    ``delta`` splits the singular cell from the smooth range and must keep
    ``lam - delta - q1*delta^alpha >= lam/2``; ``r_max`` is the truncation
    radius checked against the certified tail bound at solve time.
    """

    alpha: float
    q1: float
    lam: float
    delta: float
    r_max: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.q1 <= 0.0 or self.lam <= 0.0:
            raise ValidationError("q1 and lam must be positive")
        if not 0.0 < self.delta <= self.lam:
            raise ValidationError("delta must lie in (0, lam]")
        margin = self.lam - self.delta - self.q1 * self.delta ** self.alpha
        if margin < self.lam / 2.0 - 1e-12 * self.lam:
            raise ValidationError(
                f"delta violates lam - delta - q1*delta^alpha >= lam/2 "
                f"(margin {margin:.3e})")
        if self.r_max <= self.delta:
            raise ValidationError("r_max must exceed delta")


@dataclass(frozen=True)
class DecayConstants:
    """Certified constants: ``c_lower |v0| t^-a <= |v(t)| <= c_upper |v0| t^-a``."""

    alpha: float
    c_upper: float
    c_lower: float
    t0: float

    def __post_init__(self):
        if not (self.c_lower > 0.0 and self.c_upper > 0.0):
            raise ValidationError("decay constants must be positive")
        if self.c_lower > self.c_upper:
            raise ValidationError("c_lower must not exceed c_upper")


@dataclass(frozen=True)
class Verdict:
    """Outcome of a lemma-style check on a trajectory.

    ``status`` is ``pass``/``fail``/``vacuous``/``inconclusive``; the last
    two mark runs whose hypotheses did not hold, which is never counted as
    a failure.
    """

    status: str
    max_value: float
    max_residual: float
    tol: float
    kappa: float = 1.0

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def make_spectral_density(alpha: float, q1: float, lam: float,
                          t_min: float = 1e-3,
                          tail_budget: float = 1e-10) -> SpectralDensity:
    """Construct parameters with deterministic ``delta`` and ``r_max``.

    ``delta`` is the bisection root of ``r + q1 r^alpha = lam/2`` (the
    largest split point satisfying the smallness condition with equality);
    ``r_max`` is doubled until the analytic tail bound at ``t_min`` drops
    below ``tail_budget`` relative to the certified lower envelope of the
    solution, which makes it sufficient for every ``t >= t_min``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if q1 <= 0.0 or lam <= 0.0:
        raise ValidationError("q1 and lam must be positive")
    if t_min <= 0.0:
        raise ValidationError("t_min must be positive")
    delta = brentq(lambda r: r + q1 * r ** alpha - lam / 2.0,
                   1e-300, lam, xtol=1e-300, rtol=8.9e-16)
    floor = _lower_envelope(alpha, q1, lam, t_min)
    r_max = max(2.0 * delta, lam + 1.0)
    while _tail_bound(alpha, q1, delta, r_max, t_min) > tail_budget * floor:
        r_max *= 2.0
        if r_max > 1e300:
            raise ValidationError("tail budget unreachable; increase t_min")
    return SpectralDensity(alpha, q1, lam, delta, r_max)


def _lower_envelope(alpha: float, q1: float, lam: float, t: float) -> float:
    # certified v(t) >= this: the density dominates
    # lam*q1*sin(a pi)/(pi (lam+q1)^2) * r^(a-1) on (0, min(1, 2 lam)]
    m = min(1.0, 2.0 * lam)
    mass = gammainc(alpha, m * t) * gamma_fn(alpha) / t ** alpha
    return lam * q1 * math.sin(math.pi * alpha) \
        / (math.pi * (lam + q1) ** 2) * mass


def _tail_bound(alpha: float, q1: float, delta: float, r_max: float,
                t: float) -> float:
    # integral over (r_max, inf) of exp(-rt) * (1 + q1 r^{alpha-1}) /
    # (pi q1 sin(a pi) delta^a); the bracket bounds H beyond delta
    pref = 1.0 / (math.pi * q1 * math.sin(math.pi * alpha) * delta ** alpha)
    exp_part = math.exp(-r_max * t) / t
    frac_part = q1 * gamma_fn(alpha) * gammaincc(alpha, r_max * t) / t ** alpha
    return pref * (exp_part + frac_part)


def spectral_density(params: SpectralDensity, r):
    """Evaluate ``H(r)``; strictly positive for every ``r > 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise ValidationError("r must be positive")
    a, q1, lam = params.alpha, params.q1, params.lam
    ra = r ** a
    den = (lam - r) ** 2 + q1 * q1 * ra * ra \
        + 2.0 * (lam - r) * q1 * ra * np.cos(math.pi * a)
    out = lam * q1 * np.sin(math.pi * a) * r ** (a - 1.0) / (math.pi * den)
    return float(out) if out.ndim == 0 else out


def _relaxation_integral(params: SpectralDensity, t: float,
                         rel_budget: float = 1e-9) -> float:
    """``int_0^inf exp(-rt) H(r) dr`` with certified truncation.

    Split: graded Gauss cell over ``(0, min(delta, 20/t)]`` carrying the
    ``r^(a-1)`` weight, adaptive quadrature up to ``r_max``, and the
    analytic tail bound checked against the budget.
    """
    a, q1, lam = params.alpha, params.q1, params.lam
    sin_pa = math.sin(math.pi * a)
    cos_pa = math.cos(math.pi * a)
    pref = lam * q1 * sin_pa / math.pi

    def smooth(r):
        ra = r ** a
        den = (lam - r) ** 2 + q1 * q1 * ra * ra + 2.0 * (lam - r) * q1 * ra * cos_pa
        return pref * np.exp(-r * t) / den

    cell = min(params.delta, 20.0 / t)
    part = singular_power_integral(smooth, a - 1.0, cell)
    mid = 0.0
    if params.r_max > cell:
        pts = [lam] if cell < lam < params.r_max else None
        mid, _ = quad(lambda r: r ** (a - 1.0) * smooth(r), cell, params.r_max,
                      epsabs=max(1e-300, 0.01 * rel_budget * part),
                      epsrel=1e-12, limit=500, points=pts)
    value = part + mid
    tail = _tail_bound(a, q1, params.delta, params.r_max, t)
    if tail > rel_budget * abs(value):
        # a radius with exp(-r t) ~ budget * value is certainly enough
        need = params.r_max
        while _tail_bound(a, q1, params.delta, need, t) > rel_budget * abs(value):
            need *= 2.0
        raise TruncationError(params.r_max, need)
    return value


def solve_spectral(params: SpectralDensity, v0: float, times) -> Trajectory:
    """Pointwise spectral solution ``v(t) = v0 * int exp(-rt) H dr``.

    Evaluation times need not be uniform; each point costs one quadrature.
    The error budget is 1e-8 relative.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0.0):
        raise ValidationError("all evaluation times must be positive")
    if v0 == 0.0:
        return Trajectory.from_states(times, np.zeros(times.size))
    values = v0 * np.array([_relaxation_integral(params, t) for t in times])
    return Trajectory.from_states(times, values)


def solve_l1(problem: FracOdeProblem, grid: TimeGrid) -> Trajectory:
    """Implicit L1 march for the mixed-order relaxation equation.

    Every left-hand coefficient ``1/tau + sum_j q_j b_0 + lam`` is positive,
    so each step is unconditionally solvable.
    """
    if abs(grid.t_start) > 1e-14:
        raise ValidationError("grid must start at t = 0")
    if grid.t_end < problem.horizon * (1.0 - 1e-12):
        raise ValidationError("grid must cover [0, horizon]")
    n = grid.n_steps
    tau = grid.tau
    q = problem.spec.coefficient_samples(grid.points)
    weights = [L1Weights.build(a, tau, n).b for a in problem.spec.alphas]
    # reversed increments of the weight sequence give contiguous history dots
    drev = [np.concatenate(([0.0], (w[:-1] - w[1:])[::-1])) for w in weights]
    f = problem.forcing_values(grid.points)
    v = np.empty(n + 1)
    v[0] = problem.v0
    for i in range(1, n + 1):
        lhs = 1.0 / tau + problem.lam
        rhs = v[i - 1] / tau + f[i]
        for j, w in enumerate(weights):
            qj = q[j, i]
            lhs += qj * w[0]
            hist = w[i - 1] * v[0]
            if i > 1:
                hist += np.dot(drev[j][n - i + 1:], v[1:i])
            rhs += qj * hist
        v[i] = rhs / lhs
    return Trajectory.from_states(grid.points.copy(), v)


def decay_constants(params: SpectralDensity, t0: float) -> DecayConstants:
    """Sharp-decay sandwich constants from the contour-splitting estimates.

    ``c_upper`` collects the singular-cell bound (via the delta condition)
    and the smooth-range bound; ``c_lower`` integrates the density's lower
    envelope on ``(0, 1)``, a lower incomplete gamma function.  For all
    ``t >= t0``: ``c_lower |v0| t^-a <= |v(t)| <= c_upper |v0| t^-a``.
    """
    if t0 <= 0.0:
        raise ValidationError("t0 must be positive")
    a, q1, lam = params.alpha, params.q1, params.lam
    sin_pa = math.sin(math.pi * a)
    c_upper = (2.0 / math.pi) * q1 * sin_pa * gamma_fn(a) \
        + (t0 ** (a - 1.0) + q1 * gamma_fn(a)) \
        / (math.pi * q1 * sin_pa * params.delta ** a)
    lower_gamma = gammainc(a, t0) * gamma_fn(a)
    c_lower = lam * q1 * sin_pa / (math.pi * (lam + q1) ** 2) * lower_gamma
    return DecayConstants(a, c_upper, c_lower, t0)


def _uniform_grid_of(traj: Trajectory) -> TimeGrid:
    return TimeGrid.from_points(traj.times)


def max_principle_check(w: Trajectory, spec: OrderSpec, lam: float,
                        tol: float) -> Verdict:
    """Discrete maximum principle: nonpositive data stays nonpositive.

    If the residual ``D_t w + sum q_j D^{a_j} w + lam w`` stays below
    ``tol`` and ``w(0) <= tol``, the values must stay below ``tol * kappa``
    with the reported amplification ``kappa``; otherwise the verdict is
    vacuous (hypotheses not met).
    """
    if w.states.ndim != 1:
        raise ValidationError("max principle check expects a scalar trajectory")
    grid = _uniform_grid_of(w)
    values = w.states
    residual = np.diff(values) / grid.tau \
        + multi_term_apply(values, spec, grid)[1:] + lam * values[1:]
    b0 = sum(spec.bounds[1] * L1Weights.build(a, grid.tau, 1).b[0]
             for a in spec.alphas)
    kappa = 1.0 + (grid.t_end - grid.t_start) * (max(lam, 0.0) + b0)
    max_res = float(residual.max()) if residual.size else 0.0
    applicable = max_res <= tol and values[0] <= tol
    if not applicable:
        return Verdict("vacuous", float(values.max()), max_res, tol, kappa)
    status = "pass" if values.max() <= tol * kappa else "fail"
    return Verdict(status, float(values.max()), max_res, tol, kappa)


def frac_derivative_sign_check(z: Trajectory, spec: OrderSpec, lam: float,
                               tol: float) -> Verdict:
    """Sign of the fractional derivative along nonnegative subsolutions.

    For ``z >= 0`` satisfying ``z' + q D^a z + lam z <= 0`` with
    ``0 < q_lower <= q(t)``, every ``D^{a_j} z`` must be nonpositive.  A
    violated hypothesis yields an inconclusive verdict, not a failure.
    """
    if lam <= 0.0:
        raise ValidationError("lam must be positive")
    if not spec.terms or spec.bounds[0] <= 0.0:
        raise ValidationError(
            "sign check requires at least one term with q_lower > 0")
    if z.states.ndim != 1:
        raise ValidationError("sign check expects a scalar trajectory")
    grid = _uniform_grid_of(z)
    values = z.states
    residual = np.diff(values) / grid.tau \
        + multi_term_apply(values, spec, grid)[1:] + lam * values[1:]
    max_res = float(residual.max()) if residual.size else 0.0
    if values.min() < -tol or max_res > tol:
        return Verdict("inconclusive", float(values.max()), max_res, tol)
    worst = 0.0
    for a in spec.alphas:
        worst = max(worst, float(caputo_l1(values, a, grid)[1:].max(initial=0.0)))
    status = "pass" if worst <= tol else "fail"
    return Verdict(status, worst, max_res, tol)
