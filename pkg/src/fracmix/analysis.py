"""Quantitative post-processing: decay fits, sandwich checks, envelopes.

Turns the proven inequalities into pass/fail artifacts: a log-log slope
estimate of the decay exponent, the pointwise ``t^-alpha`` sandwich, the
generalized Gronwall envelope, and the discrete energy residual
``D_t |u| + q D^a |u| + lam_1 |u|`` that must stay nonpositive (up to
scheme error) along decay-mode trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fraccalc import OrderSpec, TimeGrid, Trajectory, caputo_l1, multi_term_apply
from .fracode import DecayConstants
from .mlfunc import MLParams, mittag_leffler


@dataclass(frozen=True)
class DecayFit:
    """Least-squares power-law fit ``norm ~ exp(intercept) * t^slope``."""

    slope: float
    intercept: float
    window: tuple
    rms_residual: float
    n_points: int

    def __post_init__(self):
        if self.window[0] < 1.0:
            raise ValidationError("fit window must start at t >= 1")
        if self.n_points < 5:
            raise ValidationError("need at least 5 points in the fit window")


@dataclass(frozen=True)
class SandwichReport:
    """Pointwise check of ``c_lower |v0| t^-a <= |v| <= c_upper |v0| t^-a``.

    ``lower_margin`` is the smallest ratio value/lower-bound (must be >= 1)
    and ``upper_margin`` the largest ratio value/upper-bound (must be <= 1);
    a zero-data run with ``v0 = 0`` passes degenerately with unit margins.
    """

    passed: bool
    lower_margin: float
    upper_margin: float
    violating_index: int = -1


def fit_decay(times, norms, window) -> DecayFit:
    """Fit ``log norm`` against ``log t`` inside the window.

    The slope estimates the negated decay exponent.  A large RMS residual
    relative to the fit flags data that is not a power law (exponential
    decay, for instance).
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    t_min, t_max = float(window[0]), float(window[1])
    if t_min >= t_max:
        raise ValidationError("fit window must be nonempty")
    mask = (times >= t_min) & (times <= t_max)
    if np.count_nonzero(mask) < 5:
        raise ValidationError("need at least 5 points inside the fit window")
    if np.any(norms[mask] <= 0.0):
        raise ValidationError("decay fit is undefined for nonpositive norms")
    x = np.log(times[mask])
    y = np.log(norms[mask])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return DecayFit(float(slope), float(intercept), (t_min, t_max), rms,
                    int(np.count_nonzero(mask)))


def sandwich_check(times, values, constants: DecayConstants,
                   v0: float) -> SandwichReport:
    """Verify the sharp-decay sandwich pointwise for ``t >= t0``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(times < constants.t0 * (1.0 - 1e-12)):
        raise ValidationError("all times must be at or beyond constants.t0")
    decay = np.abs(v0) * times ** (-constants.alpha)
    lower = constants.c_lower * decay
    upper = constants.c_upper * decay
    mag = np.abs(values)
    lower_ratio = np.where(lower > 0.0, mag / np.where(lower > 0, lower, 1.0),
                           np.where(mag == 0.0, 1.0, np.inf))
    upper_ratio = np.where(upper > 0.0, mag / np.where(upper > 0, upper, 1.0),
                           np.where(mag == 0.0, 1.0, np.inf))
    bad = (lower_ratio < 1.0) | (upper_ratio > 1.0)
    idx = int(np.argmax(bad)) if bool(bad.any()) else -1
    return SandwichReport(passed=not bool(bad.any()),
                          lower_margin=float(lower_ratio.min()),
                          upper_margin=float(upper_ratio.max()),
                          violating_index=idx)


def gronwall_envelope(a, b: float, beta: float, grid: TimeGrid) -> np.ndarray:
    """Bound curve of the generalized Gronwall inequality.

    Any ``v >= 0`` with ``v(t) <= a(t) + b int_0^t (t-s)^{beta-1} v(s) ds``
    lies under ``a(t) + b Gamma(beta) int_0^t (t-s)^{beta-1}
    E_{beta,beta}(b Gamma(beta) (t-s)^beta) a(s) ds``.  The kernel is
    integrated exactly over each lag cell (its antiderivative is
    ``E_{beta,1}``), against midpoint values of ``a``.
    """
    if b < 0.0:
        raise ValidationError("b must be nonnegative")
    if not 0.0 < beta <= 1.0:
        raise ValidationError("beta must lie in (0, 1]")
    a = np.asarray(a, dtype=float)
    if a.shape != (grid.n_steps + 1,):
        raise ValidationError("a must be sampled on the grid")
    if np.any(a < 0.0):
        raise ValidationError("a must be nonnegative")
    n, tau = grid.n_steps, grid.tau
    if b == 0.0:
        return a.copy()
    c = b * math.gamma(beta)
    params = MLParams(beta, 1.0)
    lag = np.arange(n + 1) * tau
    anti = np.array([mittag_leffler(params, c * s ** beta).real for s in lag])
    masses = np.diff(anti)          # exact integral of the kernel per lag cell
    mids = 0.5 * (a[:-1] + a[1:])   # midpoint value of a on each time cell
    out = a.copy()
    for i in range(1, n + 1):
        out[i] += float(np.dot(masses[:i][::-1], mids[:i]))
    return out


def energy_residuals(traj: Trajectory, spec: OrderSpec,
                     lambda1: float) -> np.ndarray:
    """Discrete residual of the norm energy inequality at nodes 1..N.

    ``r_n = D_t |u|_n + sum_j q_j(t_n) D^{a_j} |u|_n + lambda1 |u|_n``;
    along decay-mode trajectories ``max r_n`` must shrink under grid
    refinement.  Length is ``N`` (node 0 has no backward difference).
    """
    if lambda1 <= 0.0:
        raise ValidationError("lambda1 must be positive")
    grid = TimeGrid.from_points(traj.times)
    norms = np.asarray(traj.norms, dtype=float)
    r = np.diff(norms) / grid.tau + lambda1 * norms[1:]
    r += multi_term_apply(norms, spec, grid)[1:]
    return r
