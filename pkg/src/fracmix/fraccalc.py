"""Discrete fractional calculus on uniform time grids.

Provides the L1 (piecewise-linear) Caputo derivative, the product-trapezoid
Riemann-Liouville integral with exact kernel moments, the multi-term
operator, and the coercivity-gap functional
``I(t_n) = <y_n, D^a y_n> - |y_n| D^a |y|_n``.

The L1 weights ``b_k = ((k+1)^{1-a} - k^{1-a}) tau^{-a} / Gamma(2-a)`` are
positive and strictly decreasing; applying them to both the vector states
and the scalar norm sequence makes the discrete coercivity gap nonnegative
by the same Abel-summation argument as in the continuous case, up to
convolution roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import rgamma

from .errors import ValidationError

Coefficient = Union[float, Callable[[float], float]]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[t_start, t_end]`` with ``n_steps`` steps.

    Graded grids are rejected in v1; every operator here assumes a constant
    step ``tau``.
    """

    t_start: float
    t_end: float
    n_steps: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.t_start < 0.0:
            raise ValidationError("t_start must be nonnegative")
        if not self.t_end > self.t_start:
            raise ValidationError("t_end must exceed t_start")
        if self.n_steps < 1:
            raise ValidationError("n_steps must be positive")
        pts = np.linspace(self.t_start, self.t_end, self.n_steps + 1)
        object.__setattr__(self, "points", pts)
        self.points.setflags(write=False)

    @property
    def tau(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @classmethod
    def from_points(cls, points: Sequence[float]) -> "TimeGrid":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValidationError("need at least two grid points")
        steps = np.diff(pts)
        if np.any(steps <= 0.0):
            raise ValidationError("grid points must be strictly increasing")
        tau = steps[0]
        if np.max(np.abs(steps - tau)) > 1e-12 * max(tau, 1.0):
            raise ValidationError("graded grids are rejected; spacing must be uniform")
        return cls(float(pts[0]), float(pts[-1]), pts.size - 1)


@dataclass(frozen=True)
class L1Weights:
    """Convolution weights of the L1 Caputo discretization."""

    alpha: float
    tau: float
    b: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def build(cls, alpha: float, tau: float, n: int) -> "L1Weights":
        if not 0.0 < alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
        if tau <= 0.0:
            raise ValidationError("tau must be positive")
        k = np.arange(n, dtype=float)
        b = ((k + 1.0) ** (1.0 - alpha) - k ** (1.0 - alpha)) \
            * tau ** (-alpha) * rgamma(2.0 - alpha)
        b.setflags(write=False)
        return cls(alpha, tau, b)


@dataclass(frozen=True)
class OrderSpec:
    """Fractional orders with time-dependent coefficients.

    ``terms`` pairs each order with a coefficient that is either a plain
    float (constant in time) or a callable of ``t``.  ``bounds`` is the
    declared envelope ``q_lower <= q_j(t) <= q_upper``; samples are checked
    against it whenever coefficients are evaluated on a grid.
    """

    terms: tuple
    bounds: tuple

    def __post_init__(self):
        terms = tuple((float(a), q) for a, q in self.terms)
        object.__setattr__(self, "terms", terms)
        lo, up = (float(b) for b in self.bounds)
        object.__setattr__(self, "bounds", (lo, up))
        if lo < 0.0 or up < lo:
            raise ValidationError(f"bounds must satisfy 0 <= q_lower <= q_upper, got {self.bounds}")
        alphas = [a for a, _ in terms]
        if any(not 0.0 < a < 1.0 for a in alphas):
            raise ValidationError("every order must lie in (0, 1)")
        if any(a2 <= a1 for a1, a2 in zip(alphas, alphas[1:])):
            raise ValidationError("orders must be strictly increasing")

    @classmethod
    def constant(cls, alpha: float, q: float) -> "OrderSpec":
        return cls(terms=((alpha, float(q)),), bounds=(float(q), float(q)))

    @classmethod
    def empty(cls) -> "OrderSpec":
        return cls(terms=(), bounds=(0.0, 0.0))

    @property
    def alphas(self) -> tuple:
        return tuple(a for a, _ in self.terms)

    @property
    def is_constant(self) -> bool:
        return all(not callable(q) for _, q in self.terms)

    def coefficient_samples(self, times: np.ndarray) -> np.ndarray:
        """Evaluate every ``q_j`` on ``times``; shape ``(n_terms, len(times))``.

        Raises if any sample escapes the declared envelope.
        """
        times = np.asarray(times, dtype=float)
        out = np.empty((len(self.terms), times.size))
        lo, up = self.bounds
        for j, (_, q) in enumerate(self.terms):
            vals = np.array([q(t) for t in times]) if callable(q) \
                else np.full(times.size, q, dtype=float)
            if vals.size and (vals.min() < lo - 1e-12 or vals.max() > up + 1e-12):
                raise ValidationError(
                    f"coefficient q_{j} leaves the declared envelope "
                    f"[{lo}, {up}]: range [{vals.min()}, {vals.max()}]")
            out[j] = vals
        return out


@dataclass(frozen=True)
class Trajectory:
    """Time series of scalar or vector states with an L2-norm track.

    ``states`` has shape ``(n_times,)`` for scalars or ``(n_times, dim)``;
    ``norms[i]`` is the weighted norm of ``states[i]`` and is recomputable
    from the states and ``norm_weight`` (the discrete measure ``h`` of one
    cell; 1 for scalars).
    """

    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    norm_weight: float = 1.0

    @classmethod
    def from_states(cls, times, states, norm_weight: float = 1.0) -> "Trajectory":
        times = np.asarray(times, dtype=float)
        states = np.asarray(states, dtype=float)
        if states.shape[0] != times.size:
            raise ValidationError("states and times disagree in length")
        if states.ndim == 1:
            norms = np.abs(states) * np.sqrt(norm_weight)
        else:
            norms = np.sqrt(norm_weight * np.sum(states * states, axis=1))
        return cls(times, states, norms, norm_weight)


def _check_grid_values(values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape[0] != grid.n_steps + 1:
        raise ValidationError(
            f"expected {grid.n_steps + 1} samples on the grid, got {values.shape[0]}")
    return values


def caputo_l1(values, alpha: float, grid: TimeGrid) -> np.ndarray:
    """L1 Caputo derivative of a sampled function; exact on affine inputs.

    Accepts scalar sequences ``(N+1,)`` or vector sequences ``(N+1, d)``
    and returns the same shape; entry 0 is zero (the Caputo derivative of
    an absolutely continuous function vanishes at the origin).
    """
    values = _check_grid_values(values, grid)
    n = grid.n_steps
    w = L1Weights.build(alpha, grid.tau, n)
    diffs = np.diff(values, axis=0)
    kernel = w.b if diffs.ndim == 1 else w.b[:, None]
    conv = fftconvolve(diffs, kernel, axes=0)[:n]
    out = np.zeros_like(values)
    out[1:] = conv
    return out


def rl_integral(values, gamma: float, grid: TimeGrid) -> np.ndarray:
    """Riemann-Liouville integral ``J^gamma`` by product trapezoid.

    The kernel moments on each cell are integrated exactly against the
    piecewise-linear interpolant, so no accuracy is lost at the weakly
    singular cell adjacent to ``t``.
    """
    if gamma <= 0.0:
        raise ValidationError(f"gamma must be positive, got {gamma}")
    values = _check_grid_values(values, grid)
    n = grid.n_steps
    tau = grid.tau
    m = np.arange(1, n + 1, dtype=float)
    # A_m = int over lag cell of sigma^{gamma-1}, B_m the sigma-moment
    a_m = (m ** gamma - (m - 1.0) ** gamma) * tau ** gamma / gamma
    b_m = (m ** (gamma + 1.0) - (m - 1.0) ** (gamma + 1.0)) \
        * tau ** (gamma + 1.0) / (gamma + 1.0)
    w_left = (1.0 - m) * a_m + b_m / tau     # multiplies y_{n-m}
    w_right = m * a_m - b_m / tau            # multiplies y_{n-m+1}
    scale = rgamma(gamma)
    out = np.zeros_like(values)
    for i in range(1, n + 1):
        left = np.tensordot(w_left[:i], values[i - 1::-1][:i], axes=(0, 0))
        right = np.tensordot(w_right[:i], values[i:0:-1][:i], axes=(0, 0))
        out[i] = scale * (left + right)
    return out


def coercivity_gap(vectors, alpha: float, grid: TimeGrid) -> np.ndarray:
    """Discrete gap ``<y_n, D^a y_n> - |y_n| D^a |y|_n`` at every node.

    Both fractional derivatives use the same L1 weights, which makes the
    gap the exact scheme-level analogue of the coercivity inequality.  At a
    node with ``|y_n| = 0`` the norm-derivative term is dropped (the
    inequality is vacuous there).
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2:
        raise ValidationError("expected a vector-valued sequence of shape (N+1, d)")
    vectors = _check_grid_values(vectors, grid)
    d_vec = caputo_l1(vectors, alpha, grid)
    norms = np.sqrt(np.sum(vectors * vectors, axis=1))
    d_norm = caputo_l1(norms, alpha, grid)
    gap = np.sum(vectors * d_vec, axis=1)
    nonzero = norms > 0.0
    gap[nonzero] -= norms[nonzero] * d_norm[nonzero]
    return gap


def multi_term_apply(values, spec: OrderSpec, grid: TimeGrid) -> np.ndarray:
    """``sum_j q_j(t_n) (D^{a_j} y)(t_n)``; empty specs give zeros."""
    values = _check_grid_values(values, grid)
    out = np.zeros_like(values)
    if not spec.terms:
        return out
    q = spec.coefficient_samples(grid.points)
    for j, (alpha, _) in enumerate(spec.terms):
        deriv = caputo_l1(values, alpha, grid)
        qj = q[j] if deriv.ndim == 1 else q[j][:, None]
        out += qj * deriv
    return out
