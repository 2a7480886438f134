"""Interval Dirichlet problem for the mixed-order diffusion equation.

Discretizes ``A = -d/dx(a(x) d/dx)`` in conservative flux form on a uniform
interior grid, and solves ``u' + q(t) D^a u = -Au + c u + f`` three ways:

* an implicit mixed-order L1 march (general coefficients),
* a modal oracle for constant coefficients (each eigenmode reduces exactly
  to a scalar relaxation problem),
* Picard iteration on the fixed-point form ``u = F + Ku`` where ``F`` is
  the parabolic Duhamel solution and ``K`` convolves the heat semigroup
  with ``c u - q D^a u``.

The discrete inner product is ``h``-weighted, so the eigenbasis is
orthonormal in the same norm used for decay tracking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .errors import EllipticityError, SingularSystemError, ValidationError
from .fraccalc import L1Weights, OrderSpec, TimeGrid, Trajectory, caputo_l1
from . import fracode
from ._threads import parallel_map

Field = Optional[Union[float, Callable[[np.ndarray, float], np.ndarray]]]


@dataclass(frozen=True)
class EllipticOp1D:
    """Dirichlet flux-form discretization of ``-d/dx(a(x) d/dx)`` on (0, L).

    ``eigenvectors[:, k]`` are orthonormal in the discrete L2 inner product
    ``h * sum``; eigenvalues are ascending and positive.
    """

    length: float
    n_x: int
    h: float
    x: np.ndarray = field(repr=False, compare=False)
    a_mid: np.ndarray = field(repr=False, compare=False)
    nu: float = 0.0
    diag: np.ndarray = field(default=None, repr=False, compare=False)
    off: np.ndarray = field(default=None, repr=False, compare=False)
    eigenvalues: np.ndarray = field(default=None, repr=False, compare=False)
    eigenvectors: np.ndarray = field(default=None, repr=False, compare=False)

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(self.h * np.dot(u, v))

    def norm(self, u: np.ndarray) -> float:
        return float(math.sqrt(self.h) * np.linalg.norm(u))

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[:-1] += self.off * u[1:]
        out[1:] += self.off * u[:-1]
        return out

    def project(self, g: np.ndarray) -> np.ndarray:
        """Modal coefficients ``d_k = <g, phi_k>_h``."""
        return self.h * (self.eigenvectors.T @ g)

    def reconstruct(self, coeffs: np.ndarray) -> np.ndarray:
        return self.eigenvectors @ coeffs


def build_operator(length: float, n_x: int, a, nu: float) -> EllipticOp1D:
    """Assemble the stiffness matrix and its eigendecomposition.

    ``a`` is a float or callable diffusivity sampled at cell midpoints; any
    sample below the ellipticity floor ``nu`` aborts.
    """
    if n_x < 3:
        raise ValidationError("need at least 3 interior points")
    if length <= 0.0:
        raise ValidationError("length must be positive")
    if nu <= 0.0:
        raise ValidationError("ellipticity floor nu must be positive")
    h = length / (n_x + 1)
    x = h * np.arange(1, n_x + 1)
    mid = h * (np.arange(n_x + 1) + 0.5)
    if callable(a):
        a_mid = np.array([float(a(m)) for m in mid])
    else:
        a_mid = np.full(n_x + 1, float(a))
    if np.any(a_mid < nu):
        worst = mid[int(np.argmin(a_mid))]
        raise EllipticityError(
            f"diffusivity {a_mid.min():.6g} at x={worst:.6g} is below nu={nu:g}")
    diag = (a_mid[:-1] + a_mid[1:]) / h ** 2
    off = -a_mid[1:-1] / h ** 2
    lam, vec = eigh_tridiagonal(diag, off)
    vec = vec / math.sqrt(h)
    # fix an eigenvector sign convention so outputs are reproducible
    signs = np.sign(vec[np.argmax(np.abs(vec), axis=0), np.arange(n_x)])
    vec = vec * signs
    for arr in (x, mid, a_mid, diag, off, lam, vec):
        arr.setflags(write=False)
    return EllipticOp1D(length=float(length), n_x=n_x, h=h, x=x, a_mid=a_mid,
                        nu=float(nu), diag=diag, off=off,
                        eigenvalues=lam, eigenvectors=vec)


def semigroup_apply(op: EllipticOp1D, t: float, g: np.ndarray) -> np.ndarray:
    """``e^{-tA} g`` by eigenexpansion; identity at ``t = 0``."""
    if t < 0.0:
        raise ValidationError("t must be nonnegative")
    coeffs = op.project(np.asarray(g, dtype=float))
    return op.reconstruct(np.exp(-op.eigenvalues * t) * coeffs)


@dataclass(frozen=True)
class MixedProblem:
    """Initial-boundary value problem data on a fixed operator.

    ``c`` and ``f`` may be None, a constant, or callables ``(x, t)`` taking
    the full interior-node array.  With ``decay_mode`` set, ``f`` must be
    absent and ``c`` is sample-checked to be nonpositive.
    """

    op: EllipticOp1D
    spec: OrderSpec
    u0: np.ndarray
    horizon: float
    c: Field = None
    f: Field = None
    decay_mode: bool = False

    def __post_init__(self):
        u0 = np.asarray(self.u0, dtype=float)
        if u0.shape != (self.op.n_x,):
            raise ValidationError("u0 must be sampled on the interior grid")
        object.__setattr__(self, "u0", u0)
        if self.horizon <= 0.0:
            raise ValidationError("horizon must be positive")
        if self.decay_mode and self.f is not None:
            raise ValidationError("decay mode requires f = 0")

    def c_values(self, t: float) -> Optional[np.ndarray]:
        if self.c is None:
            return None
        if callable(self.c):
            return np.asarray(self.c(self.op.x, t), dtype=float) \
                * np.ones(self.op.n_x)
        return np.full(self.op.n_x, float(self.c))

    def f_values(self, t: float) -> Optional[np.ndarray]:
        if self.f is None:
            return None
        if callable(self.f):
            return np.asarray(self.f(self.op.x, t), dtype=float) \
                * np.ones(self.op.n_x)
        return np.full(self.op.n_x, float(self.f))

    def check_decay_hypotheses(self, times: np.ndarray) -> None:
        if not self.decay_mode:
            raise ValidationError("problem is not flagged for decay mode")
        for t in times:
            c = self.c_values(t)
            if c is not None and c.max() > 0.0:
                raise ValidationError(
                    f"decay mode requires c <= 0; found c={c.max():.3g} at t={t:g}")


def solve_mixed_l1(problem: MixedProblem, grid: TimeGrid) -> Trajectory:
    """Implicit L1 march: one tridiagonal solve per step.

    The shifted system ``(1/tau + sum q_j b_0) I + S - C_n`` is positive
    definite whenever ``c <= 0``; a reaction exceeding the shift can break
    the solve, which is reported with the offending step.
    """
    op = problem.op
    if abs(grid.t_start) > 1e-14:
        raise ValidationError("grid must start at t = 0")
    if grid.t_end < problem.horizon * (1.0 - 1e-12):
        raise ValidationError("grid must cover [0, horizon]")
    if problem.decay_mode:
        problem.check_decay_hypotheses(grid.points[:: max(1, grid.n_steps // 16)])
    n, tau = grid.n_steps, grid.tau
    q = problem.spec.coefficient_samples(grid.points)
    weights = [L1Weights.build(a, tau, n).b for a in problem.spec.alphas]
    drev = [np.concatenate(([0.0], (w[:-1] - w[1:])[::-1])) for w in weights]

    states = np.empty((n + 1, op.n_x))
    states[0] = problem.u0
    ab = np.empty((3, op.n_x))
    for i in range(1, n + 1):
        t_i = grid.points[i]
        shift = 1.0 / tau
        rhs = states[i - 1] / tau
        f_i = problem.f_values(t_i)
        if f_i is not None:
            rhs = rhs + f_i
        for j, w in enumerate(weights):
            qj = q[j, i]
            shift += qj * w[0]
            hist = w[i - 1] * states[0]
            if i > 1:
                hist = hist + drev[j][n - i + 1:] @ states[1:i]
            rhs = rhs + qj * hist
        diag = op.diag + shift
        c_i = problem.c_values(t_i)
        if c_i is not None:
            diag = diag - c_i
        ab[0, 0] = 0.0
        ab[0, 1:] = op.off
        ab[1] = diag
        ab[2, :-1] = op.off
        ab[2, -1] = 0.0
        try:
            u_i = solve_banded((1, 1), ab, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover
            raise SingularSystemError(i, str(exc)) from exc
        if not np.all(np.isfinite(u_i)):
            raise SingularSystemError(
                i, "non-finite solution; reaction exceeds the implicit shift")
        states[i] = u_i
    return Trajectory.from_states(grid.points.copy(), states, norm_weight=op.h)


def _constant_coefficients(problem: MixedProblem) -> tuple:
    """(q_values, c_value) when both are time-independent, else error."""
    if not problem.spec.is_constant:
        raise ValidationError("modal oracle requires constant q coefficients")
    if problem.c is None:
        c_val = 0.0
    elif callable(problem.c):
        raise ValidationError("modal oracle requires constant c")
    else:
        c_val = float(problem.c)
    if c_val > 0.0:
        raise ValidationError("modal oracle requires c <= 0")
    return tuple(q for _, q in problem.spec.terms), c_val


def modal_oracle(problem: MixedProblem, times) -> Trajectory:
    """Eigenfunction-expansion solution for constant coefficients.

    Each active mode ``k`` carries the scalar relaxation factor with
    ``lam = lam_k - c``: the spectral quadrature for a single fractional
    term, the scalar L1 march otherwise.  Modes with negligible initial
    content are skipped.
    """
    if problem.f is not None:
        raise ValidationError("modal oracle handles source-free problems")
    qs, c_val = _constant_coefficients(problem)
    op = problem.op
    times = np.asarray(times, dtype=float)
    if np.any(times <= 0.0):
        raise ValidationError("modal oracle needs positive evaluation times")
    coeffs = op.project(problem.u0)
    u0_norm = float(np.linalg.norm(coeffs))
    factors = np.zeros((op.n_x, times.size))
    active = np.nonzero(np.abs(coeffs) > 1e-14 * max(u0_norm, 1e-300))[0]
    single = len(qs) == 1

    def factor_for(k: int) -> np.ndarray:
        lam_eff = float(op.eigenvalues[k]) - c_val
        if single:
            dens = fracode.make_spectral_density(
                problem.spec.alphas[0], qs[0], lam_eff, t_min=float(times.min()))
            return fracode.solve_spectral(dens, 1.0, times).states
        return _modal_l1_factor(problem.spec, lam_eff, times)

    for k, row in zip(active, parallel_map(factor_for, active)):
        factors[k] = row
    states = (factors.T * coeffs) @ op.eigenvectors.T
    return Trajectory.from_states(times, states, norm_weight=op.h)


def _modal_l1_factor(spec: OrderSpec, lam: float, times: np.ndarray) -> np.ndarray:
    # multi-term modes have no spectral form; march and interpolate.
    # The step count is capped, so very long horizons lose accuracy here.
    t_end = float(times.max())
    n = max(2048, min(int(round(t_end * 1024)), 65536))
    grid = TimeGrid(0.0, t_end, n)
    prob = fracode.FracOdeProblem(spec=spec, lam=lam, v0=1.0, horizon=t_end)
    traj = fracode.solve_l1(prob, grid)
    return np.interp(times, traj.times, traj.states)


def duhamel_source(op: EllipticOp1D, u0: np.ndarray, f: Field,
                   grid: TimeGrid) -> Trajectory:
    """Parabolic Duhamel solution ``F(t) = e^{-tA} u0 + int e^{-(t-s)A} f ds``.

    The convolution is advanced by the one-step recurrence
    ``I(t_n) = e^{-lam tau} I(t_{n-1}) + cell`` with the exponential kernel
    integrated exactly against piecewise-linear data, so the only error is
    the interpolation of ``f``.
    """
    u0 = np.asarray(u0, dtype=float)
    d0 = op.project(u0)
    if f is None:
        f_hat = None
    else:
        rows = []
        for t in grid.points:
            if callable(f):
                rows.append(np.asarray(f(op.x, t), dtype=float) * np.ones(op.n_x))
            else:
                rows.append(np.full(op.n_x, float(f)))
        f_hat = np.stack(rows) @ op.eigenvectors * op.h
    amps = _duhamel_amplitudes(op.eigenvalues, d0, f_hat, grid)
    states = amps @ op.eigenvectors.T
    return Trajectory.from_states(grid.points.copy(), states, norm_weight=op.h)


def _exp_cell_coefficients(lam_tau: np.ndarray, tau: float):
    """Exact moments ``P = int_0^tau e^{-lam s} ds`` and ``Q`` (s-moment)."""
    x = lam_tau
    lam = x / tau
    p = -np.expm1(-x) / lam
    q = np.empty_like(x)
    small = x < 1e-3
    xs = x[small]
    # series of (1 - e^-x (1+x)) / x^2 to avoid cancellation
    q_small = 0.5 - xs / 3.0 + xs ** 2 / 8.0 - xs ** 3 / 30.0 + xs ** 4 / 144.0
    q[small] = q_small * tau ** 2
    xl = x[~small]
    q[~small] = (1.0 - np.exp(-xl) * (1.0 + xl)) / (xl / tau) ** 2
    return p, q


def _duhamel_amplitudes(lams: np.ndarray, d0: np.ndarray,
                        f_hat, grid: TimeGrid) -> np.ndarray:
    n, tau = grid.n_steps, grid.tau
    amps = np.exp(-np.outer(grid.points, lams)) * d0
    if f_hat is not None:
        e_tau = np.exp(-lams * tau)
        p, q = _exp_cell_coefficients(lams * tau, tau)
        w_new = p - q / tau
        w_old = q / tau
        conv = np.zeros(lams.size)
        for i in range(1, n + 1):
            conv = e_tau * conv + w_new * f_hat[i] + w_old * f_hat[i - 1]
            amps[i] += conv
    return amps


@dataclass(frozen=True)
class PicardReport:
    """Iteration diagnostics for the fixed-point solve."""

    converged: bool
    iterations: int
    updates: tuple
    contraction_factors: tuple
    residual: float

    @property
    def message(self) -> str:
        if self.converged:
            return f"converged in {self.iterations} iterations"
        return ("did not converge; last contraction factor "
                f"{self.contraction_factors[-1]:.3g} - restart on a shorter "
                "horizon (the fixed point exists but global contraction "
                "is only guaranteed for small T)")


def picard_solve(problem: MixedProblem, grid: TimeGrid, max_iter: int = 50,
                 tol: float = 1e-8):
    """Successive substitution on ``u = F + Ku``.

    ``K`` applies the Duhamel machinery to ``c u - sum_j q_j D^{a_j} u``
    (modal exponential recurrences; Caputo terms by the L1 operator on the
    iterate's history).  Returns the trajectory and a :class:`PicardReport`;
    non-convergence is reported, not raised.
    """
    if tol <= 0.0:
        raise ValidationError("tol must be positive")
    op = problem.op
    if abs(grid.t_start) > 1e-14 or grid.t_end < problem.horizon * (1.0 - 1e-12):
        raise ValidationError("grid must cover [0, horizon]")
    n = grid.n_steps
    lams = op.eigenvalues
    q = problem.spec.coefficient_samples(grid.points)
    c_const = None if callable(problem.c) else problem.c
    c_rows = None
    if callable(problem.c):
        c_rows = np.stack([problem.c_values(t) for t in grid.points])

    f_hat = None
    if problem.f is not None:
        f_hat = np.stack([problem.f_values(t) for t in grid.points]) \
            @ op.eigenvectors * op.h
    base = _duhamel_amplitudes(lams, op.project(problem.u0), f_hat, grid)

    def apply_k(u_hat: np.ndarray) -> np.ndarray:
        g_hat = np.zeros_like(u_hat)
        if c_rows is not None:
            u_phys = u_hat @ op.eigenvectors.T
            g_hat += (c_rows * u_phys) @ op.eigenvectors * op.h
        elif c_const is not None and c_const != 0.0:
            g_hat += float(c_const) * u_hat
        for j, (alpha, _) in enumerate(problem.spec.terms):
            g_hat -= q[j][:, None] * caputo_l1(u_hat, alpha, grid)
        return _duhamel_amplitudes(lams, np.zeros(lams.size), g_hat, grid)

    u_hat = base.copy()
    updates = []
    for _ in range(max_iter):
        u_next = base + apply_k(u_hat)
        delta = float(np.max(np.linalg.norm(u_next - u_hat, axis=1)))
        updates.append(delta)
        u_hat = u_next
        if delta <= tol:
            break
    converged = bool(updates and updates[-1] <= tol)
    residual = float(np.max(np.linalg.norm(u_hat - base - apply_k(u_hat), axis=1)))
    factors = tuple(b / a for a, b in zip(updates, updates[1:]) if a > 0.0)
    states = u_hat @ op.eigenvectors.T
    traj = Trajectory.from_states(grid.points.copy(), states, norm_weight=op.h)
    report = PicardReport(converged, len(updates), tuple(updates),
                          factors, residual)
    return traj, report


@dataclass(frozen=True)
class DecayCheck:
    """Upper-bound certificate attached to a decay run."""

    constants: fracode.DecayConstants
    ratios: np.ndarray
    upper_ok: bool
    upper_margin: float


def decay_run(problem: MixedProblem, t_points, t0: float = 1.0,
              n_steps: int = 4096):
    """Norm decay at the requested times plus the sharp-decay certificate.

    Constant-coefficient problems go through the modal oracle (no history
    cost at long horizons); time-dependent coefficients march with the L1
    stepper, which covers moderate horizons only.  Emits the ratio sequence
    ``|u(t)| t^alpha / |u0|`` and checks the theorem's upper bound with the
    ODE constants at ``q1 = q_upper`` and ``lam = lam_1``.
    """
    t_points = np.asarray(t_points, dtype=float)
    if np.any(t_points <= 0.0):
        raise ValidationError("decay run needs positive times")
    if not problem.spec.terms:
        raise ValidationError("decay run requires at least one fractional term")
    problem.check_decay_hypotheses(t_points)
    op = problem.op
    alpha = problem.spec.alphas[0]
    constant = problem.spec.is_constant and not callable(problem.c)
    if constant:
        traj = modal_oracle(problem, t_points)
        eval_times = t_points
    else:
        t_end = float(t_points.max())
        if t_end > 200.0:
            raise ValidationError(
                "time-dependent coefficients march with the L1 stepper; "
                "keep the horizon at or below 200")
        grid = TimeGrid(0.0, t_end, n_steps)
        full = solve_mixed_l1(problem, grid)
        idx = np.clip(np.round(t_points / grid.tau).astype(int), 1, grid.n_steps)
        eval_times = full.times[idx]
        traj = Trajectory(eval_times, full.states[idx], full.norms[idx],
                          norm_weight=op.h)
    u0_norm = op.norm(problem.u0)
    ratios = traj.norms * eval_times ** alpha / u0_norm if u0_norm > 0.0 \
        else np.zeros(t_points.size)
    dens = fracode.make_spectral_density(
        alpha, problem.spec.bounds[1], float(op.eigenvalues[0]),
        t_min=min(1.0, float(t_points.min())))
    constants = fracode.decay_constants(dens, t0)
    mask = eval_times >= t0
    bound = constants.c_upper * u0_norm * eval_times[mask] ** (-alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        margins = np.where(bound > 0.0, traj.norms[mask] / bound, 0.0)
    upper_margin = float(margins.max()) if margins.size else 0.0
    check = DecayCheck(constants, ratios, bool(upper_margin <= 1.0), upper_margin)
    return traj, check
