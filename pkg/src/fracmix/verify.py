"""Seeded invariant suite behind the CLI ``verify`` mode.

Every check draws its randomness from one ``numpy.random.Generator`` with
the PCG64 bit generator seeded by the single run seed, so reruns are
byte-identical and other implementations can regenerate the streams.
Checks report a numeric margin and a threshold; a check passes when the
margin respects the threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from . import analysis, fracode, mlfunc, pde1d
from .fraccalc import (L1Weights, OrderSpec, TimeGrid, Trajectory, caputo_l1,
                       coercivity_gap, multi_term_apply, rl_integral)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    direction: str  # "<=" or ">="


def _le(name, value, threshold):
    return CheckResult(name, bool(value <= threshold), float(value),
                       float(threshold), "<=")


def _ge(name, value, threshold):
    return CheckResult(name, bool(value >= threshold), float(value),
                       float(threshold), ">=")


def draw_fourier_coefficients(rng, count, dim, modes=4):
    """Random smooth trajectory coefficients with a 1/m^2 spectral decay."""
    decay = (1.0 + np.arange(modes, dtype=float)) ** -2
    return rng.normal(size=(count, dim, 2 * modes)) * np.concatenate([decay, decay])


def fourier_trajectory(coeffs, grid, modes=4):
    """Sample one coefficient set on a grid; sup-normalized to 1."""
    t = grid.points
    base = np.stack([np.cos(2 * np.pi * (m + 1) * t) for m in range(modes)]
                    + [np.sin(2 * np.pi * (m + 1) * t) for m in range(modes)])
    y = (coeffs @ base).T  # (N+1, dim)
    scale = np.abs(y).max()
    return y / scale if scale > 0 else y


def check_l1_weights(rng) -> list:
    worst_mono = np.inf
    worst_tel = 0.0
    for alpha in (0.2, 0.5, 0.8):
        for n in (16, 257, 1024):
            tau = 1.0 / n
            b = L1Weights.build(alpha, tau, n).b
            worst_mono = min(worst_mono, float(np.min(b[:-1] - b[1:])), float(b[-1]))
            tel = abs(np.sum(b) * tau ** alpha * gamma_fn(2.0 - alpha)
                      / n ** (1.0 - alpha) - 1.0)
            worst_tel = max(worst_tel, tel)
    return [_ge("l1_weights_monotone", worst_mono, 0.0),
            _le("l1_weights_telescope", worst_tel, 1e-12)]


def check_caputo_basics(rng) -> list:
    grid = TimeGrid(0.0, 1.0, 256)
    t = grid.points
    y1 = rng.normal(size=t.size)
    y2 = rng.normal(size=t.size)
    a, b = 1.7, -0.4
    lin = np.max(np.abs(caputo_l1(a * y1 + b * y2, 0.5, grid)
                        - a * caputo_l1(y1, 0.5, grid) - b * caputo_l1(y2, 0.5, grid)))
    affine = caputo_l1(2.0 + 3.0 * t, 0.4, grid)[1:]
    exact = 3.0 * t[1:] ** 0.6 / gamma_fn(1.6)
    return [_le("caputo_linearity", lin, 1e-11),
            _le("caputo_affine_exact", np.max(np.abs(affine - exact)), 1e-10)]


def check_rl_semigroup(rng) -> list:
    errs = []
    for n in (128, 256, 512):
        grid = TimeGrid(0.0, 1.0, n)
        y = np.sin(grid.points)
        direct = rl_integral(y, 0.7, grid)
        composed = rl_integral(rl_integral(y, 0.4, grid), 0.3, grid)
        errs.append(np.max(np.abs(direct - composed)))
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    return [_le("rl_semigroup_err", errs[-1], 5e-4),
            _ge("rl_semigroup_order", min(ratios), 1.8)]


def check_coercivity(rng) -> list:
    floor = 1e-10
    results = []
    for alpha in (0.2, 0.5, 0.8):
        suite = draw_fourier_coefficients(rng, 20, 5)
        mins = []
        for n in (512, 1024):
            grid = TimeGrid(0.0, 1.0, n)
            worst = min(float(coercivity_gap(fourier_trajectory(c, grid),
                                             alpha, grid).min())
                        for c in suite)
            mins.append(worst)
        neg = max(0.0, -mins[0])
        neg_fine = max(0.0, -mins[1])
        results.append(_ge(f"coercivity_min_gap_a{alpha}", mins[0], -1e-3))
        ok = neg_fine <= floor or neg_fine * 1.5 <= neg
        results.append(CheckResult(f"coercivity_shrink_a{alpha}", ok,
                                   neg_fine, max(floor, neg / 1.5), "<="))
    return results


def check_ml_identities(rng) -> list:
    out = []
    for alpha in (0.3, 0.5, 0.8):
        hs = [2e-3, 1e-3, 5e-4]
        r1 = [mlfunc.ml_derivative_residuals(alpha, 1.0, 1.0, h)[0] for h in hs]
        r2 = [mlfunc.ml_derivative_residuals(alpha, 1.0, 1.0, h)[1] for h in hs]
        p1 = math.log(r1[0] / r1[2]) / math.log(4.0)
        p2 = math.log(r2[0] / r2[2]) / math.log(4.0)
        out.append(_ge(f"ml_identity1_order_a{alpha}", p1, 1.8))
        out.append(_ge(f"ml_identity2_order_a{alpha}", p2, 1.2 - alpha))
    return out


def check_kernel_identity(rng) -> list:
    worst = 0.0
    for _ in range(20):
        beta = float(rng.uniform(0.05, 0.95))
        lam = float(rng.uniform(0.2, 20.0))
        s = float(rng.uniform(0.0, 2.0))
        t = s + float(rng.uniform(0.05, 3.0))
        direct, _ = quad(lambda u: math.exp(-lam * (u - s)), s, t,
                         weight="alg", wvar=(0.0, -beta),
                         epsabs=1e-14, epsrel=1e-12)
        direct /= gamma_fn(1.0 - beta)
        ml_side = mlfunc.exp_kernel_value(beta, lam, s, t)
        worst = max(worst, abs(direct - ml_side))
    return [_le("kernel_identity", worst, 1e-8)]


def check_ml_sector(rng) -> list:
    xs = np.logspace(math.log10(0.01), 4.0, 40)
    out = []
    for alpha, gam in ((0.3, 1.0), (0.6, 0.8), (0.85, 1.0)):
        params = mlfunc.MLParams(alpha, gam)
        vals = np.array([mlfunc.mittag_leffler(params, -x).real for x in xs])
        c_hat = float(np.max((1.0 + xs) * np.abs(vals)))
        out.append(_le(f"ml_sector_bound_a{alpha}", c_hat, 1e3))
        if gam == 1.0:
            mono = float(np.min(vals[:-1] - vals[1:]))
            out.append(_ge(f"ml_monotone_a{alpha}", mono, 0.0))
            out.append(_ge(f"ml_positive_a{alpha}", float(vals.min()), 0.0))
    return out


def check_ml_regimes(rng) -> list:
    worst = 0.0
    for alpha, gam in ((0.6, 1.0), (0.75, 0.75), (0.9, 1.2)):
        params = mlfunc.MLParams(alpha, gam, target_tol=1e-10)
        for x in (4.5, 5.0, 5.5):
            series_val, roundoff, conv = mlfunc.series_evaluation(params, -x)
            if not conv or roundoff > params.target_tol:
                continue
            other = mlfunc._negative_axis(alpha, gam, x, params.target_tol)
            worst = max(worst, abs(series_val.real - other))
    return [_le("ml_regime_consistency", worst, 10 * 1e-10)]


def check_spectral_density(rng) -> list:
    out = []
    worst_margin = np.inf
    min_h = np.inf
    for alpha in (0.25, 0.5, 0.75):
        for q1 in (0.5, 1.0, 2.0):
            for lam in (0.5, 1.0, 2.0):
                dens = fracode.make_spectral_density(alpha, q1, lam)
                margin = lam - dens.delta - q1 * dens.delta ** alpha - lam / 2.0
                worst_margin = min(worst_margin, margin / lam)
                rr = np.logspace(-3, 2, 40)
                min_h = min(min_h, float(np.min(fracode.spectral_density(dens, rr))))
    out.append(_ge("delta_condition_margin", worst_margin, -1e-12))
    out.append(_ge("spectral_density_positive", min_h, 0.0))
    ref = fracode.make_spectral_density(0.5, 1.0, 1.0)
    out.append(_le("spectral_density_value",
                   abs(fracode.spectral_density(ref, 1.0) - 1.0 / math.pi), 1e-15))
    return out


def check_ode_cross_method(rng) -> list:
    worst = 0.0
    grid = TimeGrid(0.0, 10.0, 5120)
    times = np.round(np.logspace(math.log10(0.1), 1.0, 12), 10)
    idx = np.clip(np.round(times / grid.tau).astype(int), 1, grid.n_steps)
    for (alpha, q1, lam) in ((0.25, 1.0, 1.0), (0.5, 0.5, 2.0), (0.75, 2.0, 0.5)):
        prob = fracode.FracOdeProblem(OrderSpec.constant(alpha, q1), lam, 1.0,
                                      horizon=10.0)
        l1 = fracode.solve_l1(prob, grid)
        dens = fracode.make_spectral_density(alpha, q1, lam, t_min=0.1)
        spec = fracode.solve_spectral(dens, 1.0, grid.points[idx])
        rel = np.abs(l1.states[idx] - spec.states) / np.abs(spec.states)
        worst = max(worst, float(rel.max()))
    return [_le("ode_cross_method", worst, 2e-3)]


def check_sandwich(rng) -> list:
    times = np.array([1.0, 10.0, 100.0, 1000.0])
    ok = True
    lo, hi = np.inf, 0.0
    for alpha in (0.25, 0.5, 0.75):
        for q1 in (0.5, 1.0, 2.0):
            for lam in (0.5, 1.0, 2.0):
                dens = fracode.make_spectral_density(alpha, q1, lam, t_min=1.0)
                traj = fracode.solve_spectral(dens, 1.0, times)
                consts = fracode.decay_constants(dens, 1.0)
                rep = analysis.sandwich_check(times, traj.states, consts, 1.0)
                ok = ok and rep.passed
                lo = min(lo, rep.lower_margin)
                hi = max(hi, rep.upper_margin)
    return [CheckResult("sandwich_grid", ok, hi, 1.0, "<="),
            _ge("sandwich_lower_margin", lo, 1.0)]


def check_max_principles(rng) -> list:
    grid = TimeGrid(0.0, 2.0, 1024)
    failures = 0
    for _ in range(10):
        alpha = float(rng.uniform(0.15, 0.85))
        q_lo = float(rng.uniform(0.3, 0.8))
        q_hi = q_lo + float(rng.uniform(0.1, 0.8))
        omega = float(rng.uniform(0.5, 4.0))
        spec = OrderSpec(
            terms=((alpha, lambda t, a=q_lo, b=q_hi, w=omega:
                    a + (b - a) * 0.5 * (1 + math.sin(w * t))),),
            bounds=(q_lo, q_hi))
        lam = float(rng.uniform(0.3, 3.0))
        hist = 1.0
        tol = 1e-6 * (1.0 + hist)
        neg = fracode.solve_l1(
            fracode.FracOdeProblem(spec, lam, -1.0, horizon=2.0), grid)
        if not fracode.max_principle_check(neg, spec, lam, tol).ok:
            failures += 1
        pos = fracode.solve_l1(
            fracode.FracOdeProblem(spec, lam, 1.0, horizon=2.0), grid)
        if not fracode.frac_derivative_sign_check(pos, spec, lam, tol).ok:
            failures += 1
    return [_le("max_principle_failures", failures, 0)]


def check_pde_reduction(rng) -> list:
    op = pde1d.build_operator(math.pi, 64, 1.0, 1.0)
    grid = TimeGrid(0.0, 1.0, 1024)
    spec = OrderSpec.constant(0.5, 1.0)
    phi1 = op.eigenvectors[:, 0].copy()
    prob = pde1d.MixedProblem(op=op, spec=spec, u0=phi1, horizon=1.0)
    traj = pde1d.solve_mixed_l1(prob, grid)
    scalar = fracode.solve_l1(
        fracode.FracOdeProblem(spec, float(op.eigenvalues[0]), 1.0, horizon=1.0),
        grid)
    rel = np.abs(traj.norms - np.abs(scalar.states)) / np.abs(scalar.states)
    return [_le("pde_single_mode_reduction", float(rel.max()), 1e-10)]


def check_picard(rng) -> list:
    op = pde1d.build_operator(math.pi, 64, 1.0, 1.0)
    grid = TimeGrid(0.0, 1.0, 512)
    spec = OrderSpec.constant(0.5, 1.0)
    u0 = op.x * (math.pi - op.x)
    prob = pde1d.MixedProblem(op=op, spec=spec, u0=u0, horizon=1.0)
    traj, report = pde1d.picard_solve(prob, grid, max_iter=30, tol=1e-8)
    stepped = pde1d.solve_mixed_l1(prob, grid)
    rel = np.abs(traj.norms[1:] - stepped.norms[1:]) / stepped.norms[1:]
    return [CheckResult("picard_converged", report.converged,
                        float(report.iterations), 30, "<="),
            _le("picard_residual", report.residual, 2e-8),
            _le("picard_vs_stepper", float(rel.max()), 5e-3)]


def check_analysis(rng) -> list:
    out = []
    t = np.logspace(0.1, 3.0, 40)
    fit = analysis.fit_decay(t, 3.0 * t ** (-0.4), (1.5, 1000.0))
    out.append(_le("fit_null_slope", abs(fit.slope + 0.4), 1e-12))
    grid = TimeGrid(0.0, 1.0, 256)
    env = analysis.gronwall_envelope(np.ones(grid.n_steps + 1), 1.0, 1.0, grid)
    out.append(_le("gronwall_classical",
                   float(np.max(np.abs(env - np.exp(grid.points)))), 1e-6))
    # simulate the Volterra inequality with equality and check it stays under
    beta, b = 0.5, 1.0
    v = np.ones(grid.n_steps + 1)
    for i in range(1, grid.n_steps + 1):
        sig = grid.points[i] - grid.points[:i]
        ker = sig ** (beta - 1.0)
        v[i] = 1.0 + b * float(np.dot(ker, v[:i])) * grid.tau
    env2 = analysis.gronwall_envelope(np.ones(grid.n_steps + 1), b, beta, grid)
    out.append(_ge("gronwall_volterra_margin", float(np.min(env2 - v)), -1e-9))
    return out


def check_energy(rng) -> list:
    op = pde1d.build_operator(math.pi, 64, 1.0, 1.0)
    spec = OrderSpec.constant(0.5, 1.0)
    phi1 = op.eigenvectors[:, 0].copy()
    prob = pde1d.MixedProblem(op=op, spec=spec, u0=phi1, horizon=2.0,
                              decay_mode=True)
    res = []
    for n in (512, 1024):
        grid = TimeGrid(0.0, 2.0, n)
        traj = pde1d.solve_mixed_l1(prob, grid)
        res.append(float(np.max(analysis.energy_residuals(
            traj, spec, float(op.eigenvalues[0])))))
    grow = pde1d.MixedProblem(op=op, spec=spec, u0=phi1, horizon=2.0,
                              c=2.0 * float(op.eigenvalues[0]))
    bad = pde1d.solve_mixed_l1(grow, TimeGrid(0.0, 2.0, 512))
    bad_res = float(np.max(analysis.energy_residuals(
        bad, spec, float(op.eigenvalues[0]))))
    return [_le("energy_residual", max(res), 1e-2),
            _le("energy_residual_refines", res[1], max(res[0], 1e-12)),
            _ge("energy_counterexample", bad_res, 0.1)]


_CHECKS = (
    check_l1_weights,
    check_caputo_basics,
    check_rl_semigroup,
    check_coercivity,
    check_ml_identities,
    check_kernel_identity,
    check_ml_sector,
    check_ml_regimes,
    check_spectral_density,
    check_ode_cross_method,
    check_sandwich,
    check_max_principles,
    check_pde_reduction,
    check_picard,
    check_analysis,
    check_energy,
)


def run_all(seed: int) -> list:
    """Run the whole suite; all randomness flows from PCG64(seed)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    results = []
    for check in _CHECKS:
        results.extend(check(rng))
    return results
