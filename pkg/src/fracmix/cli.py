"""Command-line front end.

Usage::

    fracmix <mode> --config <path> [--out <dir>] [--seed <n>] [--plot]

Modes: ``ml-eval``, ``ode``, ``pde``, ``decay``, ``verify``, ``compare``.
Configs are flat ``key = value`` text with ``#`` comments and no nesting;
unknown keys are rejected.  Each run writes ``<label>.csv`` (self-described
by a leading ``#`` comment with the resolved config, 17 significant digits)
and ``<label>_report.txt`` with machine-parseable ``key=value`` lines, and
with ``--plot`` also renders ``<label>.png`` next to them.  Outputs are
byte-identical for identical (config, seed).

Exit codes: 0 success, 1 verify-suite failure, 2 validation error,
3 solver-level failure (Picard non-convergence, tail-bound breach).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, fracode, pde1d, verify as verify_mod
from .errors import EvaluationError, FracmixError, TruncationError, ValidationError
from .fraccalc import OrderSpec, TimeGrid
from .mlfunc import MLParams, mittag_leffler

_REQUIRED = object()


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValidationError(f"expected a boolean, got {s!r}")


_COMMON = {
    "label": (str, None),
    "seed": (int, 0),
}

_MODE_KEYS = {
    "ml-eval": {
        "alpha": (float, _REQUIRED), "gamma": (float, _REQUIRED),
        "x_min": (float, 0.01), "x_max": (float, 1e4), "n_points": (int, 60),
        "series_radius": (float, 5.0), "target_tol": (float, 1e-10),
        **_COMMON,
    },
    "ode": {
        "alpha": (float, _REQUIRED), "q1": (float, _REQUIRED),
        "lam": (float, _REQUIRED), "horizon": (float, _REQUIRED),
        "n_steps": (int, _REQUIRED), "v0": (float, 1.0),
        "compare_spectral": (_parse_bool, True), "n_compare": (int, 25),
        "t_compare_min": (float, 0.1),
        **_COMMON,
    },
    "pde": {
        "alpha": (float, _REQUIRED), "q1": (float, _REQUIRED),
        "length": (float, _REQUIRED), "n_x": (int, _REQUIRED),
        "horizon": (float, _REQUIRED), "n_steps": (int, _REQUIRED),
        "a_const": (float, 1.0), "c_const": (float, 0.0),
        "f_const": (float, 0.0), "u0": (str, "sin"),
        "method": (str, "l1"), "picard_tol": (float, 1e-8),
        "max_iter": (int, 25),
        **_COMMON,
    },
    "decay": {
        "alpha": (float, _REQUIRED), "q1": (float, _REQUIRED),
        "length": (float, _REQUIRED), "n_x": (int, _REQUIRED),
        "a_const": (float, 1.0), "c_const": (float, 0.0), "u0": (str, "sin"),
        "t_min": (float, 100.0), "t_max": (float, 1e4),
        "n_points": (int, 30), "t0": (float, 1.0),
        **_COMMON,
    },
    "verify": dict(_COMMON),
    "compare": {
        "alpha": (float, _REQUIRED), "q1": (float, _REQUIRED),
        "length": (float, _REQUIRED), "n_x": (int, _REQUIRED),
        "horizon": (float, _REQUIRED), "n_steps": (int, _REQUIRED),
        "a_const": (float, 1.0), "c_const": (float, 0.0), "u0": (str, "sin"),
        "t_compare_min": (float, 0.1), "n_compare": (int, 25),
        **_COMMON,
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, typed configuration for one CLI run."""

    mode: str
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def label(self) -> str:
        return self.values.get("label") or self.mode

    def resolved_line(self) -> str:
        items = [f"mode={self.mode}"]
        for key in sorted(self.values):
            val = self.values[key]
            if val is None:
                continue
            items.append(f"{key}={_fmt(val)}")
        return " ".join(items)


def parse_config_text(text: str, mode: str) -> ExperimentConfig:
    if mode not in _MODE_KEYS:
        raise ValidationError(
            f"unknown mode {mode!r}; expected one of {sorted(_MODE_KEYS)}")
    table = _MODE_KEYS[mode]
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValidationError(f"line {lineno}: expected 'key = value'")
        key, value = body.split("=", 1)
        key, value = key.strip(), value.strip()
        if key in raw:
            raise ValidationError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    unknown = sorted(set(raw) - set(table))
    if unknown:
        raise ValidationError(f"unknown keys for mode {mode}: {', '.join(unknown)}")
    values = {}
    for key, (cast, default) in table.items():
        if key in raw:
            try:
                values[key] = cast(raw[key])
            except ValidationError:
                raise
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"key {key!r}: {exc}") from exc
        elif default is _REQUIRED:
            raise ValidationError(f"mode {mode} requires key {key!r}")
        else:
            values[key] = default
    return ExperimentConfig(mode, values)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _write_csv(path: Path, config_line: str, header, rows) -> None:
    lines = [f"# {config_line}", ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_report(path: Path, config_line: str, items) -> None:
    lines = [f"# {config_line}"]
    lines += [f"{key}={_fmt(val)}" for key, val in items]
    path.write_text("\n".join(lines) + "\n")


def _u0_profile(name: str, op) -> np.ndarray:
    if name == "sin":
        return np.sin(math.pi * op.x / op.length)
    if name in ("parabola", "quadratic"):
        return op.x * (op.length - op.x)
    if name.startswith("mode:"):
        k = int(name.split(":", 1)[1])
        if not 1 <= k <= op.n_x:
            raise ValidationError(f"mode index out of range: {k}")
        return op.eigenvectors[:, k - 1].copy()
    raise ValidationError(f"unknown u0 profile {name!r}; "
                          "use sin, parabola, or mode:<k>")


def _snap_log_times(t_lo: float, t_hi: float, count: int,
                    grid: TimeGrid) -> np.ndarray:
    pts = np.logspace(math.log10(t_lo), math.log10(t_hi), count)
    idx = np.unique(np.clip(np.round(pts / grid.tau).astype(int),
                            1, grid.n_steps))
    return idx


def _run_ml_eval(cfg: ExperimentConfig):
    params = MLParams(cfg["alpha"], cfg["gamma"],
                      cfg["series_radius"], cfg["target_tol"])
    xs = np.logspace(math.log10(cfg["x_min"]), math.log10(cfg["x_max"]),
                     cfg["n_points"])
    vals = np.array([mittag_leffler(params, -x).real for x in xs])
    product = (1.0 + xs) * np.abs(vals)
    rows = list(zip(xs, vals, product))
    report = [
        ("alpha", cfg["alpha"]), ("gamma", cfg["gamma"]),
        ("c_hat", float(product.max())),
        ("monotone", bool(np.all(np.diff(vals) <= 0.0))
         if cfg["gamma"] == 1.0 else "n/a"),
    ]
    return ["x", "ml_value", "sector_product"], rows, report, \
        ("loglog", xs, [("abs_ml_value", np.abs(vals)),
                        ("sector_product", product)])


def _run_ode(cfg: ExperimentConfig):
    spec = OrderSpec.constant(cfg["alpha"], cfg["q1"])
    prob = fracode.FracOdeProblem(spec, cfg["lam"], cfg["v0"],
                                  horizon=cfg["horizon"])
    grid = TimeGrid(0.0, cfg["horizon"], cfg["n_steps"])
    l1 = fracode.solve_l1(prob, grid)
    report = [("alpha", cfg["alpha"]), ("q1", cfg["q1"]), ("lam", cfg["lam"])]
    if cfg["compare_spectral"] and cfg["lam"] > 0.0 and cfg["v0"] != 0.0:
        idx = _snap_log_times(cfg["t_compare_min"], cfg["horizon"],
                              cfg["n_compare"], grid)
        times = grid.points[idx]
        dens = fracode.make_spectral_density(cfg["alpha"], cfg["q1"],
                                             cfg["lam"], t_min=float(times.min()))
        spectral = fracode.solve_spectral(dens, cfg["v0"], times)
        rel = np.abs(l1.states[idx] - spectral.states) / np.abs(spectral.states)
        rows = list(zip(times, l1.states[idx], spectral.states, rel))
        t0 = min(1.0, cfg["horizon"] / 2.0)
        consts = fracode.decay_constants(dens, t0)
        report += [("max_rel_diff", float(rel.max())),
                   ("c_upper", consts.c_upper), ("c_lower", consts.c_lower),
                   ("t0", t0)]
        return ["t", "v_l1", "v_spectral", "rel_diff"], rows, report, \
            ("loglog", times, [("l1", np.abs(l1.states[idx])),
                               ("spectral", np.abs(spectral.states))])
    stride = max(1, cfg["n_steps"] // 1000)
    rows = list(zip(l1.times[::stride], l1.states[::stride]))
    report.append(("final_value", float(l1.states[-1])))
    return ["t", "v_l1"], rows, report, \
        ("semilogy", l1.times[::stride], [("l1", np.abs(l1.states[::stride]))])


def _build_pde_problem(cfg: ExperimentConfig, decay_mode: bool = False):
    op = pde1d.build_operator(cfg["length"], cfg["n_x"], cfg["a_const"],
                              nu=cfg["a_const"])
    spec = OrderSpec.constant(cfg["alpha"], cfg["q1"])
    u0 = _u0_profile(cfg["u0"], op)
    c = cfg["c_const"] if cfg["c_const"] != 0.0 else None
    f = cfg.values.get("f_const", 0.0)
    f = f if f != 0.0 else None
    prob = pde1d.MixedProblem(op=op, spec=spec, u0=u0,
                              horizon=cfg.values.get("horizon", 1.0),
                              c=c, f=f, decay_mode=decay_mode)
    return op, prob


def _run_pde(cfg: ExperimentConfig):
    op, prob = _build_pde_problem(cfg)
    grid = TimeGrid(0.0, cfg["horizon"], cfg["n_steps"])
    report = [("alpha", cfg["alpha"]), ("q1", cfg["q1"]),
              ("lambda_1", float(op.eigenvalues[0])), ("method", cfg["method"])]
    if cfg["method"] == "picard":
        traj, rep = pde1d.picard_solve(prob, grid, max_iter=cfg["max_iter"],
                                       tol=cfg["picard_tol"])
        if not rep.converged:
            raise EvaluationError("picard", complex(cfg["horizon"]), rep.message)
        report += [("picard_iterations", rep.iterations),
                   ("picard_residual", rep.residual)]
    elif cfg["method"] == "l1":
        traj = pde1d.solve_mixed_l1(prob, grid)
    else:
        raise ValidationError(f"unknown method {cfg['method']!r}; use l1 or picard")
    if prob.f is None and cfg["c_const"] <= 0.0:
        res = analysis.energy_residuals(traj, prob.spec, float(op.eigenvalues[0]))
        report.append(("max_energy_residual", float(res.max())))
    report.append(("final_norm", float(traj.norms[-1])))
    stride = max(1, cfg["n_steps"] // 1000)
    rows = list(zip(traj.times[::stride], traj.norms[::stride]))
    return ["t", "norm"], rows, report, \
        ("semilogy", traj.times[::stride], [("norm", traj.norms[::stride])])


def _run_decay(cfg: ExperimentConfig):
    if cfg["c_const"] > 0.0:
        raise ValidationError("decay mode requires c_const <= 0")
    cfg.values["horizon"] = cfg["t_max"]
    op, prob = _build_pde_problem(cfg, decay_mode=True)
    times = np.logspace(math.log10(cfg["t_min"]), math.log10(cfg["t_max"]),
                        cfg["n_points"])
    traj, check = pde1d.decay_run(prob, times, t0=cfg["t0"])
    fit = analysis.fit_decay(traj.times, traj.norms,
                             (cfg["t_min"], cfg["t_max"]))
    rows = list(zip(traj.times, traj.norms, check.ratios))
    report = [
        ("alpha", cfg["alpha"]), ("q1", cfg["q1"]),
        ("lambda_1", float(op.eigenvalues[0])),
        ("fitted_slope", fit.slope), ("slope_target", -cfg["alpha"]),
        ("fit_rms_residual", fit.rms_residual),
        ("c_upper", check.constants.c_upper),
        ("c_lower", check.constants.c_lower),
        ("upper_bound_ok", check.upper_ok),
        ("upper_margin", check.upper_margin),
    ]
    fitline = np.exp(fit.intercept) * traj.times ** fit.slope
    return ["t", "norm", "ratio"], rows, report, \
        ("loglog", traj.times, [("norm", traj.norms), ("fit", fitline)])


def _run_compare(cfg: ExperimentConfig):
    op, prob = _build_pde_problem(cfg)
    grid = TimeGrid(0.0, cfg["horizon"], cfg["n_steps"])
    stepped = pde1d.solve_mixed_l1(prob, grid)
    idx = _snap_log_times(cfg["t_compare_min"], cfg["horizon"],
                          cfg["n_compare"], grid)
    times = grid.points[idx]
    modal = pde1d.modal_oracle(prob, times)
    rel = np.abs(stepped.norms[idx] - modal.norms) / np.abs(modal.norms)
    rows = list(zip(times, stepped.norms[idx], modal.norms, rel))
    report = [("alpha", cfg["alpha"]), ("q1", cfg["q1"]),
              ("max_rel_diff", float(rel.max()))]
    return ["t", "norm_l1", "norm_modal", "rel_diff"], rows, report, \
        ("loglog", times, [("l1", stepped.norms[idx]), ("modal", modal.norms)])


def _run_verify(cfg: ExperimentConfig, seed: int):
    results = verify_mod.run_all(seed)
    rows = [(r.name, r.value, r.threshold, r.direction,
             "pass" if r.passed else "fail") for r in results]
    passed = sum(r.passed for r in results)
    report = [(f"check.{r.name}", "pass" if r.passed else "fail")
              for r in results]
    ok = bool(passed == len(results))
    report += [("checks_total", len(results)), ("checks_passed", int(passed)),
               ("all_pass", ok), ("seed", seed)]
    return ["check", "value", "threshold", "direction", "status"], rows, \
        report, None, ok


def _render_figure(path: Path, label: str, figdata) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    kind, x, series = figdata
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    plot = ax.loglog if kind == "loglog" else ax.semilogy
    for name, y in series:
        safe = np.where(np.asarray(y) > 0, y, np.nan)
        plot(x, safe, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title(label)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def run(config: ExperimentConfig, out_dir: Path, seed: int,
        plot: bool = False) -> int:
    """Dispatch one experiment and write its artifacts; returns exit code."""
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = ExperimentConfig(config.mode, {**config.values, "seed": seed})
    ok = True
    if cfg.mode == "ml-eval":
        header, rows, report, figdata = _run_ml_eval(cfg)
    elif cfg.mode == "ode":
        header, rows, report, figdata = _run_ode(cfg)
    elif cfg.mode == "pde":
        header, rows, report, figdata = _run_pde(cfg)
    elif cfg.mode == "decay":
        header, rows, report, figdata = _run_decay(cfg)
    elif cfg.mode == "compare":
        header, rows, report, figdata = _run_compare(cfg)
    elif cfg.mode == "verify":
        header, rows, report, figdata, ok = _run_verify(cfg, seed)
    else:  # pragma: no cover - parse_config_text already rejects this
        raise ValidationError(f"unknown mode {cfg.mode!r}")
    line = cfg.resolved_line()
    label = cfg.label
    _write_csv(out_dir / f"{label}.csv", line, header, rows)
    _write_report(out_dir / f"{label}_report.txt", line, report)
    if plot and figdata is not None:
        _render_figure(out_dir / f"{label}.png", label, figdata)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracmix",
        description="Mixed-order time-fractional diffusion toolkit")
    parser.add_argument("mode", choices=sorted(_MODE_KEYS))
    parser.add_argument("--config", required=True, help="path to key=value config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="overrides the config seed")
    parser.add_argument("--plot", action="store_true",
                        help="also render a matplotlib figure per run")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f'error=validation detail="cannot read config: {exc}"',
              file=sys.stderr)
        return 2
    try:
        config = parse_config_text(text, args.mode)
        seed = args.seed if args.seed is not None else config["seed"]
        return run(config, Path(args.out), seed, plot=args.plot)
    except ValidationError as exc:
        print(f'error=validation detail="{exc}"', file=sys.stderr)
        return 2
    except (TruncationError, EvaluationError, FracmixError) as exc:
        print(f'error=solver detail="{exc}"', file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
