"""Mixed-order time-fractional diffusion: solvers and decay certification.

The package solves ``u' + q(t) D^alpha u = -Au + c u + f`` on a 1D
Dirichlet interval by three mutually verifying routes (implicit L1 time
stepping, modal spectral-density quadrature, Picard fixed-point iteration)
and certifies the sharp ``t^-alpha`` long-time decay of the solution norm.
"""

from .analysis import DecayFit, SandwichReport, energy_residuals, fit_decay, \
    gronwall_envelope, sandwich_check
from .errors import (EllipticityError, EvaluationError, FracmixError,
                     SingularSystemError, TruncationError, ValidationError)
from .fraccalc import (L1Weights, OrderSpec, TimeGrid, Trajectory, caputo_l1,
                       coercivity_gap, multi_term_apply, rl_integral)
from .fracode import (DecayConstants, FracOdeProblem, SpectralDensity, Verdict,
                      decay_constants, frac_derivative_sign_check,
                      make_spectral_density, max_principle_check, solve_l1,
                      solve_spectral, spectral_density)
from .mlfunc import MLParams, exp_kernel_value, mittag_leffler, \
    ml_derivative_residuals
from .pde1d import (DecayCheck, EllipticOp1D, MixedProblem, PicardReport,
                    build_operator, decay_run, duhamel_source, modal_oracle,
                    picard_solve, semigroup_apply, solve_mixed_l1)

__version__ = "0.1.0"

__all__ = [
    "DecayCheck", "DecayConstants", "DecayFit", "EllipticOp1D",
    "EllipticityError", "EvaluationError", "FracOdeProblem", "FracmixError",
    "L1Weights", "MLParams", "MixedProblem", "OrderSpec", "PicardReport",
    "SandwichReport", "SingularSystemError", "SpectralDensity", "TimeGrid",
    "Trajectory", "TruncationError", "ValidationError", "Verdict",
    "build_operator", "caputo_l1", "coercivity_gap", "decay_constants",
    "decay_run", "duhamel_source", "energy_residuals", "exp_kernel_value",
    "fit_decay", "frac_derivative_sign_check", "gronwall_envelope",
    "make_spectral_density", "max_principle_check", "mittag_leffler",
    "ml_derivative_residuals", "modal_oracle", "multi_term_apply",
    "picard_solve", "rl_integral", "sandwich_check", "semigroup_apply",
    "solve_l1", "solve_mixed_l1", "solve_spectral", "spectral_density",
]
