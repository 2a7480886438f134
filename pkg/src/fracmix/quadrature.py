"""Quadrature for integrals with an algebraic endpoint singularity.

Both Laplace-type densities in this package (the negative-axis
Mittag-Leffler density and the relaxation spectral density) have the form
``r**w * f(r)`` on a cell ``(0, a]`` where ``f`` is smooth away from zero
but carries mild ``r**alpha``-type kinks at the origin.  A single Gauss
rule converges only algebraically on such integrands, so the cell is
covered by a geometrically graded mesh: Gauss-Legendre panels ``[a/2^(j+1),
a/2^j]`` where the integrand is analytic, plus one innermost Gauss-Jacobi
panel that absorbs the ``r**w`` weight exactly.  Accuracy is checked by
re-evaluating with a higher node count and escalating on disagreement.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import EvaluationError

#: number of geometric panels; 2^-60 leaves the Jacobi panel a ~1e-18
#: fraction of the cell, where the non-weight factors are flat
_LEVELS = 60


@lru_cache(maxsize=None)
def _legendre_01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def _jacobi_01(n: int, b: float):
    # nodes/weights for  int_0^1 u^b g(u) du
    x, w = roots_jacobi(n, 0.0, b)
    return (x + 1.0) / 2.0, w * 0.5 ** (b + 1.0)


def _graded_pass(f, w: float, a: float, n: int) -> float:
    x_leg, w_leg = _legendre_01(n)
    x_jac, w_jac = _jacobi_01(n, float(w))
    total = 0.0
    hi = a
    for _ in range(_LEVELS):
        lo = hi / 2.0
        r = lo + (hi - lo) * x_leg
        total += (hi - lo) * np.dot(w_leg, r ** w * f(r))
        hi = lo
    r = hi * x_jac
    total += hi ** (w + 1.0) * np.dot(w_jac, f(r))
    return total


def singular_power_integral(f, w: float, a: float, *, n: int = 32,
                            rel_budget: float = 1e-11) -> float:
    """Integrate ``r**w * f(r)`` over ``(0, a]``; requires ``w > -1``.

    ``f`` must accept an ndarray of positive abscissae.  The estimate is
    accepted once two node counts agree within ``rel_budget``; the node
    count escalates (up to 256) otherwise.
    """
    if a <= 0.0:
        return 0.0
    if w <= -1.0:
        raise ValueError(f"weight exponent must exceed -1, got {w}")
    coarse = _graded_pass(f, w, a, n)
    while True:
        n_ref = n + n // 2
        fine = _graded_pass(f, w, a, n_ref)
        if abs(fine - coarse) <= rel_budget * abs(fine) + 1e-300:
            return fine
        if n >= 256:
            raise EvaluationError(
                "singular-cell", complex(a),
                f"graded Gauss mesh stalled at n={n_ref} "
                f"(discrepancy {abs(fine - coarse):.3e})")
        n *= 2
        coarse = _graded_pass(f, w, a, n)
