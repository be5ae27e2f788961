"""Small numeric kernel: polynomial roots, pivoted dense solves, linear ODEs.

Everything here is a pure function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    DegenerateLeadingCoefficient,
    MagnitudeOverflow,
    NonConvergence,
    SingularSystem,
    StepUnderflow,
)

OVERFLOW_NORM = 1e250


def poly_roots(coeffs, tol: float = 1e-9, max_iter: int = 50) -> np.ndarray:
    """All roots (with multiplicity) of a polynomial, highest degree first.

    Companion-matrix eigenvalues followed by a few Newton polishing steps.
    Roots are returned sorted by (Re, Im).
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size < 2:
        raise DegenerateLeadingCoefficient("need degree >= 1")
    if c[0] == 0:
        raise DegenerateLeadingCoefficient("leading coefficient is zero")
    c = c / c[0]
    roots = np.roots(c).astype(complex)
    dc = np.polyder(c)
    for i, r in enumerate(roots):
        for _ in range(max_iter):
            p = np.polyval(c, r)
            d = np.polyval(dc, r)
            if d == 0:
                break
            step = p / d
            r = r - step
            if abs(step) <= 1e-15 * max(1.0, abs(r)):
                break
        roots[i] = r
    powers = np.abs(roots)[:, None] ** np.arange(c.size - 1, -1, -1)[None, :]
    scale = powers @ np.abs(c)
    resid = np.abs(np.array([np.polyval(c, r) for r in roots]))
    if np.any(resid > tol * scale):
        raise NonConvergence(f"root residuals {resid} exceed tolerance")
    order = np.lexsort((roots.imag, roots.real))
    return roots[order]


def cond_estimate(a: np.ndarray, row_scale=None, col_scale=None) -> float:
    """1-norm condition number of the row/column equilibrated matrix.

    ``row_scale`` replaces the row maxima by externally known magnitudes, and
    ``col_scale`` the column maxima of the row-scaled matrix, so that a row or
    column which is small as a whole still counts as near-singular.
    """
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return 1.0
    scaled = _equilibrate(a, row_scale, col_scale)[0]
    if scaled is None:
        return np.inf
    # max(|B|, 1) |B^-1|: equals cond(B) after plain equilibration (|B| >= 1)
    # and stays meaningful when external scales leave B uniformly small
    with np.errstate(all="ignore"):
        try:
            c = max(np.linalg.norm(scaled, 1), 1.0) * np.linalg.norm(np.linalg.inv(scaled), 1)
        except np.linalg.LinAlgError:
            return np.inf
    return float(c) if np.isfinite(c) else np.inf


def _equilibrate(a, row_scale=None, col_scale=None):
    rmax = np.max(np.abs(a), axis=1) if row_scale is None else np.asarray(row_scale, dtype=float)
    if np.any(rmax == 0):
        return None, None, None
    r = 1.0 / rmax
    b = a * r[:, None]
    cmax = np.max(np.abs(b), axis=0) if col_scale is None else np.asarray(col_scale, dtype=float)
    if np.any(cmax == 0):
        return None, None, None
    c = 1.0 / cmax
    return b * c[None, :], r, c


def solve_dense(a, b, max_cond: float = 1e12, row_scale=None, col_scale=None):
    """Solve ``a @ x = b`` with partial pivoting after equilibration.

    Returns ``(x, cond)`` where ``cond`` is the equilibrated 1-norm condition
    estimate (see :func:`cond_estimate`). Raises :class:`SingularSystem`
    above ``max_cond``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if b.shape[0] != a.shape[0]:
        raise ValueError("dimension mismatch")
    if a.shape[0] == 0:
        return b.copy(), 1.0
    scaled, r, c = _equilibrate(a, row_scale, col_scale)
    if scaled is None:
        raise SingularSystem("matrix has a zero row or column")
    cond = cond_estimate(a, row_scale, col_scale)
    if not np.isfinite(cond) or cond > max_cond:
        raise SingularSystem(f"condition estimate {cond:.3g} exceeds {max_cond:.1g}")
    rb = b * (r[:, None] if b.ndim == 2 else r)
    y = np.linalg.solve(scaled, rb)
    x = y * (c[:, None] if b.ndim == 2 else c)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("non-finite solution")
    return x, cond


@dataclass(frozen=True)
class OdeSystem:
    """Linear system y' = A(x) y with a user supplied coefficient matrix."""

    dim: int
    coefficient: Callable[[float], np.ndarray]


def integrate_linear_ode(sys: OdeSystem, y0, x0: float, x1: float,
                         rel_tol: float = 1e-12, abs_tol: float | None = None):
    """Propagate ``y0`` (vector, or matrix of column vectors) from x0 to x1.

    Uses the embedded 8(5,3) Dormand-Prince pair. A running solution norm
    above 1e250 raises :class:`MagnitudeOverflow`.
    """
    if not (0 < x0 <= x1):
        raise ValueError("need 0 < x0 <= x1")
    y0 = np.asarray(y0, dtype=complex)
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state is not finite")
    if x0 == x1:
        return y0.copy()
    shape = y0.shape
    if shape[0] != sys.dim:
        raise ValueError("initial state has wrong leading dimension")
    cols = 1 if y0.ndim == 1 else shape[1]

    def rhs(x, y):
        return (sys.coefficient(x) @ y.reshape(sys.dim, cols)).ravel()

    def overflow(x, y):
        return OVERFLOW_NORM - np.max(np.abs(y))

    overflow.terminal = True
    if abs_tol is None:
        abs_tol = rel_tol * 1e-6 * max(np.max(np.abs(y0)), 1e-300)
    sol = solve_ivp(rhs, (x0, x1), y0.ravel(), method="DOP853", rtol=rel_tol,
                    atol=abs_tol, events=overflow)
    if sol.status == 1:
        raise MagnitudeOverflow(f"solution norm exceeded {OVERFLOW_NORM:.0e} at x={sol.t[-1]:.6g}")
    if sol.status != 0:
        raise StepUnderflow(sol.message)
    return sol.y[:, -1].reshape(shape)
