"""Lambert W on every branch, and the single-lag eigenvalue map built on it.

Series expansions provide initial guesses only; every returned value is
certified by Halley refinement of w*exp(w) = x down to a relative residual of
1e-12, so truncation error in the guesses never leaks into results.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from .combinatorics import stirling1_unsigned

_BRANCH_POINT = -1.0 / math.e
_MACLAURIN_TERMS = 18
_HALLEY_MAX_ITER = 60


@dataclass(frozen=True)
class WBranchSeriesTerms:
    """Truncated coefficient table for the asymptotic branch expansion.

    C_{l,m} = (-1)^l * s(l+m, l+1) / m! with s the unsigned Stirling numbers
    of the first kind; stored as exact rationals.
    """

    l_max: int
    m_max: int
    coeffs: dict[tuple[int, int], Fraction]

    def coeff(self, l: int, m: int) -> Fraction:
        return self.coeffs[(l, m)]


def w_branch_series_terms(l_max: int, m_max: int) -> WBranchSeriesTerms:
    """Build the exact C_{l,m} table for 0 <= l <= l_max, 1 <= m <= m_max."""
    coeffs = {
        (l, m): Fraction((-1) ** l * stirling1_unsigned(l + m, l + 1), math.factorial(m))
        for l in range(l_max + 1)
        for m in range(1, m_max + 1)
    }
    return WBranchSeriesTerms(l_max=l_max, m_max=m_max, coeffs=coeffs)


_ASYMP = w_branch_series_terms(4, 4)


def _maclaurin_w0(x: complex) -> complex:
    # principal-branch Maclaurin sum, good well inside |x| < 1/e
    acc = 0.0 + 0.0j
    for n in range(1, _MACLAURIN_TERMS + 1):
        acc += (-n) ** (n - 1) / math.factorial(n) * x**n
    return acc


def _asymptotic_seed(x: complex, j: int) -> complex:
    # ln_j(x) - ln(ln_j(x)) plus the C_{l,m} correction series
    big_l = cmath.log(x) + 2j * math.pi * j
    little_l = cmath.log(big_l)
    w = big_l - little_l
    for l in range(_ASYMP.l_max + 1):
        for m in range(1, _ASYMP.m_max + 1):
            w += float(_ASYMP.coeff(l, m)) * little_l**m / big_l ** (l + m)
    return w


def _branch_point_seed(x: complex, j: int) -> complex:
    # Puiseux expansion around the branch point shared by branches 0 and -1
    p = cmath.sqrt(2.0 * (math.e * x + 1.0))
    if j == -1:
        p = -p
    return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3


def _initial_guess(x: complex, j: int) -> complex:
    if j in (0, -1) and abs(x - _BRANCH_POINT) < 0.2:
        return _branch_point_seed(x, j)
    if j == 0:
        if abs(x) < 0.3:
            return _maclaurin_w0(x)
        if abs(x) < 4.0:
            return cmath.log(1.0 + x)  # crude but inside the Halley basin
    return _asymptotic_seed(x, j)


def _halley(x: complex, w: complex, tol: float) -> tuple[complex, bool]:
    target = tol * max(abs(x), 1e-290)
    for _ in range(_HALLEY_MAX_ITER):
        try:
            ew = cmath.exp(w)
        except OverflowError:
            return w, False
        f = w * ew - x
        if abs(f) <= target:
            return w, True
        fp = ew * (1.0 + w)
        fpp = ew * (2.0 + w)
        denom = fp - f * fpp / (2.0 * fp) if fp != 0 else fpp
        if denom == 0:
            return w, False
        w = w - f / denom
    try:
        return w, abs(w * cmath.exp(w) - x) <= target
    except OverflowError:
        return w, False


def _in_strip(w: complex, j: int) -> bool:
    return (2 * j - 1) * math.pi < w.imag <= (2 * j + 1) * math.pi


def lambert_w(j: int, x: complex, tol: float = 1e-12) -> complex:
    """Branch-j Lambert W: the solution of w*exp(w) = x with Im(w) in strip j.

    Initial guesses come from the principal Maclaurin series (small |x|,
    branch 0), the branch-point expansion (branches 0/-1 near -1/e), or the
    logarithmic branch expansion; Halley iteration then drives the residual
    below ``tol`` relative.

    Raises
    ------
    ValueError
        For x == 0 on any branch other than 0 (logarithmic singularity).
    ArithmeticError
        If refinement fails to meet the residual target.
    """
    x = complex(x)
    if x == 0:
        if j == 0:
            return 0.0 + 0.0j
        raise ValueError(f"branch {j} of Lambert W has a singularity at x = 0")
    if j in (0, -1) and abs(x - _BRANCH_POINT) < 1e-6:
        warnings.warn("x is very close to the branch point -1/e; accuracy is reduced",
                      RuntimeWarning, stacklevel=2)

    w, ok = _halley(x, _initial_guess(x, j), tol)
    off_axis = not (x.real < 0 and x.imag == 0)
    if (not ok) or (off_axis and not _in_strip(w, j)):
        w2, ok2 = _halley(x, _asymptotic_seed(x, j), tol)
        if ok2 and (not off_axis or _in_strip(w2, j)):
            return w2
        if not ok:
            raise ArithmeticError(f"Lambert W refinement failed for branch {j} at x={x}")
        warnings.warn(f"Lambert W value for branch {j} at x={x} lies outside the "
                      "standard strip", RuntimeWarning, stacklevel=2)
    return w


def single_lag_root(alpha: float, beta: float, tau: float, j: int) -> complex:
    """Branch-j eigenvalue of x'(t) = alpha*x(t) + beta*x(t - tau).

    s = (1/tau) * W_j(beta*tau*exp(-alpha*tau)) + alpha.

    Raises
    ------
    ValueError
        If beta == 0 (no delayed term; the spectrum is just {alpha}).
    ArithmeticError
        If the certified residual exceeds 1e-10.
    """
    if beta == 0.0:
        raise ValueError("beta == 0 has no delay term; the only eigenvalue is alpha")
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    x = beta * tau * math.exp(-alpha * tau)
    s = lambert_w(j, x) / tau + alpha
    residual = abs(s - alpha - beta * cmath.exp(-s * tau))
    if residual > 1e-10:
        raise ArithmeticError(
            f"single-lag root residual {residual:.3e} exceeds 1e-10 on branch {j}")
    return s
