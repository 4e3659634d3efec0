"""The branch-root expansion: slot derivatives, h coefficients, the double series, roots.

Numerical strategy.  Every (m, k) term of the double series is a ratio of
enormous factors (rising factorials, Gamma ratios, powers of the slot scale),
and the sums over the internal (l, p, q) indices cancel many orders of
magnitude.  Assembling those sums in floating point costs 7-9 digits at the
default truncation, so the engine instead treats each term's numerator as an
exact polynomial: the k-dependent Gamma ratio is an integer polynomial in k,
and every Bell-polynomial product is a polynomial in c whose coefficients are
rationals in tau.  The bivariate numerator

    Q_m(k, c) = sum_{l,p,q} (sign/factorial weights) * k-poly * Bell-product

is accumulated once per m in exact rational arithmetic (all cancellation
happens there), then evaluated per branch with one complex Horner pass in c,
a vectorized Horner pass in k, and a single log-space exponential per term
that combines the rising-factorial, sigma-power, and denominator-power
contributions.  Bell products never depend on k, so the whole k sweep reuses
one coefficient table per m.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

try:
    from gmpy2 import mpq as _ratio
except ImportError:  # pragma: no cover - gmpy2 is optional, Fraction is exact too
    from fractions import Fraction as _ratio

from .combinatorics import DerivSeq, bell_deriv, bell_partial_seq
from .model import (
    AssumptionDiagnostics,
    BranchQuantities,
    ModelParams,
    Truncation,
    assumption_diagnostics,
    branch_quantities,
    reduce,
)

_EXP_MAX = 700.0  # past this, exp of the real log overflows a double


class SeriesOverflowError(ArithmeticError):
    """A term of the double series was non-finite despite log-space scaling."""

    def __init__(self, m: int, k: int, message: str | None = None):
        self.m = m
        self.k = k
        super().__init__(message or f"non-finite series term at (m={m}, k={k})")


@dataclass(frozen=True)
class Root:
    """One branch root with its reported residual and advisory diagnostics.

    ``residual`` is |s~ - alpha1 - beta1*exp(-s~) - gamma1*exp(-s~*tau)| at the
    rescaled eigenvalue s~ = s_original*tau1.  ``iterations`` is 0 for raw
    series roots and the Newton count for refined ones.
    """

    j: int | None
    s_rescaled: complex
    s_original: complex
    v: complex | None
    residual: float
    diagnostics: AssumptionDiagnostics | None = None
    iterations: int = 0
    converged: bool = True


def f2_deriv(i: int, c: complex, tau: float) -> complex:
    """Slot value i of the expansion: (-1)^i * (1 + c * tau^(-i)), i >= 1."""
    if i < 1:
        raise ValueError(f"slot index must be >= 1, got {i}")
    return (-1) ** i * (1.0 + c * tau ** (-float(i)))


def f2_deriv_seq(c: complex, tau: float) -> DerivSeq:
    """Memoizing provider of the slot values for one (c, tau) pair."""
    return DerivSeq(lambda i: f2_deriv(i, c, tau))


class _Poly:
    """Dense polynomial with exact rational coefficients, lowest degree first.

    Supports just enough arithmetic (+, *, scaling by ints/rationals,
    comparison with 0) for the Bell recursions in the combinatorics module to
    run unchanged over the polynomial ring.
    """

    __slots__ = ("co",)

    def __init__(self, co):
        self.co = list(co)

    def __add__(self, other):
        if not isinstance(other, _Poly):
            out = list(self.co)
            out[0] = out[0] + other
            return _Poly(out)
        a, b = self.co, other.co
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, v in enumerate(b):
            out[i] = out[i] + v
        return _Poly(out)

    __radd__ = __add__

    def __mul__(self, other):
        if not isinstance(other, _Poly):
            return _Poly([cf * other for cf in self.co])
        out = [_ratio(0)] * (len(self.co) + len(other.co) - 1)
        for i, a in enumerate(self.co):
            if a:
                for j, b in enumerate(other.co):
                    if b:
                        out[i + j] = out[i + j] + a * b
        return _Poly(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int,)) or type(other) is type(_ratio(0)):
            return all(cf == 0 for cf in self.co[1:]) and self.co[0] == other
        return NotImplemented

    def __ne__(self, other):
        eq = self.__eq__(other)
        return NotImplemented if eq is NotImplemented else not eq

    __hash__ = None


class _SeriesEngine:
    """Exact bivariate numerator tables Q_m(k, c) for one value of tau.

    The slot sequence holds degree-1 polynomials in c; running the shared
    Bell recursions over this ring yields the (l, p, q) products exactly, and
    the weights (sign, factorial ratios, and the integer k-polynomial from
    the k-dependent Gamma ratio) are folded in without any rounding.
    """

    def __init__(self, tau: float):
        self.tau = float(tau)
        tau_q = _ratio(*self.tau.as_integer_ratio())
        self.seq = DerivSeq(
            lambda i: _Poly([_ratio((-1) ** i), _ratio((-1) ** i) / tau_q**i]))
        self._tables: dict[int, list[list[float]]] = {}

    def _k_poly(self, m: int, l: int, p: int) -> _Poly:
        # (k+m) * Gamma(k+m+p) / Gamma(2+k+l) as an integer polynomial in k;
        # the lone non-polynomial case (l = m-1, p = 0) cancels to exactly 1
        if m + p - 1 >= l + 2:
            kp = _Poly([_ratio(m), _ratio(1)])
            for j in range(l + 2, m + p):
                kp = kp * _Poly([_ratio(j), _ratio(1)])
            return kp
        if m + p - 1 == l + 1:
            return _Poly([_ratio(m), _ratio(1)])
        return _Poly([_ratio(1)])

    def numerator_coeffs(self, m: int) -> list[list[float]]:
        """Coefficient table [dk][dc] of Q_m, rounded once to floats."""
        table = self._tables.get(m)
        if table is not None:
            return table
        fact = math.factorial
        acc: dict[tuple[int, int], object] = {}
        for l in range(m):
            for p in range(l + 1):
                kp = self._k_poly(m, l, p)
                for q in range(2 * m - 1 - l):
                    bb = bell_deriv(l, p, q, self.seq)
                    if bb == 0:
                        continue
                    ba = bell_partial_seq(2 * m - 2 - l - q, m - 1 - p, self.seq)
                    if ba == 0:
                        continue
                    w = _ratio((-1) ** p * fact(m - 1) * fact(m - p - 1),
                               fact(q) * fact(l) * fact(m - l - 1) * fact(2 * m - 2 - l - q))
                    cpoly = (ba * bb) * w
                    if not isinstance(cpoly, _Poly):  # both Bell factors degenerate to scalars
                        cpoly = _Poly([cpoly])
                    for dk, ck in enumerate(kp.co):
                        if not ck:
                            continue
                        for dc, cc in enumerate(cpoly.co):
                            if not cc:
                                continue
                            key = (dk, dc)
                            acc[key] = acc.get(key, _ratio(0)) + ck * cc
        dk_max = max(dk for dk, _ in acc)
        table = [[0.0] * m for _ in range(dk_max + 1)]
        try:
            for (dk, dc), val in acc.items():
                table[dk][dc] = float(val)
        except OverflowError as exc:
            raise SeriesOverflowError(m, 0, f"numerator coefficient overflow: {exc}")
        self._tables[m] = table
        return table


_ENGINES: dict[float, _SeriesEngine] = {}


def _engine(tau: float) -> _SeriesEngine:
    eng = _ENGINES.get(tau)
    if eng is None:
        if len(_ENGINES) > 64:
            _ENGINES.clear()
        eng = _SeriesEngine(tau)
        _ENGINES[tau] = eng
    return eng


def _substitute_c(table: list[list[float]], c: complex) -> tuple[np.ndarray, complex]:
    """Collapse Q_m(k, c) to k-coefficients at this c.

    Returns (coeffs over k, log_shift): for |c| > 1 the top c power is factored
    out and returned as a log-space shift so the Horner pass cannot overflow.
    """
    dc_max = len(table[0]) - 1
    out = np.empty(len(table), dtype=complex)
    if abs(c) <= 1.0:
        for dk, row in enumerate(table):
            acc = 0.0 + 0.0j
            for dc in range(dc_max, -1, -1):
                acc = acc * c + row[dc]
            out[dk] = acc
        return out, 0.0 + 0.0j
    w = 1.0 / c
    for dk, row in enumerate(table):
        acc = 0.0 + 0.0j
        for dc in range(dc_max + 1):
            acc = acc * w + row[dc]
        out[dk] = acc
    return out, dc_max * cmath.log(c)


def _numerators(table: list[list[float]], c: complex, karr: np.ndarray) -> tuple[np.ndarray, complex]:
    """Q_m(k, c) over the k array, as (values, log_shift)."""
    qk, shift = _substitute_c(table, c)
    vals = np.zeros(karr.shape, dtype=complex)
    for dk in range(len(qk) - 1, -1, -1):
        vals = vals * karr + qk[dk]
    return vals, shift


def _check_finite(b: BranchQuantities):
    for name, val in (("L", b.L), ("sigma", b.sigma), ("c", b.c), ("mu", b.mu)):
        val = complex(val)
        if not (math.isfinite(val.real) and math.isfinite(val.imag)):
            raise ValueError(f"branch quantity {name} is non-finite for branch {b.j}")


def h_mk(m: int, k: int, c: complex, tau: float) -> complex:
    """Series coefficient h_{m,k} for the given c and tau.

    The triple sum over (l, p, q) with the Gamma-ratio weights, divided by
    (-(1 + c/tau))^(2m+k-1); all Gamma arguments are positive integers inside
    the valid index ranges.
    """
    if m < 1 or k < 0:
        raise ValueError(f"need m >= 1 and k >= 0, got m={m}, k={k}")
    table = _engine(float(tau)).numerator_coeffs(m)
    vals, shift = _numerators(table, complex(c), np.array([k]))
    n = complex(vals[0])
    if n == 0:
        return 0.0 + 0.0j
    log_d = cmath.log(-(1.0 + complex(c) / tau))
    return cmath.exp(shift + cmath.log(n) - (2 * m + k - 1) * log_d)


def v_series(b: BranchQuantities, tau: float, t: Truncation) -> complex:
    """Truncated double series for the root correction v.

    sum_{k=0}^{k_max} sum_{m=1}^{m_max} m^(rising k) * h_{m,k}
        * mu^m / m! * sigma^k / k!,

    accumulated per fixed m over ascending k with compensated summation.

    Raises
    ------
    SeriesOverflowError
        If any term is non-finite despite the log-space assembly; the
        offending (m, k) is attached.
    ValueError
        If the branch quantities are non-finite (violated precondition).
    """
    _check_finite(b)
    if b.mu == 0:
        return 0.0 + 0.0j
    engine = _engine(float(tau))
    c = complex(b.c)
    log_mu = cmath.log(complex(b.mu))
    log_sigma = cmath.log(complex(b.sigma)) if b.sigma != 0 else None
    log_d = cmath.log(-(1.0 + c / tau))

    karr = np.arange(t.k_max + 1) if log_sigma is not None else np.arange(1)
    k_lg = gammaln(karr + 1)
    total = 0.0 + 0.0j
    for m in range(1, t.m_max + 1):
        vals, shift = _numerators(engine.numerator_coeffs(m), c, karr)
        const = (m * log_mu - (2 * m - 1) * log_d + shift
                 - math.lgamma(m) - math.lgamma(m + 1))
        base = (gammaln(m + karr) - k_lg) + const
        base = base + karr * (log_sigma - log_d) if log_sigma is not None else base - karr * log_d
        nz = vals != 0
        logs = np.where(nz, np.log(np.where(nz, vals, 1.0)), -np.inf) + base
        if np.any(logs.real > _EXP_MAX):
            k_bad = int(karr[np.argmax(logs.real > _EXP_MAX)])
            raise SeriesOverflowError(m, k_bad, "series term overflows double precision")
        terms = np.exp(logs)
        if not np.all(np.isfinite(terms[nz])):
            k_bad = int(karr[nz][~np.isfinite(terms[nz])][0])
            raise SeriesOverflowError(m, k_bad)
        total += complex(math.fsum(terms.real), math.fsum(terms.imag))
    return total


def root_series(p: ModelParams, j: int, t: Truncation) -> Root:
    """Branch-j eigenvalue from the truncated expansion, with residual attached.

    s~ = (L_j + ln(1/L_j) + ln(tau) + v_j)/tau + alpha1 in rescaled time and
    s = s~/tau1 in original time.  No accuracy is promised beyond the reported
    residual; refinement is a separate, explicit step (oracle module).
    """
    r = reduce(p)
    b = branch_quantities(r, j)
    diag = assumption_diagnostics(r, j)
    v = v_series(b, r.tau, t)
    s_t = (b.L + cmath.log(1.0 / b.L) + cmath.log(r.tau) + v) / r.tau + r.alpha1
    s = s_t / p.tau1
    return Root(j=j, s_rescaled=s_t, s_original=s, v=v,
                residual=abs(rescaled_residual(r, s_t)), diagnostics=diag)


def rescaled_residual(r, s_t: complex) -> complex:
    """Characteristic residual s~ - alpha1 - beta1*e^(-s~) - gamma1*e^(-s~*tau).

    Evaluated with numpy so that overflow produces an infinite residual
    instead of an exception.
    """
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        s_t = np.complex128(s_t)
        val = s_t - r.alpha1 - r.beta1 * np.exp(-s_t) - r.gamma1 * np.exp(-s_t * r.tau)
    return complex(val)
