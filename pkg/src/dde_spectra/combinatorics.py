"""Partial Bell polynomials, their parameter derivatives, and exact integer helpers.

Everything here is pure; the only state is memo tables, which are scoped to a
single :class:`DerivSeq` (derivative sequences) or to a single recursive call
(plain Bell evaluation), so concurrent use is safe.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

_STIRLING1_ROWS: list[list[int]] = [[1]]  # row n holds s(n, 0..n), unsigned


def rising_factorial(m: int, k: int) -> int:
    """Exact rising factorial m*(m+1)*...*(m+k-1); empty product for k == 0."""
    if m < 1 or k < 0:
        raise ValueError(f"need m >= 1 and k >= 0, got m={m}, k={k}")
    out = 1
    for i in range(k):
        out *= m + i
    return out


def log_rising_over_factorial(m: int, k: int) -> float:
    """ln( m^(rising k) / k! ) without forming the huge integers.

    Equals ln C(m+k-1, k); safe for k in the thousands where the direct
    products overflow double precision.
    """
    if m < 1 or k < 0:
        raise ValueError(f"need m >= 1 and k >= 0, got m={m}, k={k}")
    return math.lgamma(m + k) - math.lgamma(m) - math.lgamma(k + 1)


def bell_partial(l: int, p: int, xs: Sequence) -> complex:
    """Partial Bell polynomial B_{l,p}(x_1, ..., x_{l-p+1}).

    Evaluated with the standard recurrence

        B_{l,p} = sum_{i=1}^{l-p+1} C(l-1, i-1) * x_i * B_{l-i, p-1},

    with B_{0,0} = 1 and B_{l,p} = 0 whenever l < 0, p < 0, l < p, or
    (p == 0 and l > 0).  Works for any numeric entry type (complex, Fraction,
    mpmath) since only integer binomials multiply the entries.

    Raises
    ------
    ValueError
        If the sequence is shorter than l - p + 1 when an entry is needed.
    """
    if l >= p >= 1 and len(xs) < l - p + 1:
        raise ValueError(f"B_({l},{p}) needs {l - p + 1} entries, got {len(xs)}")
    table: dict[tuple[int, int], complex] = {}

    def rec(li: int, pi: int):
        if li == 0 and pi == 0:
            return 1
        if li < 0 or pi < 0 or li < pi or (pi == 0 and li > 0):
            return 0
        key = (li, pi)
        if key not in table:
            acc = 0
            for i in range(1, li - pi + 2):
                acc += math.comb(li - 1, i - 1) * xs[i - 1] * rec(li - i, pi - 1)
            table[key] = acc
        return table[key]

    return rec(l, p)


class DerivSeq:
    """Cached provider of the slot values fed to the Bell polynomials.

    Index i >= 1 maps to the i-th slot value; :func:`bell_deriv` results are
    memoized on this object, so reusing one instance across many (l, p, q)
    queries shares all of the recursive work.
    """

    def __init__(self, fn: Callable[[int], complex]):
        self._fn = fn
        self._vals: dict[int, complex] = {}
        self._deriv_memo: dict[tuple[int, int, int], complex] = {}
        self._partial_memo: dict[tuple[int, int], complex] = {}

    def __call__(self, i: int) -> complex:
        v = self._vals.get(i)
        if v is None:
            v = self._fn(i)
            self._vals[i] = v
        return v

    def prefix(self, n: int) -> list:
        """First n slot values [x_1, ..., x_n]."""
        return [self(i) for i in range(1, n + 1)]


def bell_partial_seq(l: int, p: int, f: DerivSeq) -> complex:
    """B_{l,p} over the slots of ``f``, memoized on the sequence object."""
    if l < 0 or p < 0 or l < p or (p == 0 and l > 0):
        return 0 if (l, p) != (0, 0) else 1
    if l == 0 and p == 0:
        return 1
    memo = f._partial_memo
    out = memo.get((l, p))
    if out is None:
        out = bell_partial(l, p, f.prefix(l - p + 1))
        memo[(l, p)] = out
    return out


def bell_deriv(l: int, p: int, q: int, f: DerivSeq) -> complex:
    """q-th derivative of B_{l,p} along the slot-shift direction.

    When the slots hold a sequence of functions x_i(w) with x_i' = x_{i+1},
    this is d^q/dw^q B_{l,p}(x_1(w), ..., x_{l-p+1}(w)) evaluated at the point
    where the slots take the values f(1), f(2), ....  Recursion:

        q == 0:  B_{l,p}(f(1), ..., f(l-p+1))
        q >= 1:  sum_{r=1}^{l-p+1} C(l,r) sum_{s=0}^{q-1} C(q-1,s)
                     * bell_deriv(l-r, p-1, q-1-s, f) * f(1+r+s)

    with the zero cases l < 0, p < 0, l < p, or (p == 0 and l > 0).
    Results are memoized on ``f``.
    """
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    if l < 0 or p < 0 or (p == 0 and l > 0) or l < p:
        return 0
    key = (l, p, q)
    memo = f._deriv_memo
    if key in memo:
        return memo[key]
    if q == 0:
        out = bell_partial_seq(l, p, f)
    else:
        out = 0
        for r in range(1, l - p + 2):
            inner = 0
            for s in range(q):
                sub = bell_deriv(l - r, p - 1, q - 1 - s, f)
                if sub != 0:
                    inner += math.comb(q - 1, s) * sub * f(1 + r + s)
            out += math.comb(l, r) * inner
    memo[key] = out
    return out


def stirling1_unsigned(n: int, k: int) -> int:
    """Unsigned Stirling number of the first kind (permutations with k cycles).

    Exact integer arithmetic via s(n+1, k) = n*s(n, k) + s(n, k-1).
    """
    if n < 0 or k < 0:
        raise ValueError(f"need n, k >= 0, got n={n}, k={k}")
    if k > n:
        return 0
    while len(_STIRLING1_ROWS) <= n:
        m = len(_STIRLING1_ROWS) - 1
        row = _STIRLING1_ROWS[-1]
        nxt = [0] * (m + 2)
        for kk in range(m + 2):
            nxt[kk] = m * (row[kk] if kk <= m else 0) + (row[kk - 1] if 1 <= kk <= m + 1 else 0)
        _STIRLING1_ROWS.append(nxt)
    return _STIRLING1_ROWS[n][k]
