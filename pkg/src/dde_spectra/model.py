"""Parameter records, lag rescaling, branch logarithms, and validity diagnostics.

The solver works on the two-lag linear DDE

    x'(t) = alpha*x(t) + beta*x(t - tau1) + gamma*x(t - tau2),

rescaled so that the first lag has unit length.  All downstream series
machinery consumes the reduced parameters produced here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class SingleLagInputError(ValueError):
    """Raised when gamma == 0: the problem has one lag, use the lambert module."""


class SingularBranchError(ValueError):
    """Raised when the branch logarithm of gamma2 vanishes (gamma2 == 1 on branch 0)."""


@dataclass(frozen=True)
class ModelParams:
    """Original-time DDE coefficients (1/time) and the two positive lags."""

    alpha: float
    beta: float
    gamma: float
    tau1: float
    tau2: float

    def __post_init__(self):
        if not (self.tau1 > 0.0 and self.tau2 > 0.0):
            raise ValueError(f"lags must be positive, got tau1={self.tau1}, tau2={self.tau2}")
        if self.tau1 == self.tau2:
            raise ValueError("coincident lags: merge beta and gamma into a single-lag problem")


@dataclass(frozen=True)
class ReducedParams:
    """Unit-first-lag form: x'(t) = alpha1*x + beta1*x(t-1) + gamma1*x(t-tau)."""

    alpha1: float
    beta1: float
    gamma1: float
    tau: float
    beta2: float
    gamma2: float


@dataclass(frozen=True)
class Truncation:
    """Series truncation orders: outer sum up to m_max, inner sum up to k_max."""

    m_max: int = 8
    k_max: int = 1000

    def __post_init__(self):
        if self.m_max < 1:
            raise ValueError(f"m_max must be >= 1, got {self.m_max}")
        if self.k_max < 0:
            raise ValueError(f"k_max must be >= 0, got {self.k_max}")


@dataclass(frozen=True)
class BranchQuantities:
    """Per-branch inputs of the root expansion.

    L is the branch-j logarithm of gamma2; sigma, c and mu are the derived
    quantities that drive the double series for the correction term v.
    """

    j: int
    L: complex
    sigma: complex
    c: complex
    mu: complex


@dataclass(frozen=True)
class AssumptionDiagnostics:
    """Advisory record for the smallness conditions behind the expansion.

    ``ratio`` is |beta2 / (gamma2^(1/tau) * L)|; the expansion is trustworthy
    when it is small and mu, sigma are moderate.  Advisory only: nothing is
    blocked when ``ok`` is False.
    """

    ratio: float
    mu_abs: float
    sigma_abs: float
    ok: bool


def reduce(p: ModelParams) -> ReducedParams:
    """Rescale time by the first lag and fold alpha into the lagged coefficients.

    Parameters
    ----------
    p : ModelParams
        Original-time parameters; gamma must be nonzero.

    Returns
    -------
    ReducedParams
        alpha1 = alpha*tau1, beta1 = beta*tau1, gamma1 = gamma*tau1,
        tau = tau2/tau1, beta2 = beta1*exp(-alpha1), gamma2 = gamma1*exp(-alpha1*tau).

    Raises
    ------
    SingleLagInputError
        If gamma == 0 (degenerate two-lag problem; solve it with
        :func:`dde_spectra.lambert.single_lag_root` instead).
    """
    if p.gamma == 0.0:
        raise SingleLagInputError(
            "gamma == 0 reduces the problem to a single lag; use lambert.single_lag_root"
        )
    alpha1 = p.alpha * p.tau1
    beta1 = p.beta * p.tau1
    gamma1 = p.gamma * p.tau1
    tau = p.tau2 / p.tau1
    beta2 = beta1 * math.exp(-alpha1)
    gamma2 = gamma1 * math.exp(-alpha1 * tau)
    return ReducedParams(alpha1, beta1, gamma1, tau, beta2, gamma2)


def branch_log(z: complex, j: int) -> complex:
    """Branch-j logarithm: ln|z| + i*(Arg z + 2*pi*j), Arg principal in (-pi, pi]."""
    z = complex(z)
    if z == 0:
        raise ValueError("branch_log undefined at z = 0")
    return cmath.log(z) + 1j * (TWO_PI * j)


def branch_quantities(r: ReducedParams, j: int) -> BranchQuantities:
    """Evaluate the branch-j series inputs L, sigma, c, mu.

    The power in c uses the principal branch, and the outer logarithms in mu
    are principal; only L carries the branch index.

    Raises
    ------
    SingularBranchError
        If L == 0, i.e. gamma2 == 1 on branch 0; the expansion point is
        singular there and no perturbed value is substituted.
    """
    if r.gamma2 == 0.0:
        raise SingleLagInputError("gamma2 == 0: single-lag problem")
    L = branch_log(r.gamma2, j)
    if L == 0:
        raise SingularBranchError("gamma2 == 1 on branch 0: expansion point ln(gamma2) = 0 is singular")
    sigma = 1.0 / L
    c = (r.beta2 / r.gamma2) * complex(r.gamma2 * r.tau / L) ** ((r.tau - 1.0) / r.tau)
    mu = (cmath.log(r.tau) + cmath.log(1.0 / L)) / L - c
    return BranchQuantities(j=j, L=L, sigma=sigma, c=c, mu=mu)


def assumption_diagnostics(r: ReducedParams, j: int) -> AssumptionDiagnostics:
    """Report the smallness ratio and the magnitudes of mu and sigma for branch j.

    The advisory flag is ratio < 0.1 and |mu| < 0.5 and |sigma| < 1; these
    thresholds are engineering choices, not sharp convergence bounds.
    """
    b = branch_quantities(r, j)
    # principal power of gamma2^(1/tau); may overflow for tiny tau, which is
    # itself a faithful "assumption violated" signal
    try:
        denom = abs(complex(r.gamma2) ** (1.0 / r.tau)) * abs(b.L)
        ratio = abs(r.beta2) / denom if denom != 0.0 else math.inf
    except OverflowError:
        ratio = 0.0 if abs(r.beta2) < math.inf else math.inf
    mu_abs = abs(b.mu)
    sigma_abs = abs(b.sigma)
    ok = bool(ratio < 0.1 and mu_abs < 0.5 and sigma_abs < 1.0)
    return AssumptionDiagnostics(ratio=ratio, mu_abs=mu_abs, sigma_abs=sigma_abs, ok=ok)


def reduced_to_model(alpha1: float, beta2: float, gamma2: float, tau: float,
                     tau1: float = 1.0) -> ModelParams:
    """Embed reduced parameters back into original time with the given tau1.

    Convenience inverse of :func:`reduce` for callers that specify problems
    the way benchmark tables do: (alpha1, beta2, gamma2, tau).
    """
    if tau1 <= 0.0:
        raise ValueError("tau1 must be positive")
    alpha = alpha1 / tau1
    beta = beta2 * math.exp(alpha1) / tau1
    gamma = gamma2 * math.exp(alpha1 * tau) / tau1
    return ModelParams(alpha=alpha, beta=beta, gamma=gamma, tau1=tau1, tau2=tau * tau1)
