"""Independent checks: characteristic residuals, damped Newton, contour quadrature, grids.

Nothing in this module consumes the series expansion's internals; roots are
verified against the characteristic function itself, and the contour oracle
re-derives the correction term v by direct quadrature of the logarithmic
derivative.  Agreement between the two routes is the library's accuracy
certificate.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import BranchQuantities, ModelParams
from .series import Root

_DERIV_FLOOR = 1e-30
_MAX_HALVINGS = 30


class DerivativeBreakdownError(ArithmeticError):
    """Newton derivative vanished (near-defective point); no step is possible."""


class ContourRootError(ArithmeticError):
    """A root of f sits on (or hugs) the quadrature circle even after shrinking."""


@dataclass(frozen=True)
class GridSpec:
    """Rectangular window of the complex plane with node counts per axis."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    n_re: int
    n_im: int

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("grid bounds must satisfy re_min < re_max and im_min < im_max")
        if self.n_re < 2 or self.n_im < 2:
            raise ValueError("need at least 2 nodes per axis")


def char_residual(p: ModelParams, s: complex) -> complex:
    """s - alpha - beta*exp(-s*tau1) - gamma*exp(-s*tau2), original time.

    Overflow yields an infinite value rather than an exception.
    """
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        s = np.complex128(s)
        val = s - p.alpha - p.beta * np.exp(-s * p.tau1) - p.gamma * np.exp(-s * p.tau2)
    return complex(val)


def _char_deriv(p: ModelParams, s: complex) -> complex:
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        s = np.complex128(s)
        val = 1.0 + p.beta * p.tau1 * np.exp(-s * p.tau1) + p.gamma * p.tau2 * np.exp(-s * p.tau2)
    return complex(val)


def _finite(z: complex) -> bool:
    return math.isfinite(z.real) and math.isfinite(z.imag)


def newton_refine(p: ModelParams, s0: complex, max_iter: int = 50,
                  tol: float = 1e-12) -> Root:
    """Damped Newton refinement of a characteristic-root estimate.

    Full Newton steps are halved (at most 30 times) until |g| decreases;
    convergence means |g(s)| <= tol in original time.  A seed that fails to
    converge within ``max_iter`` iterations returns a Root flagged
    ``converged=False`` -- no exception.

    Raises
    ------
    DerivativeBreakdownError
        If |g'(s)| falls below 1e-30 at the current iterate.
    """
    s = complex(s0)
    g = char_residual(p, s)
    iterations = 0
    converged = abs(g) <= tol if _finite(g) else False
    while not converged and iterations < max_iter:
        if not _finite(g):
            break  # hopeless region; report divergence below
        dg = _char_deriv(p, s)
        if abs(dg) < _DERIV_FLOOR:
            raise DerivativeBreakdownError(
                f"|g'({s})| < {_DERIV_FLOOR:g}; refinement cannot proceed")
        step = g / dg
        scale = 1.0
        s_next, g_next = s - step, char_residual(p, s - step)
        for _ in range(_MAX_HALVINGS):
            if _finite(g_next) and abs(g_next) < abs(g):
                break
            scale *= 0.5
            s_next = s - scale * step
            g_next = char_residual(p, s_next)
        s, g = s_next, g_next
        iterations += 1
        converged = _finite(g) and abs(g) <= tol
    residual = abs(g) * p.tau1 if _finite(g) else math.inf
    return Root(j=None, s_rescaled=s * p.tau1, s_original=s, v=None,
                residual=residual, diagnostics=None,
                iterations=iterations, converged=converged)


def v_contour(b: BranchQuantities, tau: float, n_nodes: int = 2048) -> complex:
    """Correction term v by trapezoidal quadrature of (1/2 pi i) * oint z f'/f dz.

    The circle radius starts at pi*min(1, tau); if the minimum of |f| over the
    quadrature nodes suggests a root on the contour, the radius shrinks by 10%
    up to three times.  The trapezoid rule is spectrally accurate here because
    the integrand is analytic in an annulus around the circle.

    Raises
    ------
    ContourRootError
        If a root stays on the contour after the allowed shrinks.
    """
    if n_nodes < 8:
        raise ValueError("need at least 8 quadrature nodes")
    c, sigma, mu = b.c, b.sigma, b.mu
    radius = math.pi * min(1.0, tau)

    theta = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
    ring = np.exp(1j * theta)
    for _ in range(4):
        z = radius * ring
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            ez = np.exp(-z)
            ezt = np.exp(-z / tau)
            f = ez + c * ezt - sigma * z - 1.0 - c - mu
            fp = -ez - (c / tau) * ezt - sigma
        scale = np.max(np.abs(f))
        if scale > 0 and np.min(np.abs(f)) > 1e-9 * scale:
            break
        radius *= 0.9
    else:
        raise ContourRootError("minimum |f| on the contour stayed tiny after 3 shrinks")

    v = complex(np.mean(z * z * fp / f))
    if abs(v) > radius:
        warnings.warn(
            f"|v|={abs(v):.3g} exceeds the contour radius {radius:.3g}; the enclosed-root "
            "hypothesis is violated and the value is unreliable", RuntimeWarning, stacklevel=2)
    return v


def transfer_grid(p: ModelParams, g: GridSpec) -> np.ndarray:
    """log10 of the transfer-function magnitude on a rectangular grid.

    Returns an (n_im, n_re) array, rows ordered by ascending imaginary part;
    entry [i, j] is log10(1/|char_residual|) at im_i, re_j, clamped to +/-16
    so exact roots stay finite.
    """
    re = np.linspace(g.re_min, g.re_max, g.n_re)
    im = np.linspace(g.im_min, g.im_max, g.n_im)
    s = re[None, :] + 1j * im[:, None]
    with np.errstate(over="ignore", invalid="ignore", under="ignore", divide="ignore"):
        h = s - p.alpha - p.beta * np.exp(-s * p.tau1) - p.gamma * np.exp(-s * p.tau2)
        vals = -np.log10(np.abs(h))
    vals = np.where(np.isnan(vals), 16.0, vals)  # |h| == 0 exactly on a root
    return np.clip(vals, -16.0, 16.0)
