"""Time-domain ground truth and the ecology application.

Method-of-steps integration supplies an oracle that knows nothing about the
spectrum; spectral reconstruction goes the other way, rebuilding the solution
from computed eigenvalues.  The blowfly helpers wrap the standard two-lag
population model and the stability scan over its second delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .model import ModelParams, Truncation, assumption_diagnostics, reduce
from .oracle import newton_refine
from .series import Root, root_series


@dataclass(frozen=True)
class HistoryFn:
    """History segment x(t) for t <= 0, with a short descriptive tag."""

    fn: Callable[[float], float]
    tag: str = ""

    def __call__(self, t: float) -> float:
        return self.fn(t)


def constant_history(value: float) -> HistoryFn:
    return HistoryFn(lambda _t: value, tag=f"const:{value:g}")


@dataclass(frozen=True)
class Trajectory:
    """Solution samples on the uniform grid t = 0, dt, ..., n*dt."""

    t: np.ndarray
    x: np.ndarray
    dt: float


@dataclass(frozen=True)
class SpectralFit:
    """Least-squares modal coefficients fitted on the history window."""

    js: tuple
    eigenvalues: tuple
    coefficients: np.ndarray
    window_residual: float

    def reconstruct(self, t) -> np.ndarray:
        """Evaluate sum_j C_j exp(s_j t) at the given times."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        s = np.asarray(self.eigenvalues, dtype=complex)
        return np.exp(t[:, None] * s[None, :]) @ self.coefficients


class RankDeficientBasisError(ValueError):
    """The exponential basis matrix lost rank (nearly coincident roots)."""


def _cubic_past(store: np.ndarray, n_known: int, dt: float, phi: HistoryFn, t: float) -> float:
    """Cubic Lagrange interpolation into the stored past (history for t <= 0)."""
    if t <= 0.0:
        return float(phi(t))
    i = int(math.floor(t / dt))
    if i + 2 > n_known:  # cannot happen when dt <= min(tau1, tau2)/4
        raise RuntimeError(f"past lookup at t={t} beyond computed frontier")
    theta = t / dt - i
    y = np.empty(4)
    for idx, node in enumerate(range(i - 1, i + 3)):
        y[idx] = phi(node * dt) if node < 0 else store[node]
    # Lagrange weights on nodes -1, 0, 1, 2 in local coordinates
    a, b = theta, theta - 1.0
    w0 = -a * b * (theta - 2.0) / 6.0
    w1 = (theta + 1.0) * b * (theta - 2.0) / 2.0
    w2 = -(theta + 1.0) * a * (theta - 2.0) / 2.0
    w3 = (theta + 1.0) * a * b / 6.0
    return float(w0 * y[0] + w1 * y[1] + w2 * y[2] + w3 * y[3])


def integrate_mos(p: ModelParams, phi: HistoryFn, T: float, dt: float) -> Trajectory:
    """Method-of-steps integration with classical RK4 and cubic past lookups.

    The step must satisfy dt <= min(tau1, tau2)/4 so every stage's delayed
    argument lies at least three grid cells behind the frontier.

    Raises
    ------
    ValueError
        If dt violates the step restriction.
    RuntimeError
        If the state becomes non-finite (the failing time is reported).
    """
    if dt <= 0.0 or dt > min(p.tau1, p.tau2) / 4.0:
        raise ValueError(f"dt must be in (0, min(tau1, tau2)/4] = (0, {min(p.tau1, p.tau2)/4.0:g}]")
    if T <= 0.0:
        raise ValueError("T must be positive")
    n = int(math.ceil(T / dt - 1e-12))
    store = np.empty(n + 1)
    store[0] = phi(0.0)

    def rhs(t: float, x: float, n_known: int) -> float:
        x1 = _cubic_past(store, n_known, dt, phi, t - p.tau1)
        x2 = _cubic_past(store, n_known, dt, phi, t - p.tau2)
        return p.alpha * x + p.beta * x1 + p.gamma * x2

    for i in range(n):
        t0 = i * dt
        x0 = store[i]
        k1 = rhs(t0, x0, i)
        k2 = rhs(t0 + dt / 2.0, x0 + dt * k1 / 2.0, i)
        k3 = rhs(t0 + dt / 2.0, x0 + dt * k2 / 2.0, i)
        k4 = rhs(t0 + dt, x0 + dt * k3, i)
        x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(x1):
            raise RuntimeError(f"state became non-finite at t = {(i + 1) * dt:g}")
        store[i + 1] = x1
    return Trajectory(t=np.arange(n + 1) * dt, x=store, dt=dt)


def spectral_fit(p: ModelParams, phi: HistoryFn, roots: Sequence[Root],
                 n_samples: int | None = None) -> SpectralFit:
    """Fit sum_j C_j exp(s_j t) to the history on [-max(tau1, tau2), 0].

    With ``n_samples`` equal to the number of roots this is plain collocation;
    the default oversamples four-fold (4*len(roots) + 1) and solves the least
    squares problem, which conditions the exponential basis much better.

    Raises
    ------
    RankDeficientBasisError
        If the basis matrix is rank deficient; the closest pair of eigenvalues
        is named in the message.
    """
    roots = list(roots)
    if not roots:
        raise ValueError("need at least one root")
    if n_samples is None:
        n_samples = 4 * len(roots) + 1
    if n_samples < len(roots):
        raise ValueError(f"n_samples={n_samples} < number of roots {len(roots)}")
    s = np.array([r.s_original for r in roots], dtype=complex)
    window = max(p.tau1, p.tau2)
    ts = np.linspace(-window, 0.0, n_samples)
    A = np.exp(ts[:, None] * s[None, :])
    b = np.array([phi(t) for t in ts], dtype=complex)
    coeffs, _res, rank, _sv = np.linalg.lstsq(A, b, rcond=None)
    if rank < len(roots):
        d = np.abs(s[:, None] - s[None, :]) + np.diag([np.inf] * len(s))
        i, k = np.unravel_index(np.argmin(d), d.shape)
        raise RankDeficientBasisError(
            f"basis rank {rank} < {len(roots)}; closest eigenvalue pair is "
            f"{s[i]} and {s[k]} (|difference| = {d[i, k]:.3e})")
    resid = A @ coeffs - b
    window_residual = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    return SpectralFit(js=tuple(r.j for r in roots), eigenvalues=tuple(s),
                       coefficients=coeffs, window_residual=window_residual)


def blowfly_linearize(r: float, a1: float, a2: float, tau1: float, tau2: float) -> ModelParams:
    """Linearization of the two-lag blowfly model about its positive equilibrium.

    x* = 1/(a1 + a2) and the perturbation obeys
    y'(t) = -r*x**a1*y(t - tau1) - r*x**a2*y(t - tau2).
    """
    if min(r, a1, a2, tau1, tau2) <= 0.0:
        raise ValueError("all blowfly parameters must be positive")
    xstar = 1.0 / (a1 + a2)
    return ModelParams(alpha=0.0, beta=-r * xstar * a1, gamma=-r * xstar * a2,
                       tau1=tau1, tau2=tau2)


@dataclass(frozen=True)
class HopfHypotheses:
    """Sufficiency conditions for a Hopf point in the second delay."""

    equal_gains: bool
    tau1_threshold: float
    satisfied: bool


def hopf_hypotheses(r: float, a1: float, a2: float, tau1: float) -> HopfHypotheses:
    xstar = 1.0 / (a1 + a2)
    threshold = 1.0 / (2.0 * xstar * r * a1)
    equal = a1 == a2
    return HopfHypotheses(equal_gains=equal, tau1_threshold=threshold,
                          satisfied=bool(equal and tau1 > threshold))


@dataclass(frozen=True)
class ScanPoint:
    tau2: float
    status: str  # "ok", "seed-failed", or "diverged"
    re_s0: float = math.nan
    im_s0: float = math.nan
    ratio: float = math.nan
    detail: str = ""


@dataclass(frozen=True)
class HopfScanReport:
    hypotheses: HopfHypotheses
    points: tuple
    crossings: tuple
    failures: int = 0


def _principal_branch_re(r: float, a1: float, a2: float, tau1: float, tau2: float,
                         t: Truncation) -> ScanPoint:
    p = blowfly_linearize(r, a1, a2, tau1, tau2)
    try:
        ratio = assumption_diagnostics(reduce(p), 0).ratio
    except Exception:
        ratio = math.nan
    try:
        seed = root_series(p, 0, t)
    except Exception as exc:  # overflowed series, singular branch, ...
        return ScanPoint(tau2=tau2, status="seed-failed", ratio=ratio, detail=str(exc))
    refined = newton_refine(p, seed.s_original)
    if not refined.converged:
        return ScanPoint(tau2=tau2, status="diverged", ratio=ratio,
                         detail=f"newton stalled after {refined.iterations} iterations")
    s = refined.s_original
    return ScanPoint(tau2=tau2, status="ok", re_s0=s.real, im_s0=s.imag, ratio=ratio)


def hopf_scan(r: float, a1: float, a2: float, tau1: float,
              tau2_range: tuple[float, float], n_grid: int,
              t: Truncation = Truncation()) -> HopfScanReport:
    """Scan Re(s0) of the refined principal-branch root over a grid of tau2.

    Every sign change between consecutive valid grid points is bracketed and
    bisected until |Re s0| <= 1e-8 (or the bracket collapses).  Grid points
    where the series seed or the refinement fails are marked and skipped; the
    scan always runs to completion.
    """
    lo, hi = tau2_range
    if not (0.0 < lo < hi):
        raise ValueError("tau2_range must satisfy 0 < lo < hi")
    if n_grid < 2:
        raise ValueError("need at least 2 grid points")
    hyp = hopf_hypotheses(r, a1, a2, tau1)
    grid = np.linspace(lo, hi, n_grid)
    points = [_principal_branch_re(r, a1, a2, tau1, float(x), t) for x in grid]

    crossings: list[float] = []
    prev = None
    for pt in points:
        if pt.status != "ok" or not math.isfinite(pt.re_s0):
            continue
        if prev is not None and (pt.re_s0 < 0.0) != (prev.re_s0 < 0.0):
            crossings.append(_bisect_crossing(r, a1, a2, tau1, prev, pt, t))
        prev = pt
    failures = sum(1 for pt in points if pt.status != "ok")
    return HopfScanReport(hypotheses=hyp, points=tuple(points),
                          crossings=tuple(crossings), failures=failures)


def _bisect_crossing(r, a1, a2, tau1, lo_pt: ScanPoint, hi_pt: ScanPoint,
                     t: Truncation) -> float:
    a, fa = lo_pt.tau2, lo_pt.re_s0
    b, fb = hi_pt.tau2, hi_pt.re_s0
    best, best_val = (a, abs(fa)) if abs(fa) < abs(fb) else (b, abs(fb))
    for _ in range(200):
        mid = 0.5 * (a + b)
        pt = _principal_branch_re(r, a1, a2, tau1, mid, t)
        if pt.status != "ok":
            break  # keep the tightest bracket reachable through valid points
        if abs(pt.re_s0) < best_val:
            best, best_val = mid, abs(pt.re_s0)
        if abs(pt.re_s0) <= 1e-8 or (b - a) <= 1e-13 * max(1.0, abs(b)):
            return mid
        if (pt.re_s0 < 0.0) == (fa < 0.0):
            a, fa = mid, pt.re_s0
        else:
            b, fb = mid, pt.re_s0
    return best
