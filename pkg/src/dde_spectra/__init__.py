"""Eigenvalues, stability scans, and time-domain checks for two-lag linear DDEs."""

from .combinatorics import (
    DerivSeq,
    bell_deriv,
    bell_partial,
    log_rising_over_factorial,
    rising_factorial,
    stirling1_unsigned,
)
from .dynamics import (
    HistoryFn,
    HopfScanReport,
    SpectralFit,
    Trajectory,
    blowfly_linearize,
    constant_history,
    hopf_hypotheses,
    hopf_scan,
    integrate_mos,
    spectral_fit,
)
from .lambert import lambert_w, single_lag_root, w_branch_series_terms
from .model import (
    AssumptionDiagnostics,
    BranchQuantities,
    ModelParams,
    ReducedParams,
    SingleLagInputError,
    SingularBranchError,
    Truncation,
    assumption_diagnostics,
    branch_log,
    branch_quantities,
    reduce,
    reduced_to_model,
)
from .oracle import GridSpec, char_residual, newton_refine, transfer_grid, v_contour
from .series import Root, SeriesOverflowError, f2_deriv, h_mk, root_series, v_series

__version__ = "0.1.0"

__all__ = [
    "AssumptionDiagnostics", "BranchQuantities", "DerivSeq", "GridSpec", "HistoryFn",
    "HopfScanReport", "ModelParams", "ReducedParams", "Root", "SeriesOverflowError",
    "SingleLagInputError", "SingularBranchError", "SpectralFit", "Trajectory",
    "Truncation", "assumption_diagnostics", "bell_deriv", "bell_partial",
    "blowfly_linearize", "branch_log", "branch_quantities", "char_residual",
    "constant_history", "f2_deriv", "h_mk", "hopf_hypotheses", "hopf_scan",
    "integrate_mos", "lambert_w", "log_rising_over_factorial", "newton_refine",
    "reduce", "reduced_to_model", "rising_factorial", "root_series", "single_lag_root",
    "spectral_fit", "stirling1_unsigned", "transfer_grid", "v_contour", "v_series",
    "w_branch_series_terms",
]
